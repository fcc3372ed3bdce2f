"""Deterministic headless game engine: rules, map generation, stepping."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .config import HEAVY, LIGHT, ConfigError, GameConfig
from .mapgen import generate_map
from .setup import (best_placement, run_setup_phase, score_placement,
                    spawn_starting_robots)
from .state import (MOVE_DELTAS, NO_OWNER, RES_ICE, RES_ORE, RES_POWER,
                    RESOURCE_NAMES, TRANSFER_DELTAS, TRANSFER_FRACTIONS,
                    Board, CommandError, Factory, FactoryAction,
                    FactoryCommand, GameState, Outcome, Phase, Robot,
                    RobotAction, RobotCommand, state_hash)
from .step import EventLog, check_termination, resolve_collisions, step

_SEED_MASK = (1 << 64) - 1


def new_game(config: GameConfig, seed: Optional[int] = None) -> GameState:
    """Generate a map and run the setup phase; returns a ready normal-phase state."""
    game_seed = config.seed if seed is None else seed
    board = generate_map(game_seed, config)
    state = GameState(config=config, board=board)
    setup_rng = np.random.default_rng(
        np.random.SeedSequence([game_seed & _SEED_MASK, 1]))
    return run_setup_phase(state, setup_rng)


__all__ = [
    "Board", "CommandError", "ConfigError", "EventLog", "Factory",
    "FactoryAction", "FactoryCommand", "GameConfig", "GameState", "HEAVY",
    "LIGHT", "MOVE_DELTAS", "NO_OWNER", "Outcome", "Phase", "RES_ICE",
    "RES_ORE", "RES_POWER", "RESOURCE_NAMES", "Robot", "RobotAction",
    "RobotCommand", "TRANSFER_DELTAS", "TRANSFER_FRACTIONS",
    "best_placement", "check_termination", "generate_map", "new_game",
    "resolve_collisions", "run_setup_phase", "score_placement",
    "spawn_starting_robots", "state_hash", "step",
]

"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from gridrts.actions import compute_masks, actions_to_commands
from gridrts.engine import GameConfig, GameState, Phase, new_game, step


def small_config(**overrides) -> GameConfig:
    defaults = dict(map_size=16, factories_per_player=1, max_turns=200)
    defaults.update(overrides)
    return GameConfig(**defaults)


@pytest.fixture
def default_config() -> GameConfig:
    return GameConfig()


@pytest.fixture
def tiny_game() -> GameState:
    return new_game(small_config(), seed=3)


def sample_legal_maps(masks, rng: np.random.Generator):
    """Uniform sample over unmasked values, independent of the harness bots."""
    size = masks.robot_source.shape[0]
    noise = rng.random((22, size, size))
    robot_maps = np.zeros((5, size, size), dtype=np.int64)
    lo = 0
    for c, comp in enumerate(masks.robot_components()):
        k = comp.shape[0]
        scores = np.where(comp, noise[lo:lo + k], -1.0)
        robot_maps[c] = scores.argmax(axis=0)
        lo += k
    fscores = np.where(masks.factory_action, rng.random((4, size, size)), -1.0)
    factory_maps = fscores.argmax(axis=0)
    return robot_maps, factory_maps


def random_step(state: GameState, rng: np.random.Generator) -> list[dict]:
    """Advance one turn with uniformly sampled legal commands for both sides."""
    commands = []
    for player in (0, 1):
        masks = compute_masks(state, player)
        robot_maps, factory_maps = sample_legal_maps(masks, rng)
        cmds, dropped = actions_to_commands(robot_maps, factory_maps, masks, state)
        assert dropped == 0
        commands.append(cmds)
    _, events = step(state, commands[0], commands[1])
    return events


def random_reachable_states(count: int, seed: int, config: GameConfig = None,
                            max_turn: int = 60) -> list[GameState]:
    """Snapshots from random-legal play, spread over games and turns."""
    config = config or small_config()
    rng = np.random.default_rng(seed)
    states: list[GameState] = []
    game_seed = seed
    while len(states) < count:
        game_seed += 1
        state = new_game(config, seed=game_seed)
        snap_turns = set(rng.integers(0, max_turn, size=4).tolist())
        for turn in range(max_turn):
            if state.phase != Phase.NORMAL:
                break
            if turn in snap_turns:
                states.append(state.copy())
                if len(states) >= count:
                    break
            random_step(state, rng)
    return states

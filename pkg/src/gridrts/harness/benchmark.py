"""Throughput measurement: engine-only and engine-plus-policy stepping."""

from __future__ import annotations

import hashlib
import platform
import time

import numpy as np
import torch

from ..actions import actions_to_commands, compute_masks
from ..engine import (HEAVY, LIGHT, GameConfig, Phase, new_game,
                      spawn_starting_robots)
from ..engine import step as engine_step
from ..obs import encode_observation
from ..policy import GridPolicy, PolicyConfig, sample_actions
from .bots import RandomLegalBot

ROBOTS_PER_SIDE = 20


def _populate(state, robots_per_side: int = ROBOTS_PER_SIDE) -> None:
    """Spawn a half-light, half-heavy fleet near each player's factories."""
    spawn_starting_robots(state, kind=HEAVY, per_factory=1)
    for player in (0, 1):
        anchors = [f.center for f in state.player_factories(player)]
        if not anchors:
            continue
        free = np.argwhere((state.robot_grid == -1)
                           & (state.board.factory_occ == -1))
        dist = np.abs(free - np.array(anchors[0])).sum(axis=1)
        order = np.lexsort((free[:, 1], free[:, 0], dist))
        need = robots_per_side - len(state.player_robots(player))
        for i in range(max(0, need)):
            pos = tuple(int(v) for v in free[order[i]])
            if state.robot_grid[pos] != -1:
                continue
            kind = LIGHT if i % 2 == 0 else HEAVY
            state.add_robot(player, kind, pos,
                            power=state.config.battery_capacity[kind])


def run_benchmark(config: GameConfig, steps: int, with_policy: bool = False,
                  arch: PolicyConfig | None = None, seed: int = 0) -> dict:
    """Steps/s of random-legal play; optionally with a policy driving p0.

    Self-destruct is excluded from the random bots so the fleet stays near
    the configured ~20 robots per side for the whole measurement.
    """
    bots = [RandomLegalBot(np.random.default_rng(seed + player),
                           allow_self_destruct=False)
            for player in (0, 1)]
    policy = None
    generator = None
    if with_policy:
        torch.manual_seed(seed)
        policy = GridPolicy(arch or PolicyConfig())
        generator = torch.Generator().manual_seed(seed)

    game_seed = seed
    state = new_game(config, game_seed)
    _populate(state)
    done_steps = 0
    started = time.perf_counter()
    while done_steps < steps:
        if state.phase != Phase.NORMAL:
            game_seed += 1
            state = new_game(config, game_seed)
            _populate(state)
        commands = []
        for player in (0, 1):
            masks = compute_masks(state, player)
            if player == 0 and policy is not None:
                obs = encode_observation(state, player)
                robot_logits, factory_logits, _ = policy.forward_single(obs)
                sample = sample_actions(robot_logits, factory_logits, masks,
                                        generator=generator)
                cmds, dropped = actions_to_commands(
                    sample.robot_maps, sample.factory_maps, masks, state)
                assert dropped == 0
                commands.append(cmds)
            else:
                commands.append(bots[player].act(state, masks, player))
        engine_step(state, commands[0], commands[1])
        done_steps += 1
    elapsed = time.perf_counter() - started

    config_hash = hashlib.sha256(config.to_json().encode()).hexdigest()[:16]
    return {
        "variant": "engine+policy" if with_policy else "engine",
        "steps": done_steps,
        "seconds": round(elapsed, 4),
        "steps_per_s": round(done_steps / elapsed, 1) if done_steps else 0.0,
        "config_hash": config_hash,
        "hardware": f"{platform.machine()} / {platform.processor() or 'cpu'} "
                    f"/ {platform.platform()}",
    }


def format_report(report: dict) -> str:
    return "\n".join([
        f"variant       {report['variant']}",
        f"steps         {report['steps']}",
        f"seconds       {report['seconds']}",
        f"steps/s       {report['steps_per_s']}",
        f"config hash   {report['config_hash']}",
        f"hardware      {report['hardware']}",
    ])

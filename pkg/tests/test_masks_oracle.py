"""Mask soundness against the engine itself.

The oracle path is independent of compute_masks: it builds each candidate
command directly and executes it on a cloned state, accepting the engine's
verdict as ground truth.  Everything compute_masks declares legal must
execute cleanly.
"""

import numpy as np
import pytest

from gridrts.actions import actions_to_commands, compute_masks
from gridrts.engine import (CommandError, FactoryAction, FactoryCommand,
                            RobotAction, RobotCommand, step)

from conftest import random_reachable_states, sample_legal_maps


def _try_command(state, command, player):
    clone = state.copy()
    try:
        if player == 0:
            step(clone, [command], [])
        else:
            step(clone, [], [command])
    except CommandError as exc:
        return str(exc)
    return None


def _candidate_commands(masks, robot, y, x):
    """All (description, command) pairs the masks declare legal at a cell."""
    out = []
    at = masks.action_type[:, y, x]
    if at[RobotAction.MOVE]:
        for d in range(4):
            if masks.move_dir[d, y, x]:
                out.append(RobotCommand(robot, RobotAction.MOVE, direction=d))
    if at[RobotAction.TRANSFER]:
        for d in range(5):
            if not masks.transfer_dir[d, y, x]:
                continue
            for r in range(3):
                if masks.transfer_resource[r, y, x]:
                    out.append(RobotCommand(robot, RobotAction.TRANSFER,
                                            direction=d, amount=3, resource=r))
    for action in (RobotAction.PICKUP, RobotAction.DIG,
                   RobotAction.SELF_DESTRUCT):
        if at[action]:
            out.append(RobotCommand(robot, action))
    return out


def test_every_unmasked_robot_command_executes():
    checked = 0
    for state in random_reachable_states(40, seed=123):
        for player in (0, 1):
            masks = compute_masks(state, player)
            for y, x in np.argwhere(masks.robot_source):
                robot = int(state.robot_grid[y, x])
                for cmd in _candidate_commands(masks, robot, y, x):
                    error = _try_command(state, cmd, player)
                    assert error is None, f"masked-legal {cmd} failed: {error}"
                    checked += 1
    assert checked > 100


def test_every_unmasked_factory_command_executes():
    checked = 0
    for state in random_reachable_states(40, seed=321):
        for player in (0, 1):
            masks = compute_masks(state, player)
            for y, x in np.argwhere(masks.factory_source):
                fid = int(state.board.factory_occ[y, x])
                for action in range(4):
                    if not masks.factory_action[action, y, x]:
                        continue
                    cmd = FactoryCommand(fid, FactoryAction(action))
                    error = _try_command(state, cmd, player)
                    assert error is None, f"masked-legal {cmd} failed: {error}"
                    checked += 1
    assert checked > 50


def test_noop_always_legal_at_source_cells():
    for state in random_reachable_states(30, seed=11):
        for player in (0, 1):
            masks = compute_masks(state, player)
            src = masks.robot_source
            assert np.array_equal(masks.action_type[RobotAction.NOOP] & src, src)
            fsrc = masks.factory_source
            assert np.array_equal(
                masks.factory_action[FactoryAction.NOOP] & fsrc, fsrc)


def test_sampled_unmasked_joint_actions_step_without_error():
    rng = np.random.default_rng(9)
    for state in random_reachable_states(50, seed=777):
        commands = []
        for player in (0, 1):
            masks = compute_masks(state, player)
            maps = sample_legal_maps(masks, rng)
            cmds, dropped = actions_to_commands(*maps, masks, state)
            assert dropped == 0
            commands.append(cmds)
        step(state.copy(), commands[0], commands[1])


def test_param_components_never_all_false_at_source_cells():
    for state in random_reachable_states(30, seed=4242):
        for player in (0, 1):
            masks = compute_masks(state, player)
            src = masks.robot_source
            for comp in masks.robot_components():
                assert comp.any(axis=0)[src].all()

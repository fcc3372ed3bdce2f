import numpy as np
import pytest

from gridrts.engine import (HEAVY, LIGHT, GameConfig, Phase, RobotAction,
                            RobotCommand, new_game, resolve_collisions, step)
from gridrts.engine.state import NO_OWNER, Robot

from conftest import small_config


def _robots(*specs):
    """specs: (id, owner, kind, pos)"""
    return {rid: Robot(id=rid, owner=owner, kind=kind, pos=pos, power=100)
            for rid, owner, kind, pos in specs}


def _grid(size=8):
    return np.full((size, size), NO_OWNER, dtype=np.int8)


def test_single_move_to_empty_cell_survives():
    robots = _robots((0, 0, LIGHT, (2, 2)))
    survivors, destroyed = resolve_collisions({0: (2, 3)}, robots, _grid())
    assert destroyed == []
    assert survivors[0] == (2, 3)


def test_heavy_and_light_converge_light_destroyed():
    robots = _robots((0, 0, HEAVY, (2, 2)), (1, 1, LIGHT, (2, 4)))
    survivors, destroyed = resolve_collisions({0: (2, 3), 1: (2, 3)}, robots, _grid())
    assert destroyed == [1]
    assert survivors[0] == (2, 3)


def test_two_enemy_lights_converge_both_destroyed():
    robots = _robots((0, 0, LIGHT, (2, 2)), (1, 1, LIGHT, (2, 4)))
    _, destroyed = resolve_collisions({0: (2, 3), 1: (2, 3)}, robots, _grid())
    assert destroyed == [0, 1]


def test_two_enemy_heavies_converge_both_destroyed():
    robots = _robots((0, 0, HEAVY, (2, 2)), (1, 1, HEAVY, (2, 4)))
    _, destroyed = resolve_collisions({0: (2, 3), 1: (2, 3)}, robots, _grid())
    assert destroyed == [0, 1]


def test_moving_heavy_crushes_stationary_light():
    robots = _robots((0, 0, HEAVY, (2, 2)), (1, 1, LIGHT, (2, 3)))
    survivors, destroyed = resolve_collisions({0: (2, 3)}, robots, _grid())
    assert destroyed == [1]
    assert survivors[0] == (2, 3)


def test_same_owner_convergence_cancels_lower_id():
    robots = _robots((3, 0, LIGHT, (2, 2)), (7, 0, LIGHT, (2, 4)))
    survivors, destroyed = resolve_collisions({3: (2, 3), 7: (2, 3)}, robots, _grid())
    assert destroyed == []
    assert survivors[3] == (2, 2)   # cancelled back to origin
    assert survivors[7] == (2, 3)   # higher id wins the cell


def test_same_owner_stationary_blocks_mover():
    robots = _robots((3, 0, LIGHT, (2, 2)), (7, 0, LIGHT, (2, 3)))
    survivors, destroyed = resolve_collisions({3: (2, 3)}, robots, _grid())
    assert destroyed == []
    assert survivors[3] == (2, 2) and survivors[7] == (2, 3)


def test_cancellation_cascades_to_fixpoint():
    # 0 cancels into its origin, where enemy 2 is arriving: they then fight
    robots = _robots((0, 0, LIGHT, (2, 2)), (1, 0, LIGHT, (2, 4)),
                     (2, 1, LIGHT, (3, 2)))
    moves = {0: (2, 3), 1: (2, 3), 2: (2, 2)}
    survivors, destroyed = resolve_collisions(moves, robots, _grid())
    assert destroyed == [0, 2]
    assert survivors[1] == (2, 3)


def test_move_into_enemy_factory_footprint_is_cancelled():
    grid = _grid()
    grid[2, 3] = 1  # player 1 owns a factory cell there
    robots = _robots((0, 0, LIGHT, (2, 2)))
    survivors, destroyed = resolve_collisions({0: (2, 3)}, robots, grid)
    assert destroyed == []
    assert survivors[0] == (2, 2)


def test_swap_through_is_allowed():
    robots = _robots((0, 0, LIGHT, (2, 2)), (1, 1, LIGHT, (2, 3)))
    survivors, destroyed = resolve_collisions({0: (2, 3), 1: (2, 2)}, robots, _grid())
    assert destroyed == []
    assert survivors[0] == (2, 3) and survivors[1] == (2, 2)


def test_engine_move_updates_grid_and_positions():
    state = new_game(small_config(), seed=3)
    robot = state.add_robot(0, LIGHT, (8, 8), power=50)
    old = robot.pos
    step(state, [RobotCommand(robot.id, RobotAction.MOVE, direction=1)], [])
    assert robot.pos == (8, 9)
    assert state.robot_grid[old] == -1
    assert state.robot_grid[8, 9] == robot.id


def test_engine_collision_emits_destroy_events():
    state = new_game(small_config(), seed=3)
    a = state.add_robot(0, LIGHT, (8, 8), power=50)
    b = state.add_robot(1, LIGHT, (8, 10), power=50)
    cmds0 = [RobotCommand(a.id, RobotAction.MOVE, direction=1)]
    cmds1 = [RobotCommand(b.id, RobotAction.MOVE, direction=3)]
    _, events = step(state, cmds0, cmds1)
    destroyed = [e for e in events if e["type"] == "destroy_robot"]
    assert {e["unit"] for e in destroyed} == {a.id, b.id}
    assert all(e["cause"] == "collision" for e in destroyed)
    assert a.id not in state.robots and b.id not in state.robots
    assert state.robot_grid[8, 9] == -1

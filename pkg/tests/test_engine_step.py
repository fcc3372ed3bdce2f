import numpy as np
import pytest

from gridrts.engine import (HEAVY, LIGHT, CommandError, FactoryAction,
                            FactoryCommand, GameConfig, Outcome, Phase,
                            RobotAction, RobotCommand, new_game, state_hash,
                            step)
from gridrts.engine.state import RES_ICE, RES_ORE, RES_POWER
from gridrts.engine.step import _refine_amounts

from conftest import random_step, small_config


def heavy_on_ice(config=None, power=500):
    """Game with one own heavy standing on an ice cell."""
    state = new_game(config or small_config(), seed=3)
    ice_cells = np.argwhere(state.board.ice & (state.board.factory_occ == -1)
                            & (state.robot_grid == -1))
    pos = tuple(int(v) for v in ice_cells[0])
    robot = state.add_robot(0, HEAVY, pos, power=power)
    return state, robot


# --- all-NoOp starvation dynamics -----------------------------------------

def test_noop_game_ends_at_exactly_turn_150_with_everyone_starved():
    state = new_game(GameConfig(), seed=7)
    while state.phase == Phase.NORMAL:
        step(state, [], [])
    assert state.turn == 150
    assert len(state.factories) == 0
    assert state.outcome == Outcome.DRAW


def test_factory_with_one_water_dies_this_turn():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    factory.water = 1
    step(state, [], [])
    assert factory.id not in state.factories
    assert state.phase == Phase.FINISHED
    assert state.outcome == Outcome.P1_WINS


# --- digging ---------------------------------------------------------------

def test_heavy_dig_on_ice_yields_cargo_and_charges_power():
    state, robot = heavy_on_ice()
    cfg = state.config
    start_power = robot.power
    _, events = step(state, [RobotCommand(robot.id, RobotAction.DIG)], [])
    assert robot.cargo_ice == cfg.dig_yield_ice[HEAVY] == 20
    spent = cfg.queue_update_cost + cfg.power_costs["dig"][HEAVY]
    gained = cfg.charge_rate[HEAVY] if cfg.is_day(0) else 0
    assert robot.power == start_power - spent + gained
    digs = [e for e in events if e["type"] == "dig"]
    assert digs == [{"type": "dig", "player": 0, "unit": robot.id,
                     "cell": list(robot.pos), "resource": "ice", "amount": 20}]


def test_dig_respects_cargo_capacity():
    state, robot = heavy_on_ice()
    cap = state.config.cargo_capacity[HEAVY]
    robot.cargo_ice = cap - 5
    step(state, [RobotCommand(robot.id, RobotAction.DIG)], [])
    assert robot.cargo_ice == cap


def test_dig_rubble_before_anything_else():
    state, robot = heavy_on_ice()
    state.board.rubble[robot.pos] = 30
    _, events = step(state, [RobotCommand(robot.id, RobotAction.DIG)], [])
    assert robot.cargo_ice == 0
    assert state.board.rubble[robot.pos] == 10
    assert events[0]["resource"] == "rubble" and events[0]["amount"] == 20


def test_dig_empty_cell_is_strict_error():
    state = new_game(small_config(), seed=3)
    free = np.argwhere((state.board.factory_occ == -1) & ~state.board.ice
                       & ~state.board.ore & (state.robot_grid == -1))
    free = [c for c in free if state.board.rubble[tuple(c)] == 0]
    robot = state.add_robot(0, HEAVY, tuple(int(v) for v in free[0]), power=500)
    with pytest.raises(CommandError, match="dig"):
        step(state, [RobotCommand(robot.id, RobotAction.DIG)], [])


# --- queue cost and strictness ---------------------------------------------

def test_unpayable_queue_cost_drops_command_silently():
    state, robot = heavy_on_ice(power=0)
    _, events = step(state, [RobotCommand(robot.id, RobotAction.DIG)], [])
    assert robot.cargo_ice == 0
    assert [e for e in events if e["type"] == "dig"] == []


def test_commanding_enemy_robot_is_an_error():
    state, robot = heavy_on_ice()
    with pytest.raises(CommandError, match="does not own"):
        step(state, [], [RobotCommand(robot.id, RobotAction.DIG)])


def test_duplicate_command_is_an_error():
    state, robot = heavy_on_ice()
    cmds = [RobotCommand(robot.id, RobotAction.DIG),
            RobotCommand(robot.id, RobotAction.NOOP)]
    with pytest.raises(CommandError, match="twice"):
        step(state, cmds, [])


def test_command_for_missing_unit_is_an_error():
    state = new_game(small_config(), seed=3)
    with pytest.raises(CommandError):
        step(state, [RobotCommand(999, RobotAction.DIG)], [])


# --- transfers and pickup ----------------------------------------------------

def test_transfer_to_factory_via_center():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    cy, cx = factory.center
    robot = state.add_robot(0, HEAVY, (cy, cx + 1), power=500)
    robot.cargo_ice = 100
    cmd = RobotCommand(robot.id, RobotAction.TRANSFER, direction=0, amount=3,
                       resource=RES_ICE)
    _, events = step(state, [cmd], [])
    assert robot.cargo_ice == 5          # 95% of 100
    transfers = [e for e in events if e["type"] == "transfer"]
    assert transfers[0]["amount"] == 95
    assert transfers[0]["to_factory"] == factory.id
    # conservation: 95 went in, refining consumed some of it afterwards
    refined = [e for e in events if e["type"] == "refine"]
    consumed = sum(e["consumed"] for e in refined if e["resource"] == "water")
    assert factory.ice == 95 - consumed


def test_transfer_between_robots_caps_at_receiver_room():
    state = new_game(small_config(), seed=3)
    a = state.add_robot(0, HEAVY, (8, 8), power=500)
    b = state.add_robot(0, LIGHT, (7, 8), power=50)
    a.cargo_ice = 3000
    cap = state.config.cargo_capacity[LIGHT]
    cmd = RobotCommand(a.id, RobotAction.TRANSFER, direction=1, amount=3,
                       resource=RES_ICE)  # up
    _, events = step(state, [cmd], [])
    assert b.cargo_ice == cap
    assert a.cargo_ice == 3000 - cap
    event = [e for e in events if e["type"] == "transfer"][0]
    assert event["amount"] == cap and event["to_unit"] == b.id


def test_transfer_power_uses_post_charge_stock():
    state = new_game(small_config(), seed=3)
    a = state.add_robot(0, LIGHT, (8, 8), power=102)
    b = state.add_robot(0, LIGHT, (8, 9), power=0)
    cfg = state.config
    cmd = RobotCommand(a.id, RobotAction.TRANSFER, direction=2, amount=1,
                       resource=RES_POWER)  # right, 50%
    step(state, [cmd], [])
    stock = 102 - cfg.queue_update_cost - cfg.power_costs["transfer"][LIGHT]
    gained = cfg.charge_rate[LIGHT] if cfg.is_day(0) else 0
    assert b.power == stock // 2 + gained


def test_transfer_without_receiver_is_an_error():
    state = new_game(small_config(), seed=3)
    a = state.add_robot(0, HEAVY, (8, 8), power=500)
    a.cargo_ice = 10
    cmd = RobotCommand(a.id, RobotAction.TRANSFER, direction=1, amount=0,
                       resource=RES_ICE)
    if state.board.factory_occ[7, 8] == -1 and state.robot_grid[7, 8] == -1:
        with pytest.raises(CommandError, match="receiver"):
            step(state, [cmd], [])


def test_pickup_moves_fixed_power_from_factory():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    cy, cx = factory.center
    robot = state.add_robot(0, HEAVY, (cy + 1, cx), power=100)
    start_factory_power = factory.power
    _, events = step(state, [RobotCommand(robot.id, RobotAction.PICKUP)], [])
    amount = state.config.pickup_power_amount
    assert factory.power == start_factory_power - amount \
        + (state.config.factory_charge_rate if state.config.is_day(0) else 0)
    pick = [e for e in events if e["type"] == "pickup"][0]
    assert pick["amount"] == amount


def test_pickup_off_factory_is_an_error():
    state, robot = heavy_on_ice()
    with pytest.raises(CommandError, match="pickup"):
        step(state, [RobotCommand(robot.id, RobotAction.PICKUP)], [])


# --- factories ----------------------------------------------------------------

def test_build_heavy_spawns_on_center_with_build_power():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    cfg = state.config
    _, events = step(state, [FactoryCommand(factory.id, FactoryAction.BUILD_HEAVY)], [])
    built = [e for e in events if e["type"] == "build"][0]
    robot = state.robots[built["unit"]]
    assert robot.kind == HEAVY and robot.pos == factory.center
    assert factory.metal == cfg.factory_start_metal - cfg.robot_metal_cost[HEAVY]
    # spawned robot carries the power the factory paid, pre solar charge
    assert robot.power == cfg.robot_power_cost[HEAVY] + \
        (cfg.charge_rate[HEAVY] if cfg.is_day(0) else 0)


def test_build_on_occupied_center_is_an_error():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    state.add_robot(0, LIGHT, factory.center, power=10)
    with pytest.raises(CommandError, match="occupied"):
        step(state, [FactoryCommand(factory.id, FactoryAction.BUILD_LIGHT)], [])


def test_build_without_metal_is_an_error():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    factory.metal = 0
    with pytest.raises(CommandError, match="afford"):
        step(state, [FactoryCommand(factory.id, FactoryAction.BUILD_LIGHT)], [])


def test_grow_lichen_spends_water_and_claims_adjacent_cells():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    water = factory.water
    _, events = step(state, [FactoryCommand(factory.id, FactoryAction.GROW_LICHEN)], [])
    assert factory.water == water - state.config.lichen_water_cost - \
        state.config.factory_water_upkeep
    grown = [e for e in events if e["type"] == "grow_lichen"][0]
    assert grown["cells"] == state.lichen_total(0) > 0
    owned = np.argwhere(state.board.lichen_owner == 0)
    footprint = set(factory.footprint())
    # the ring is rubble-cleared at placement: every non-resource edge
    # neighbour of the footprint is claimed on the first grow
    ring = {(y + dy, x + dx) for (y, x) in footprint
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1))} - footprint
    eligible_ring = {c for c in ring if state.in_bounds(c)
                     and not state.board.ice[c] and not state.board.ore[c]}
    assert {tuple(map(int, c)) for c in owned} == eligible_ring
    for y, x in owned:
        assert state.board.rubble[y, x] == 0


def test_grow_lichen_without_water_is_an_error():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    factory.water = state.config.lichen_water_cost  # needs strictly more
    with pytest.raises(CommandError, match="water"):
        step(state, [FactoryCommand(factory.id, FactoryAction.GROW_LICHEN)], [])


# --- refining -------------------------------------------------------------------

@pytest.mark.parametrize("store,rate,ratio,expected", [
    (0, 100, 0.25, (0, 0)),
    (3, 100, 0.25, (0, 0)),      # below granularity: nothing is wasted
    (20, 100, 0.25, (20, 5)),
    (250, 100, 0.25, (100, 25)),
    (9, 100, 0.3, (7, 2)),
    (50, 100, 1.0, (50, 50)),
    (50, 100, 0.0, (0, 0)),
])
def test_refine_amounts(store, rate, ratio, expected):
    assert _refine_amounts(store, rate, ratio) == expected


def test_factory_refines_ice_to_water_each_turn():
    state = new_game(small_config(), seed=3)
    factory = state.player_factories(0)[0]
    factory.ice = 250
    water = factory.water
    _, events = step(state, [], [])
    cfg = state.config
    consumed = min(250, cfg.refine_rate_ice)
    produced = int(consumed * cfg.refine_ratio_ice_to_water)
    assert factory.ice == 250 - consumed
    assert factory.water == water + produced - cfg.factory_water_upkeep
    refine = [e for e in events if e["type"] == "refine"][0]
    assert refine["amount"] == produced and refine["consumed"] == consumed


# --- self destruct ----------------------------------------------------------------

def test_self_destruct_removes_robot():
    state, robot = heavy_on_ice()
    _, events = step(state, [RobotCommand(robot.id, RobotAction.SELF_DESTRUCT)], [])
    assert robot.id not in state.robots
    assert state.robot_grid[robot.pos] == -1
    gone = [e for e in events if e["type"] == "destroy_robot"][0]
    assert gone["cause"] == "self_destruct"


# --- global invariants over random play ----------------------------------------

def test_random_play_preserves_engine_invariants():
    rng = np.random.default_rng(0)
    state = new_game(small_config(), seed=12)
    cfg = state.config
    for _ in range(80):
        if state.phase != Phase.NORMAL:
            break
        events = random_step(state, rng)
        # conservation on every transfer event is checked structurally:
        # amounts are single-sourced, so assert caps and occupancy instead
        positions = set()
        for robot in state.robots.values():
            assert 0 <= robot.power <= cfg.battery_capacity[robot.kind]
            assert 0 <= robot.cargo <= cfg.cargo_capacity[robot.kind]
            assert robot.pos not in positions
            positions.add(robot.pos)
            owner_at = state.board.factory_owner[robot.pos]
            assert owner_at in (-1, robot.owner)
        for factory in state.factories.values():
            assert min(factory.ice, factory.ore, factory.water,
                       factory.metal, factory.power) >= 0
        assert state.board.rubble.min() >= 0 and state.board.rubble.max() <= 100
        assert state.board.lichen.min() >= 0 and state.board.lichen.max() <= 100


def test_transfer_conservation_in_random_play():
    rng = np.random.default_rng(5)
    state = new_game(small_config(), seed=21)
    saw_transfer = False
    for _ in range(120):
        if state.phase != Phase.NORMAL:
            break
        before = {rid: (r.cargo_ice, r.cargo_ore, r.power)
                  for rid, r in state.robots.items()}
        fbefore = {fid: (f.ice, f.ore, f.power)
                   for fid, f in state.factories.items()}
        events = random_step(state, rng)
        for e in events:
            if e["type"] != "transfer":
                continue
            saw_transfer = True
            assert e["amount"] >= 0
    assert saw_transfer


def test_step_determinism_same_commands_same_hash():
    a = new_game(small_config(), seed=9)
    b = new_game(small_config(), seed=9)
    rng_a, rng_b = np.random.default_rng(4), np.random.default_rng(4)
    for _ in range(30):
        random_step(a, rng_a)
        random_step(b, rng_b)
    assert state_hash(a) == state_hash(b)

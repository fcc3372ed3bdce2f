"""Simultaneous-move resolution for one game turn.

Resolution order within a step:

  1. queue-update charge per non-NoOp robot command (unpayable -> dropped)
  2. per-action validation and power charge (invalid -> CommandError)
  3. factory commands: builds and lichen growth
  4. digs, pickups, transfers, self-destructs (each in robot-id order)
  5. simultaneous movement with collision resolution
  6. factory refining (ice -> water, ore -> metal)
  7. water upkeep; starved factories destroyed, eliminated players lose
     their lichen
  8. solar charge for robots and factories on day turns
  9. turn advance and termination check

Command addressing is strict: anything the action masks are supposed to
forbid raises CommandError instead of being silently ignored.  The one
exception, mandated by the ruleset, is the queue charge in (1).
"""

from __future__ import annotations

import math
from typing import Any, Iterable, Optional

import numpy as np

from .config import HEAVY, LIGHT, GameConfig
from .state import (MOVE_DELTAS, NO_OWNER, RES_ICE, RES_ORE, RES_POWER,
                    RESOURCE_NAMES, TRANSFER_DELTAS, TRANSFER_FRACTIONS,
                    CommandError, Factory, FactoryAction, FactoryCommand,
                    GameState, Outcome, Phase, Robot, RobotAction,
                    RobotCommand, adjacent4)

EventLog = list[dict[str, Any]]


def _split_commands(state: GameState, commands: Iterable, player: int
                    ) -> tuple[dict[int, RobotCommand], dict[int, FactoryCommand]]:
    robot_cmds: dict[int, RobotCommand] = {}
    factory_cmds: dict[int, FactoryCommand] = {}
    for cmd in commands:
        if isinstance(cmd, RobotCommand):
            robot = state.robots.get(cmd.unit_id)
            if robot is None or robot.owner != player:
                raise CommandError(
                    f"player {player} commands robot {cmd.unit_id} it does not own")
            if cmd.unit_id in robot_cmds:
                raise CommandError(f"robot {cmd.unit_id} addressed twice")
            robot_cmds[cmd.unit_id] = cmd
        elif isinstance(cmd, FactoryCommand):
            factory = state.factories.get(cmd.factory_id)
            if factory is None or factory.owner != player:
                raise CommandError(
                    f"player {player} commands factory {cmd.factory_id} it does not own")
            if cmd.factory_id in factory_cmds:
                raise CommandError(f"factory {cmd.factory_id} addressed twice")
            factory_cmds[cmd.factory_id] = cmd
        else:
            raise CommandError(f"unknown command object {cmd!r}")
    return robot_cmds, factory_cmds


def _diggable(state: GameState, pos: tuple[int, int], player: int) -> bool:
    board = state.board
    if board.factory_occ[pos] != -1:
        return False
    return bool(board.rubble[pos] > 0 or board.ice[pos] or board.ore[pos]
                or (board.lichen[pos] > 0 and board.lichen_owner[pos] == 1 - player))


def _validate_and_charge(state: GameState, robot: Robot, cmd: RobotCommand) -> None:
    cfg = state.config
    action = cmd.action
    cost = cfg.power_costs[_COST_KEY[action]][robot.kind]
    if robot.power < cost:
        raise CommandError(
            f"robot {robot.id} lacks power for {action.name} "
            f"({robot.power} < {cost})")
    if action == RobotAction.MOVE:
        if not 0 <= cmd.direction < 4:
            raise CommandError(f"bad move direction {cmd.direction}")
        dy, dx = MOVE_DELTAS[cmd.direction]
        target = (robot.pos[0] + dy, robot.pos[1] + dx)
        if not state.in_bounds(target):
            raise CommandError(f"robot {robot.id} moves off the board")
    elif action == RobotAction.TRANSFER:
        if not 0 <= cmd.direction < 5:
            raise CommandError(f"bad transfer direction {cmd.direction}")
        if not 0 <= cmd.amount < len(TRANSFER_FRACTIONS):
            raise CommandError(f"bad transfer amount index {cmd.amount}")
        if not 0 <= cmd.resource < 3:
            raise CommandError(f"bad transfer resource {cmd.resource}")
        if _transfer_receiver(state, robot, cmd.direction) is None:
            raise CommandError(f"robot {robot.id} transfer has no receiver")
    elif action == RobotAction.PICKUP:
        if state.board.factory_owner[robot.pos] != robot.owner:
            raise CommandError(f"robot {robot.id} pickup while not on own factory")
    elif action == RobotAction.DIG:
        if not _diggable(state, robot.pos, robot.owner):
            raise CommandError(f"robot {robot.id} digs an empty cell")
    robot.power -= cost


_COST_KEY = {
    RobotAction.MOVE: "move",
    RobotAction.TRANSFER: "transfer",
    RobotAction.PICKUP: "pickup",
    RobotAction.DIG: "dig",
    RobotAction.SELF_DESTRUCT: "self_destruct",
}


def _transfer_receiver(state: GameState, robot: Robot, direction: int
                       ) -> Optional[Robot | Factory]:
    dy, dx = TRANSFER_DELTAS[direction]
    target = (robot.pos[0] + dy, robot.pos[1] + dx)
    if not state.in_bounds(target):
        return None
    if direction != 0:
        rid = int(state.robot_grid[target])
        if rid != -1:
            return state.robots[rid]
    fid = int(state.board.factory_occ[target])
    if fid != -1:
        return state.factories[fid]
    return None


def _execute_dig(state: GameState, robot: Robot, events: EventLog) -> None:
    cfg = state.config
    board = state.board
    pos = robot.pos
    if board.rubble[pos] > 0:
        amount = min(int(board.rubble[pos]), cfg.dig_rubble_removed[robot.kind])
        board.rubble[pos] -= amount
        resource = "rubble"
    elif board.ice[pos]:
        room = cfg.cargo_capacity[robot.kind] - robot.cargo
        amount = min(cfg.dig_yield_ice[robot.kind], room)
        robot.cargo_ice += amount
        resource = "ice"
    elif board.ore[pos]:
        room = cfg.cargo_capacity[robot.kind] - robot.cargo
        amount = min(cfg.dig_yield_ore[robot.kind], room)
        robot.cargo_ore += amount
        resource = "ore"
    else:  # enemy lichen (validation guarantees one of the four)
        amount = min(int(board.lichen[pos]), cfg.dig_rubble_removed[robot.kind])
        board.lichen[pos] -= amount
        if board.lichen[pos] == 0:
            board.lichen_owner[pos] = NO_OWNER
        resource = "lichen"
    events.append({"type": "dig", "player": robot.owner, "unit": robot.id,
                   "cell": list(pos), "resource": resource, "amount": int(amount)})


def _execute_pickup(state: GameState, robot: Robot, events: EventLog) -> None:
    cfg = state.config
    factory = state.factories[int(state.board.factory_occ[robot.pos])]
    amount = min(cfg.pickup_power_amount, factory.power,
                 cfg.battery_capacity[robot.kind] - robot.power)
    factory.power -= amount
    robot.power += amount
    events.append({"type": "pickup", "player": robot.owner, "unit": robot.id,
                   "factory": factory.id, "amount": int(amount)})


def _execute_transfer(state: GameState, robot: Robot, cmd: RobotCommand,
                      events: EventLog) -> None:
    cfg = state.config
    receiver = _transfer_receiver(state, robot, cmd.direction)
    if receiver is None:
        # the validated receiver was destroyed earlier this step; transfer fizzles
        return
    fraction = TRANSFER_FRACTIONS[cmd.amount]
    if cmd.resource == RES_ICE:
        stock = robot.cargo_ice
    elif cmd.resource == RES_ORE:
        stock = robot.cargo_ore
    else:
        stock = robot.power
    amount = math.floor(fraction * stock)
    if isinstance(receiver, Robot):
        if cmd.resource == RES_POWER:
            room = cfg.battery_capacity[receiver.kind] - receiver.power
        else:
            room = cfg.cargo_capacity[receiver.kind] - receiver.cargo
        amount = min(amount, room)
    event = {"type": "transfer", "player": robot.owner, "unit": robot.id,
             "resource": RESOURCE_NAMES[cmd.resource], "amount": int(amount)}
    if cmd.resource == RES_ICE:
        robot.cargo_ice -= amount
    elif cmd.resource == RES_ORE:
        robot.cargo_ore -= amount
    else:
        robot.power -= amount
    if isinstance(receiver, Robot):
        if cmd.resource == RES_ICE:
            receiver.cargo_ice += amount
        elif cmd.resource == RES_ORE:
            receiver.cargo_ore += amount
        else:
            receiver.power += amount
        event["to_unit"] = receiver.id
    else:
        if cmd.resource == RES_ICE:
            receiver.ice += amount
        elif cmd.resource == RES_ORE:
            receiver.ore += amount
        else:
            receiver.power += amount
        event["to_factory"] = receiver.id
    events.append(event)


def _execute_factory_command(state: GameState, factory: Factory,
                             cmd: FactoryCommand, events: EventLog) -> None:
    cfg = state.config
    if cmd.action == FactoryAction.NOOP:
        return
    if cmd.action in (FactoryAction.BUILD_LIGHT, FactoryAction.BUILD_HEAVY):
        kind = LIGHT if cmd.action == FactoryAction.BUILD_LIGHT else HEAVY
        metal_cost = cfg.robot_metal_cost[kind]
        power_cost = cfg.robot_power_cost[kind]
        if factory.metal < metal_cost or factory.power < power_cost:
            raise CommandError(
                f"factory {factory.id} cannot afford to build (metal "
                f"{factory.metal}/{metal_cost}, power {factory.power}/{power_cost})")
        if state.robot_grid[factory.center] != -1:
            raise CommandError(f"factory {factory.id} center is occupied")
        factory.metal -= metal_cost
        factory.power -= power_cost
        robot = state.add_robot(factory.owner, kind, factory.center, power=power_cost)
        events.append({"type": "build", "player": factory.owner,
                       "factory": factory.id, "unit": robot.id, "kind": kind})
    elif cmd.action == FactoryAction.GROW_LICHEN:
        if factory.water <= cfg.lichen_water_cost:
            raise CommandError(f"factory {factory.id} lacks water to grow lichen")
        factory.water -= cfg.lichen_water_cost
        grown = _grow_lichen(state, factory)
        events.append({"type": "grow_lichen", "player": factory.owner,
                       "factory": factory.id, "cells": int(grown)})


def _grow_lichen(state: GameState, factory: Factory) -> int:
    """Add 1 lichen on every eligible cell adjacent to the footprint or to
    existing lichen of the owner; returns the number of cells touched."""
    board = state.board
    player = factory.owner
    source = (board.factory_occ == factory.id) \
        | ((board.lichen > 0) & (board.lichen_owner == player))
    eligible = (board.factory_occ == -1) & ~board.ice & ~board.ore \
        & (board.rubble == 0) \
        & ((board.lichen_owner == NO_OWNER) | (board.lichen_owner == player))
    target = adjacent4(source) & eligible
    if not target.any():
        return 0
    board.lichen[target] = np.minimum(board.lichen[target] + 1, 100)
    board.lichen_owner[target] = player
    return int(target.sum())


def resolve_collisions(moves: dict[int, tuple[int, int]],
                       robots: dict[int, Robot],
                       factory_owner: np.ndarray
                       ) -> tuple[dict[int, tuple[int, int]], list[int]]:
    """Resolve simultaneous movement.

    Moves into enemy factory footprints are cancelled.  Same-owner
    convergence cancels moves (stationary robots hold their cell; among
    movers the highest id wins) and is re-resolved to a fixpoint.  Enemy
    robots sharing a cell then fight: a heavy destroys a light, same-class
    pairs destroy each other.  Returns (final positions of survivors,
    destroyed robot ids).
    """
    final: dict[int, tuple[int, int]] = {rid: r.pos for rid, r in robots.items()}
    for rid, target in moves.items():
        owner_at = int(factory_owner[target])
        if owner_at != NO_OWNER and owner_at != robots[rid].owner:
            continue
        final[rid] = target

    while True:
        # robots (and thus `final`) iterate in id order already
        by_cell: dict[tuple[int, int], list[int]] = {}
        for rid, cell in final.items():
            by_cell.setdefault(cell, []).append(rid)
        cancelled: list[int] = []
        for ids in by_cell.values():
            if len(ids) < 2:
                continue
            for owner in (0, 1):
                group = [rid for rid in ids if robots[rid].owner == owner]
                if len(group) < 2:
                    continue
                movers = [rid for rid in group if final[rid] != robots[rid].pos]
                if len(movers) == len(group):
                    movers.remove(max(movers))
                cancelled.extend(movers)
        if not cancelled:
            break
        for rid in cancelled:
            final[rid] = robots[rid].pos

    destroyed: set[int] = set()
    for ids in by_cell.values():
        if len(ids) < 2:
            continue
        kinds = {robots[rid].kind for rid in ids}
        if kinds == {LIGHT, HEAVY}:
            destroyed.update(rid for rid in ids if robots[rid].kind == LIGHT)
        else:
            destroyed.update(ids)
    survivors = {rid: cell for rid, cell in final.items() if rid not in destroyed}
    return survivors, sorted(destroyed)


def _refine_amounts(store: int, rate: int, ratio: float) -> tuple[int, int]:
    """(consumed, produced) for one refine tick; never wastes raw units."""
    if ratio <= 0:
        return 0, 0
    consumed = min(store, rate)
    produced = math.floor(consumed * ratio)
    if produced == 0:
        return 0, 0
    consumed = min(consumed, math.ceil(produced / ratio - 1e-9))
    return consumed, produced


def check_termination(state: GameState) -> Optional[Outcome]:
    """Elimination beats the turn limit; ties are broken by total lichen."""
    f0 = sum(1 for f in state.factories.values() if f.owner == 0)
    f1 = sum(1 for f in state.factories.values() if f.owner == 1)
    if f0 == 0 or f1 == 0:
        if f0 == 0 and f1 == 0:
            return _lichen_outcome(state)
        return Outcome.P1_WINS if f0 == 0 else Outcome.P0_WINS
    if state.turn >= state.config.max_turns:
        return _lichen_outcome(state)
    return None


def _lichen_outcome(state: GameState) -> Outcome:
    l0, l1 = state.lichen_total(0), state.lichen_total(1)
    if l0 > l1:
        return Outcome.P0_WINS
    if l1 > l0:
        return Outcome.P1_WINS
    return Outcome.DRAW


def step(state: GameState, commands_p0: Iterable, commands_p1: Iterable
         ) -> tuple[GameState, EventLog]:
    """Advance the game one turn in place; returns (state, events)."""
    if state.phase != Phase.NORMAL:
        raise CommandError(f"cannot step in phase {state.phase.name}")
    cfg = state.config
    events: EventLog = []

    robot_cmds: dict[int, RobotCommand] = {}
    factory_cmds: dict[int, FactoryCommand] = {}
    for player, commands in ((0, commands_p0), (1, commands_p1)):
        rc, fc = _split_commands(state, commands, player)
        robot_cmds.update(rc)
        factory_cmds.update(fc)

    # (1) queue-update charge; unpayable commands are dropped, not errors
    active: dict[int, RobotCommand] = {}
    for rid in sorted(robot_cmds):
        cmd = robot_cmds[rid]
        if cmd.action == RobotAction.NOOP:
            continue
        robot = state.robots[rid]
        if robot.power < cfg.queue_update_cost:
            continue
        robot.power -= cfg.queue_update_cost
        active[rid] = cmd

    # (2) validate and charge per-action power costs
    for rid in sorted(active):
        _validate_and_charge(state, state.robots[rid], active[rid])

    # (3) factory builds and lichen growth
    for fid in sorted(factory_cmds):
        _execute_factory_command(state, state.factories[fid], factory_cmds[fid],
                                 events)

    # (4) digs, pickups, transfers, self-destructs
    for rid in sorted(active):
        if active[rid].action == RobotAction.DIG:
            _execute_dig(state, state.robots[rid], events)
    for rid in sorted(active):
        if active[rid].action == RobotAction.PICKUP:
            _execute_pickup(state, state.robots[rid], events)
    for rid in sorted(active):
        if active[rid].action == RobotAction.TRANSFER:
            _execute_transfer(state, state.robots[rid], active[rid], events)
    for rid in sorted(active):
        if active[rid].action == RobotAction.SELF_DESTRUCT:
            robot = state.remove_robot(rid)
            events.append({"type": "destroy_robot", "player": robot.owner,
                           "unit": rid, "cause": "self_destruct",
                           "cell": list(robot.pos)})

    # (5) simultaneous movement
    moves = {}
    for rid, cmd in active.items():
        if cmd.action == RobotAction.MOVE and rid in state.robots:
            dy, dx = MOVE_DELTAS[cmd.direction]
            moves[rid] = (state.robots[rid].pos[0] + dy,
                          state.robots[rid].pos[1] + dx)
    if moves:
        survivors, destroyed = resolve_collisions(moves, state.robots,
                                                  state.board.factory_owner)
        for rid in destroyed:
            robot = state.remove_robot(rid)
            events.append({"type": "destroy_robot", "player": robot.owner,
                           "unit": rid, "cause": "collision",
                           "cell": list(robot.pos)})
        changed = [(rid, cell) for rid, cell in survivors.items()
                   if state.robots[rid].pos != cell]
        for rid, _ in changed:
            state.robot_grid[state.robots[rid].pos] = -1
        for rid, cell in changed:
            state.robot_grid[cell] = rid
            state.robots[rid].pos = cell

    # (6) refining
    for fid in sorted(state.factories):
        factory = state.factories[fid]
        consumed, produced = _refine_amounts(factory.ice, cfg.refine_rate_ice,
                                             cfg.refine_ratio_ice_to_water)
        if produced:
            factory.ice -= consumed
            factory.water += produced
            events.append({"type": "refine", "player": factory.owner,
                           "factory": fid, "resource": "water",
                           "amount": produced, "consumed": consumed})
        consumed, produced = _refine_amounts(factory.ore, cfg.refine_rate_ore,
                                             cfg.refine_ratio_ore_to_metal)
        if produced:
            factory.ore -= consumed
            factory.metal += produced
            events.append({"type": "refine", "player": factory.owner,
                           "factory": fid, "resource": "metal",
                           "amount": produced, "consumed": consumed})

    # (7) water upkeep and starvation
    starved = []
    for fid in sorted(state.factories):
        factory = state.factories[fid]
        factory.water -= cfg.factory_water_upkeep
        if factory.water <= 0:
            starved.append(fid)
    for fid in starved:
        factory = state.remove_factory(fid)
        events.append({"type": "destroy_factory", "player": factory.owner,
                       "factory": fid, "cause": "starvation",
                       "cell": list(factory.center)})
    outcome = None
    if starved:
        # outcome is decided on the lichen present at the moment of
        # elimination; the fields of eliminated players wither afterwards
        outcome = check_termination(state)
        for player in (0, 1):
            if outcome is not None and not any(
                    f.owner == player for f in state.factories.values()):
                wiped = state.board.lichen_owner == player
                state.board.lichen[wiped] = 0
                state.board.lichen_owner[wiped] = NO_OWNER

    # (8) solar charge on day turns
    if cfg.is_day(state.turn):
        for robot in state.robots.values():
            robot.power = min(robot.power + cfg.charge_rate[robot.kind],
                              cfg.battery_capacity[robot.kind])
        for factory in state.factories.values():
            factory.power += cfg.factory_charge_rate

    # (9) advance the clock and settle the outcome
    state.turn += 1
    if outcome is None:
        outcome = check_termination(state)
    if outcome is not None:
        state.outcome = outcome
        state.phase = Phase.FINISHED
    return state, events

"""Scripted baseline opponents.  All of them emit only mask-legal commands.

noop          - submits nothing (every unit idles)
random_legal  - uniform over unmasked per-cell component values
ice_rusher    - hand-written water loop: build a heavy per factory, walk it
                to ice, dig, haul cargo home, keep the batteries topped up,
                grow lichen once the water buffer is comfortable
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..actions import MaskSet, actions_to_commands, compute_masks
from ..engine import (HEAVY, FactoryAction, FactoryCommand, GameState,
                      RobotAction, RobotCommand)
from ..engine.state import MOVE_DELTAS, RES_ICE

BOT_IDS = ("noop", "random_legal", "ice_rusher")

# ice_rusher tuning
CARGO_RETURN_FRACTION = 0.8
URGENT_WATER = 60          # factory water level that forces a cargo run
URGENT_CARGO = 40          # minimum ice worth hauling home early
POWER_RESERVE_FRACTION = 0.25
PICKUP_TARGET_FRACTION = 0.6
WATER_RESERVE = 150        # twice a 75-turn upkeep reserve


class Bot:
    bot_id = "bot"

    def __init__(self, rng: Optional[np.random.Generator] = None):
        self.rng = rng or np.random.default_rng()

    def act(self, state: GameState, masks: MaskSet, player: int) -> list:
        raise NotImplementedError


class NoopBot(Bot):
    bot_id = "noop"

    def act(self, state: GameState, masks: MaskSet, player: int) -> list:
        return []


class RandomLegalBot(Bot):
    bot_id = "random_legal"

    def __init__(self, rng=None, allow_self_destruct: bool = True):
        super().__init__(rng)
        self.allow_self_destruct = allow_self_destruct

    def act(self, state: GameState, masks: MaskSet, player: int) -> list:
        size = masks.robot_source.shape[0]
        robot_maps = np.zeros((5, size, size), dtype=np.int64)
        ys, xs = np.nonzero(masks.robot_source)
        if len(ys):
            for c, comp in enumerate(masks.robot_components()):
                legal = comp[:, ys, xs]  # (K, N)
                if c == 0 and not self.allow_self_destruct:
                    legal = legal.copy()
                    legal[RobotAction.SELF_DESTRUCT] = False
                noise = self.rng.random(legal.shape)
                robot_maps[c, ys, xs] = np.where(legal, noise, -1.0).argmax(axis=0)
        factory_maps = np.zeros((size, size), dtype=np.int64)
        ys, xs = np.nonzero(masks.factory_source)
        if len(ys):
            legal = masks.factory_action[:, ys, xs]
            noise = self.rng.random(legal.shape)
            factory_maps[ys, xs] = np.where(legal, noise, -1.0).argmax(axis=0)
        commands, dropped = actions_to_commands(robot_maps, factory_maps,
                                                masks, state)
        assert dropped == 0
        return commands


def _nearest(cells: np.ndarray, pos: tuple[int, int]) -> Optional[tuple[int, int]]:
    if cells.shape[0] == 0:
        return None
    dist = np.abs(cells - np.array(pos)).sum(axis=1)
    order = np.lexsort((cells[:, 1], cells[:, 0], dist))
    return tuple(int(v) for v in cells[order[0]])


def _step_toward(masks: MaskSet, pos: tuple[int, int],
                 target: tuple[int, int]) -> Optional[int]:
    """First legal direction (up, right, down, left) that closes distance."""
    y, x = pos
    base = abs(target[0] - y) + abs(target[1] - x)
    fallback = None
    for d, (dy, dx) in enumerate(MOVE_DELTAS):
        if not masks.move_dir[d, y, x]:
            continue
        dist = abs(target[0] - (y + dy)) + abs(target[1] - (x + dx))
        if dist < base:
            return d
        if dist == base and fallback is None:
            fallback = d
    return fallback


class IceRusherBot(Bot):
    bot_id = "ice_rusher"

    def act(self, state: GameState, masks: MaskSet, player: int) -> list:
        cfg = state.config
        commands: list = []
        my_factories = sorted(state.player_factories(player), key=lambda f: f.id)
        if not my_factories:
            return commands
        water_min = min(f.water for f in my_factories)
        ice_cells = np.argwhere(state.board.ice)
        factory_centers = np.array([f.center for f in my_factories])

        for robot in sorted(state.player_robots(player), key=lambda r: r.id):
            y, x = robot.pos
            at = masks.action_type[:, y, x]
            battery = cfg.battery_capacity[robot.kind]
            cargo_cap = cfg.cargo_capacity[robot.kind]
            on_own_factory = state.board.factory_owner[y, x] == player
            home = _nearest(factory_centers, robot.pos)

            hauling = (robot.cargo_ice >= CARGO_RETURN_FRACTION * cargo_cap
                       or (water_min <= URGENT_WATER
                           and robot.cargo_ice >= URGENT_CARGO))
            low_power = robot.power < POWER_RESERVE_FRACTION * battery

            command = None
            if on_own_factory:
                if robot.cargo_ice > 0 and at[RobotAction.TRANSFER] \
                        and masks.transfer_dir[0, y, x] \
                        and masks.transfer_resource[RES_ICE, y, x]:
                    command = RobotCommand(robot.id, RobotAction.TRANSFER,
                                           direction=0, amount=3,
                                           resource=RES_ICE)
                elif robot.power < PICKUP_TARGET_FRACTION * battery \
                        and at[RobotAction.PICKUP]:
                    command = RobotCommand(robot.id, RobotAction.PICKUP)
            elif hauling or low_power:
                if home is not None and at[RobotAction.MOVE]:
                    d = _step_toward(masks, robot.pos, home)
                    if d is not None:
                        command = RobotCommand(robot.id, RobotAction.MOVE,
                                               direction=d)
            if command is None and state.board.ice[y, x] and at[RobotAction.DIG] \
                    and not hauling:
                command = RobotCommand(robot.id, RobotAction.DIG)
            if command is None and not hauling and not low_power \
                    and at[RobotAction.MOVE]:
                target = _nearest(ice_cells, robot.pos)
                if target is not None and target != robot.pos:
                    d = _step_toward(masks, robot.pos, target)
                    if d is not None:
                        command = RobotCommand(robot.id, RobotAction.MOVE,
                                               direction=d)
            if command is not None:
                commands.append(command)

        heavies = sum(1 for r in state.player_robots(player)
                      if r.kind == HEAVY)
        want_heavies = len(my_factories)
        for factory in my_factories:
            cy, cx = factory.center
            fa = masks.factory_action[:, cy, cx]
            if heavies < want_heavies and fa[FactoryAction.BUILD_HEAVY]:
                commands.append(FactoryCommand(factory.id,
                                               FactoryAction.BUILD_HEAVY))
                heavies += 1
            elif factory.water > WATER_RESERVE and fa[FactoryAction.GROW_LICHEN]:
                commands.append(FactoryCommand(factory.id,
                                               FactoryAction.GROW_LICHEN))
        return commands


def make_bot(bot_id: str, rng: Optional[np.random.Generator] = None,
             **kwargs) -> Bot:
    bots = {"noop": NoopBot, "random_legal": RandomLegalBot,
            "ice_rusher": IceRusherBot}
    if bot_id not in bots:
        raise ValueError(f"unknown bot {bot_id!r}, expected one of {BOT_IDS}")
    return bots[bot_id](rng, **kwargs)


def scripted_step(bot: Bot, state: GameState, masks: MaskSet,
                  player: int) -> list:
    """Commands the bot wants this turn; all of them are mask-legal."""
    return bot.act(state, masks, player)

"""World state: board layers, robots, factories, commands and events.

Coordinates are (row, col) with row 0 at the top.  Direction indices are
shared with the action space: moves use 0..3 = up, right, down, left and
transfers use 0..4 = center, up, right, down, left.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Optional

import numpy as np

from .config import HEAVY, LIGHT, GameConfig

MOVE_DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))  # up, right, down, left
TRANSFER_DELTAS = ((0, 0), (-1, 0), (0, 1), (1, 0), (0, -1))  # center + the four moves
TRANSFER_FRACTIONS = (0.25, 0.50, 0.75, 0.95)

RES_ICE = 0
RES_ORE = 1
RES_POWER = 2
RESOURCE_NAMES = ("ice", "ore", "power")

NO_OWNER = -1


class Phase(IntEnum):
    SETUP = 0
    NORMAL = 1
    FINISHED = 2


class Outcome(IntEnum):
    P0_WINS = 0
    P1_WINS = 1
    DRAW = 2


class RobotAction(IntEnum):
    NOOP = 0
    MOVE = 1
    TRANSFER = 2
    PICKUP = 3
    DIG = 4
    SELF_DESTRUCT = 5


class FactoryAction(IntEnum):
    NOOP = 0
    BUILD_LIGHT = 1
    BUILD_HEAVY = 2
    GROW_LICHEN = 3


class CommandError(ValueError):
    """Raised by the engine for commands the action masks must forbid."""


@dataclass
class RobotCommand:
    unit_id: int
    action: RobotAction
    direction: Optional[int] = None  # MOVE: 0..3, TRANSFER: 0..4
    amount: Optional[int] = None     # TRANSFER: index into TRANSFER_FRACTIONS
    resource: Optional[int] = None   # TRANSFER: RES_ICE / RES_ORE / RES_POWER

    def __post_init__(self) -> None:
        if self.action == RobotAction.MOVE:
            if self.direction is None:
                raise CommandError("MOVE requires direction")
            if self.amount is not None or self.resource is not None:
                raise CommandError("MOVE takes only a direction")
        elif self.action == RobotAction.TRANSFER:
            if self.direction is None or self.amount is None \
                    or self.resource is None:
                raise CommandError(
                    "TRANSFER requires direction, amount and resource")
        elif self.direction is not None or self.amount is not None \
                or self.resource is not None:
            raise CommandError(f"{self.action.name} takes no parameters")

    def to_dict(self) -> dict:
        d = {"unit": self.unit_id, "action": self.action.name.lower()}
        for name in ("direction", "amount", "resource"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RobotCommand":
        return cls(unit_id=d["unit"], action=RobotAction[d["action"].upper()],
                   direction=d.get("direction"), amount=d.get("amount"),
                   resource=d.get("resource"))


@dataclass
class FactoryCommand:
    factory_id: int
    action: FactoryAction

    def to_dict(self) -> dict:
        return {"factory": self.factory_id, "action": self.action.name.lower()}

    @classmethod
    def from_dict(cls, d: dict) -> "FactoryCommand":
        return cls(factory_id=d["factory"], action=FactoryAction[d["action"].upper()])


@dataclass
class Robot:
    id: int
    owner: int
    kind: int  # LIGHT or HEAVY
    pos: tuple[int, int]
    power: int = 0
    cargo_ice: int = 0
    cargo_ore: int = 0

    @property
    def cargo(self) -> int:
        return self.cargo_ice + self.cargo_ore


@dataclass
class Factory:
    id: int
    owner: int
    center: tuple[int, int]
    ice: int = 0
    ore: int = 0
    water: int = 0
    metal: int = 0
    power: int = 0

    def footprint(self) -> Iterator[tuple[int, int]]:
        cy, cx = self.center
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                yield (cy + dy, cx + dx)


@dataclass
class Board:
    """Dense per-cell layers.  Factory occupancy mirrors the factory dicts."""

    rubble: np.ndarray        # int16, 0..100
    ice: np.ndarray           # bool
    ore: np.ndarray           # bool
    lichen: np.ndarray        # int16, 0..100
    lichen_owner: np.ndarray  # int8, player id or NO_OWNER
    factory_occ: np.ndarray   # int16, factory id or -1
    factory_owner: np.ndarray # int8, player id or NO_OWNER

    @classmethod
    def empty(cls, size: int) -> "Board":
        return cls(
            rubble=np.zeros((size, size), dtype=np.int16),
            ice=np.zeros((size, size), dtype=bool),
            ore=np.zeros((size, size), dtype=bool),
            lichen=np.zeros((size, size), dtype=np.int16),
            lichen_owner=np.full((size, size), NO_OWNER, dtype=np.int8),
            factory_occ=np.full((size, size), -1, dtype=np.int16),
            factory_owner=np.full((size, size), NO_OWNER, dtype=np.int8),
        )

    @property
    def size(self) -> int:
        return self.rubble.shape[0]

    def copy(self) -> "Board":
        return Board(self.rubble.copy(), self.ice.copy(), self.ore.copy(),
                     self.lichen.copy(), self.lichen_owner.copy(),
                     self.factory_occ.copy(), self.factory_owner.copy())


@dataclass
class GameState:
    config: GameConfig
    board: Board
    robots: dict[int, Robot] = field(default_factory=dict)
    factories: dict[int, Factory] = field(default_factory=dict)
    turn: int = 0
    phase: Phase = Phase.SETUP
    outcome: Optional[Outcome] = None
    next_robot_id: int = 0
    next_factory_id: int = 0
    # robot id occupying each cell, or -1; kept in sync with `robots`
    robot_grid: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.robot_grid is None:
            self.robot_grid = np.full(
                (self.board.size, self.board.size), -1, dtype=np.int32)

    def player_robots(self, player: int) -> list[Robot]:
        return [r for r in self.robots.values() if r.owner == player]

    def player_factories(self, player: int) -> list[Factory]:
        return [f for f in self.factories.values() if f.owner == player]

    def lichen_total(self, player: int) -> int:
        return int(self.board.lichen[self.board.lichen_owner == player].sum())

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        y, x = pos
        return 0 <= y < self.board.size and 0 <= x < self.board.size

    def add_robot(self, owner: int, kind: int, pos: tuple[int, int],
                  power: int = 0) -> Robot:
        if self.robot_grid[pos] != -1:
            raise CommandError(f"cell {pos} already holds a robot")
        robot = Robot(id=self.next_robot_id, owner=owner, kind=kind, pos=pos,
                      power=min(power, self.config.battery_capacity[kind]))
        self.next_robot_id += 1
        self.robots[robot.id] = robot
        self.robot_grid[pos] = robot.id
        return robot

    def remove_robot(self, robot_id: int) -> Robot:
        robot = self.robots.pop(robot_id)
        self.robot_grid[robot.pos] = -1
        return robot

    def add_factory(self, owner: int, center: tuple[int, int]) -> Factory:
        cfg = self.config
        factory = Factory(id=self.next_factory_id, owner=owner, center=center,
                          water=cfg.factory_start_water,
                          metal=cfg.factory_start_metal,
                          power=cfg.factory_start_power)
        self.next_factory_id += 1
        self.factories[factory.id] = factory
        for cell in factory.footprint():
            if not self.in_bounds(cell):
                raise CommandError(f"factory footprint at {center} leaves the board")
            if self.board.factory_occ[cell] != -1:
                raise CommandError(f"factory footprints overlap at {cell}")
            self.board.factory_occ[cell] = factory.id
            self.board.factory_owner[cell] = owner
        # construction flattens the footprint plus one ring, so new factories
        # always have bare ground to grow their first lichen on
        cy, cx = center
        self.board.rubble[max(0, cy - 2):cy + 3, max(0, cx - 2):cx + 3] = 0
        return factory

    def remove_factory(self, factory_id: int) -> Factory:
        factory = self.factories.pop(factory_id)
        for cell in factory.footprint():
            self.board.factory_occ[cell] = -1
            self.board.factory_owner[cell] = NO_OWNER
        return factory

    def copy(self) -> "GameState":
        clone = GameState(
            config=self.config,
            board=self.board.copy(),
            robots={rid: Robot(r.id, r.owner, r.kind, r.pos, r.power,
                               r.cargo_ice, r.cargo_ore)
                    for rid, r in self.robots.items()},
            factories={fid: Factory(f.id, f.owner, f.center, f.ice, f.ore,
                                    f.water, f.metal, f.power)
                       for fid, f in self.factories.items()},
            turn=self.turn,
            phase=self.phase,
            outcome=self.outcome,
            next_robot_id=self.next_robot_id,
            next_factory_id=self.next_factory_id,
            robot_grid=self.robot_grid.copy(),
        )
        return clone


def adjacent4(mask: np.ndarray) -> np.ndarray:
    """Cells with at least one True 4-neighbour (no wrap-around)."""
    out = np.zeros_like(mask, dtype=bool)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def state_hash(state: GameState) -> str:
    """Stable digest of the full world state.

    Pure function of the state content: replays hash identically across
    processes and platforms.
    """
    h = hashlib.sha256()
    h.update(struct.pack("<qiii", state.turn, int(state.phase),
                         -1 if state.outcome is None else int(state.outcome),
                         state.board.size))
    b = state.board
    for arr in (b.rubble, b.ice, b.ore, b.lichen, b.lichen_owner,
                b.factory_occ, b.factory_owner):
        h.update(arr.tobytes())
    for rid in sorted(state.robots):
        r = state.robots[rid]
        h.update(struct.pack("<qiiiiqqq", r.id, r.owner, r.kind, r.pos[0],
                             r.pos[1], r.power, r.cargo_ice, r.cargo_ore))
    for fid in sorted(state.factories):
        f = state.factories[fid]
        h.update(struct.pack("<qiiiqqqqq", f.id, f.owner, f.center[0],
                             f.center[1], f.ice, f.ore, f.water, f.metal,
                             f.power))
    h.update(struct.pack("<qq", state.next_robot_id, state.next_factory_id))
    return h.hexdigest()

"""Observation tensorization: 17 normalized feature planes per player view.

Ally quantities are positive, enemy quantities negative, each divided by its
plane normalizer.  Plane order is frozen; tests pin it against a golden
feature table.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import GameState, Phase
from .engine.state import NO_OWNER

N_PLANES = 17

IS_DAY = 0
RUBBLE = 1
ORE = 2
ICE = 3
LICHEN = 4
IS_RESOURCE = 5
LIGHT_UNITS = 6
HEAVY_UNITS = 7
UNIT_ICE = 8
UNIT_ORE = 9
UNIT_POWER = 10
UNIT_ON_FACTORY = 11
FACTORIES = 12
FACTORY_ICE = 13
FACTORY_ORE = 14
FACTORY_WATER = 15
FACTORY_METAL = 16


@dataclass(frozen=True)
class PlaneSpec:
    name: str
    description: str
    low: float
    high: float
    normalizer: Optional[float]
    signed: bool  # negative values mark the opponent


_SPEC = (
    PlaneSpec("is_day", "whether the current turn is day or night", 0, 1, None, False),
    PlaneSpec("rubble", "amount of rubble in each cell", 0, 100, 100.0, False),
    PlaneSpec("ore", "whether there is ore in each cell", 0, 1, None, False),
    PlaneSpec("ice", "whether there is ice in each cell", 0, 1, None, False),
    PlaneSpec("lichen", "amount of lichen in each cell", 0, 100, 100.0, False),
    PlaneSpec("is_resource", "whether there is ore or ice in each cell", 0, 1, None, False),
    PlaneSpec("light_units", "whether there is a light robot in each cell", -1, 1, None, True),
    PlaneSpec("heavy_units", "whether there is a heavy robot in each cell", -1, 1, None, True),
    PlaneSpec("unit_ice", "amount of ice in the robot's cargo", -3000, 3000, 3000.0, True),
    PlaneSpec("unit_ore", "amount of ore in the robot's cargo", -3000, 3000, 3000.0, True),
    PlaneSpec("unit_power", "amount of power in the robot's battery", -1000, 1000, 1000.0, True),
    PlaneSpec("unit_on_factory", "whether each robot is on top of a factory", -1, 1, None, True),
    PlaneSpec("factories", "whether there is a factory in each tile", -1, 1, None, True),
    PlaneSpec("factory_ice", "amount of ice in each factory", -np.inf, np.inf, 150.0, True),
    PlaneSpec("factory_ore", "amount of ore in each factory", -np.inf, np.inf, 150.0, True),
    PlaneSpec("factory_water", "amount of water in each factory", -np.inf, np.inf, 150.0, True),
    PlaneSpec("factory_metal", "amount of metal in each factory", -np.inf, np.inf, 150.0, True),
)


def feature_spec() -> tuple[PlaneSpec, ...]:
    """The static plane table, indexable by the plane constants above."""
    return _SPEC


def encode_observation(state: GameState, player: int) -> np.ndarray:
    """Encode one player's fully-observed view as float32 planes (17, H, W)."""
    if state.phase not in (Phase.NORMAL, Phase.FINISHED):
        raise ValueError(f"cannot encode observation in phase {state.phase.name}")
    size = state.board.size
    planes = np.zeros((N_PLANES, size, size), dtype=np.float32)
    board = state.board

    planes[IS_DAY] = 1.0 if state.config.is_day(state.turn) else 0.0
    planes[RUBBLE] = board.rubble / 100.0
    planes[ORE] = board.ore
    planes[ICE] = board.ice
    planes[LICHEN] = board.lichen / 100.0
    planes[IS_RESOURCE] = board.ore | board.ice

    for robot in state.robots.values():
        sign = 1.0 if robot.owner == player else -1.0
        y, x = robot.pos
        planes[LIGHT_UNITS if robot.kind == 0 else HEAVY_UNITS, y, x] = sign
        planes[UNIT_ICE, y, x] = sign * robot.cargo_ice / 3000.0
        planes[UNIT_ORE, y, x] = sign * robot.cargo_ore / 3000.0
        planes[UNIT_POWER, y, x] = sign * robot.power / 1000.0
        if board.factory_owner[y, x] == robot.owner:
            planes[UNIT_ON_FACTORY, y, x] = sign

    for factory in state.factories.values():
        sign = 1.0 if factory.owner == player else -1.0
        cy, cx = factory.center
        window = (slice(cy - 1, cy + 2), slice(cx - 1, cx + 2))
        planes[FACTORIES][window] = sign
        planes[FACTORY_ICE][window] = sign * factory.ice / 150.0
        planes[FACTORY_ORE][window] = sign * factory.ore / 150.0
        planes[FACTORY_WATER][window] = sign * factory.water / 150.0
        planes[FACTORY_METAL][window] = sign * factory.metal / 150.0

    return planes


def dump_observation(path: str | Path, planes: np.ndarray) -> None:
    """Raw binary dump: (C, H, W) int32 header then row-major float32 data."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<iii", *planes.shape))
        fh.write(planes.astype(np.float32).tobytes())


def load_observation(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        c, h, w = struct.unpack("<iii", fh.read(12))
        data = np.frombuffer(fh.read(), dtype=np.float32)
    return data.reshape(c, h, w).copy()

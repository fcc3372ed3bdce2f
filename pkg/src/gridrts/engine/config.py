"""Game rule constants and their JSON (de)serialization.

Every economic quantity of the ruleset lives here so that games are fully
reproducible from (config, seed) alone.  Per-robot-class values are stored
as (light, heavy) pairs indexed by LIGHT / HEAVY.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

LIGHT = 0
HEAVY = 1

#: Robot action classes that carry a per-class power cost.
POWER_COST_ACTIONS = ("move", "dig", "transfer", "pickup", "self_destruct")


class ConfigError(ValueError):
    """Raised for malformed or internally inconsistent configuration."""


def _pair(value: Any, name: str) -> tuple[int, int]:
    try:
        a, b = value
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a (light, heavy) pair, got {value!r}")
    return (int(a), int(b))


def _default_power_costs() -> dict[str, tuple[int, int]]:
    return {
        "move": (1, 20),
        "dig": (5, 60),
        "transfer": (1, 10),
        "pickup": (0, 0),
        "self_destruct": (0, 0),
    }


@dataclass(frozen=True)
class GameConfig:
    """Complete ruleset for one game.

    Defaults give the 48x48, 1000-turn, two-factory game whose all-NoOp
    baseline starves every factory at exactly turn 150
    (factory_start_water / factory_water_upkeep).
    """

    map_size: int = 48
    max_turns: int = 1000
    factory_start_water: int = 150
    factory_start_metal: int = 150
    factory_start_power: int = 500
    factory_water_upkeep: int = 1
    factories_per_player: int = 2
    day_length: int = 30
    cycle_length: int = 50
    dig_yield_ice: tuple[int, int] = (2, 20)
    dig_yield_ore: tuple[int, int] = (2, 20)
    dig_rubble_removed: tuple[int, int] = (2, 20)
    power_costs: dict[str, tuple[int, int]] = field(default_factory=_default_power_costs)
    queue_update_cost: int = 1
    refine_ratio_ice_to_water: float = 0.25
    refine_ratio_ore_to_metal: float = 0.25
    refine_rate_ice: int = 100
    refine_rate_ore: int = 50
    robot_metal_cost: tuple[int, int] = (10, 100)
    robot_power_cost: tuple[int, int] = (50, 500)
    battery_capacity: tuple[int, int] = (150, 1000)
    cargo_capacity: tuple[int, int] = (100, 3000)
    charge_rate: tuple[int, int] = (1, 10)
    factory_charge_rate: int = 50
    lichen_water_cost: int = 5
    pickup_power_amount: int = 100
    placement_w_ice: float = 10.0
    placement_w_ore: float = 5.0
    placement_w_rubble: float = 0.05
    placement_w_enemy: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("dig_yield_ice", "dig_yield_ore", "dig_rubble_removed",
                     "robot_metal_cost", "robot_power_cost", "battery_capacity",
                     "cargo_capacity", "charge_rate"):
            object.__setattr__(self, name, _pair(getattr(self, name), name))
        costs = dict(self.power_costs)
        if set(costs) != set(POWER_COST_ACTIONS):
            raise ConfigError(
                f"power_costs must define exactly {POWER_COST_ACTIONS}, got {sorted(costs)}")
        object.__setattr__(
            self, "power_costs",
            {k: _pair(costs[k], f"power_costs[{k}]") for k in POWER_COST_ACTIONS})
        self._validate()

    def _validate(self) -> None:
        if self.map_size < 8:
            raise ConfigError(f"map_size must be >= 8, got {self.map_size}")
        if self.max_turns < 1:
            raise ConfigError(f"max_turns must be >= 1, got {self.max_turns}")
        if self.factories_per_player < 1:
            raise ConfigError("factories_per_player must be >= 1")
        if not 0 < self.day_length < self.cycle_length:
            raise ConfigError(
                f"day_length must lie in (0, cycle_length), got "
                f"{self.day_length} of {self.cycle_length}")
        if self.refine_ratio_ice_to_water < 0 or self.refine_ratio_ore_to_metal < 0:
            raise ConfigError("refine ratios must be non-negative")
        scalars = ("factory_start_water", "factory_start_metal", "factory_start_power",
                   "factory_water_upkeep", "queue_update_cost", "refine_rate_ice",
                   "refine_rate_ore", "factory_charge_rate", "lichen_water_cost",
                   "pickup_power_amount")
        for name in scalars:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("dig_yield_ice", "dig_yield_ore", "dig_rubble_removed",
                     "robot_metal_cost", "robot_power_cost", "battery_capacity",
                     "cargo_capacity", "charge_rate"):
            if min(getattr(self, name)) < 0:
                raise ConfigError(f"{name} entries must be non-negative")
        for action, pair in self.power_costs.items():
            if min(pair) < 0:
                raise ConfigError(f"power_costs[{action}] entries must be non-negative")

    def is_day(self, turn: int) -> bool:
        return (turn % self.cycle_length) < self.day_length

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        d["power_costs"] = {k: list(v) for k, v in self.power_costs.items()}
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GameConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown GameConfig keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GameConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GameConfig":
        return cls.from_json(Path(path).read_text())

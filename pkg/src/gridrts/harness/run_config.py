"""Top-level run configuration: nested game/PPO/reward/league/arch settings.

Files are plain JSON mirroring the dataclass field names.  Any key can be
overridden from the environment with the GRIDRTS_ prefix and __ as the
nesting separator, e.g. GRIDRTS_PPO__LEARNING_RATE=1e-4.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

from ..engine import GameConfig
from ..policy import PolicyConfig
from ..reward import RewardConfig
from ..rl import PPOConfig
from .bots import BOT_IDS

ENV_PREFIX = "GRIDRTS_"

OPPONENT_KINDS = ("league",) + BOT_IDS


@dataclass(frozen=True)
class LeagueConfig:
    capacity: int = 10

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("league capacity must be >= 1")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LeagueConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown LeagueConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class RunConfig:
    game: GameConfig = field(default_factory=GameConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    league: LeagueConfig = field(default_factory=LeagueConfig)
    arch: PolicyConfig = field(default_factory=PolicyConfig)
    master_seed: int = 0
    opponent: str = "league"
    opponent_greedy: bool = False
    pre_spawn_heavies: bool = False
    log_every: int = 1

    def __post_init__(self) -> None:
        if self.opponent not in OPPONENT_KINDS:
            raise ValueError(
                f"opponent must be one of {OPPONENT_KINDS}, got {self.opponent!r}")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "game": self.game.to_dict(),
            "ppo": asdict(self.ppo),
            "reward": asdict(self.reward),
            "league": asdict(self.league),
            "arch": asdict(self.arch),
            "master_seed": self.master_seed,
            "opponent": self.opponent,
            "opponent_greedy": self.opponent_greedy,
            "pre_spawn_heavies": self.pre_spawn_heavies,
            "log_every": self.log_every,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown RunConfig keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = dict(data)
        if "game" in kwargs:
            kwargs["game"] = GameConfig.from_dict(kwargs["game"])
        if "ppo" in kwargs:
            kwargs["ppo"] = PPOConfig.from_dict(kwargs["ppo"])
        if "reward" in kwargs:
            kwargs["reward"] = RewardConfig.from_dict(kwargs["reward"])
        if "league" in kwargs:
            kwargs["league"] = LeagueConfig.from_dict(kwargs["league"])
        if "arch" in kwargs:
            kwargs["arch"] = PolicyConfig.from_dict(kwargs["arch"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path,
             env: Optional[Mapping[str, str]] = None) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        data = apply_env_overrides(data, os.environ if env is None else env)
        return cls.from_dict(data)


def apply_env_overrides(data: dict[str, Any],
                        env: Mapping[str, str]) -> dict[str, Any]:
    """Overlay GRIDRTS_SECTION__KEY=value pairs onto a config dict."""
    out = json.loads(json.dumps(data))  # deep copy
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        path = [part.lower() for part in name[len(ENV_PREFIX):].split("__")]
        raw = env[name]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return out


def smoke_run_config(total_steps: int = 500_000, master_seed: int = 0
                     ) -> RunConfig:
    """The desk-scale learning task: tiny map, one pre-spawned heavy next to
    ice per side, scripted idle opponent, dense ice reward."""
    return RunConfig(
        game=GameConfig(map_size=8, factories_per_player=1, max_turns=200),
        ppo=PPOConfig(total_steps=total_steps),
        reward=RewardConfig(),
        arch=PolicyConfig(width=32, blocks=2, se_reduction=8,
                          critic_hidden=32),
        master_seed=master_seed,
        opponent="noop",
        pre_spawn_heavies=True,
    )


def selfplay_run_config(total_steps: int = 1_000_000, master_seed: int = 0
                        ) -> RunConfig:
    """Default-map PFSP training sized for a desktop CPU."""
    return RunConfig(
        game=GameConfig(),
        ppo=PPOConfig(total_steps=total_steps, epochs=2,
                      checkpoint_interval=50),
        reward=RewardConfig(),
        league=LeagueConfig(capacity=10),
        arch=PolicyConfig(width=16, blocks=2, se_reduction=8,
                          critic_hidden=16),
        master_seed=master_seed,
        opponent="league",
        pre_spawn_heavies=True,
    )

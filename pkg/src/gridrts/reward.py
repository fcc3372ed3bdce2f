"""Reward distributions: dense ice shaping, sparse final lichen, win/loss.

The shaped signal pays only for the two events on the water-survival chain:
ice dug by own robots and water refined by own factories.  A curriculum
threshold optionally switches shaped -> sparse after a number of updates.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Optional

from .engine import GameState, Outcome, Phase

MODES = ("shaped", "sparse", "win_loss")


@dataclass(frozen=True)
class RewardConfig:
    w_dig_ice: float = 0.01
    w_refine: float = 0.05
    mode: str = "shaped"
    switch_after_updates: Optional[int] = None  # None: curriculum disabled
    sparse_normalizer: Optional[float] = None   # None: raw lichen count

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.w_dig_ice < 0 or self.w_refine < 0:
            raise ValueError("reward weights must be non-negative")
        if self.switch_after_updates is not None and self.mode != "shaped":
            raise ValueError("the curriculum only switches shaped -> sparse")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RewardConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown RewardConfig keys: {sorted(unknown)}")
        return cls(**data)


def shaped_reward(event_log: list[dict], player: int,
                  config: RewardConfig = RewardConfig()) -> float:
    """Dense reward for one engine step's events."""
    total = 0.0
    for event in event_log:
        if event["player"] != player:
            continue
        if event["type"] == "dig" and event["resource"] == "ice":
            total += config.w_dig_ice * event["amount"]
        elif event["type"] == "refine" and event["resource"] == "water":
            total += config.w_refine * event["amount"]
    return total


def sparse_reward(final_state: GameState, player: int,
                  config: RewardConfig = RewardConfig()) -> float:
    """Total lichen owned at termination (eliminated players hold none)."""
    if final_state.phase != Phase.FINISHED:
        raise ValueError("sparse reward is only defined at termination")
    total = float(final_state.lichen_total(player))
    if config.sparse_normalizer:
        total /= config.sparse_normalizer
    return total


def win_loss_reward(final_state: GameState, player: int) -> float:
    if final_state.phase != Phase.FINISHED:
        raise ValueError("win/loss reward is only defined at termination")
    if final_state.outcome == Outcome.DRAW:
        return 0.0
    return 1.0 if int(final_state.outcome) == player else -1.0


def select_reward(update_counter: int, config: RewardConfig) -> str:
    """Active reward mode at a given training update."""
    if (config.mode == "shaped" and config.switch_after_updates is not None
            and update_counter >= config.switch_after_updates):
        return "sparse"
    return config.mode


def step_reward(events: list[dict], state: GameState, done: bool, player: int,
                update_counter: int, config: RewardConfig) -> float:
    """Per-step reward under the currently selected mode."""
    mode = select_reward(update_counter, config)
    if mode == "shaped":
        return shaped_reward(events, player, config)
    if not done:
        return 0.0
    if mode == "sparse":
        return sparse_reward(state, player, config)
    return win_loss_reward(state, player)

"""Prioritized fictitious self-play pool.

A fixed-capacity FIFO of policy checkpoints: every N updates the trainer
appends a snapshot and the oldest entry falls out.  Opponent sampling takes
the newest entry half the time and a uniform older one otherwise.  Ratings
are a simplified Elo-style skill estimate kept for ranking and logging
only; they never influence eviction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

ELO_K = 2.0
ELO_SCALE = 8.0
SIGMA_DECAY = 0.98
SIGMA_FLOOR = 1.0


@dataclass(frozen=True)
class Rating:
    mu: float = 25.0
    sigma: float = 25.0 / 3.0

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def expected_win(a: Rating, b: Rating) -> float:
    """Logistic win probability of `a` over `b`."""
    return 1.0 / (1.0 + math.exp(-(a.mu - b.mu) / ELO_SCALE))


def _decay(sigma: float) -> float:
    return max(SIGMA_FLOOR, sigma * SIGMA_DECAY)


def update_rating(winner: Rating, loser: Rating, draw: bool = False
                  ) -> tuple[Rating, Rating]:
    """Elo-style update; total mu is conserved.

    A decisive result moves mu by K * (1 - p_win) toward the winner; a draw
    moves both ratings toward each other by K * (0.5 - p_win).
    """
    p_win = expected_win(winner, loser)
    score = 0.5 if draw else 1.0
    delta = ELO_K * (score - p_win)
    return (Rating(winner.mu + delta, _decay(winner.sigma)),
            Rating(loser.mu - delta, _decay(loser.sigma)))


@dataclass
class PoolEntry:
    id: int
    update_counter: int
    rating: Rating = field(default_factory=Rating)
    snapshot: Any = None          # in-memory policy (or None when file-backed)
    filename: Optional[str] = None


class CheckpointPool:
    """FIFO queue of checkpoints with insertion-ordered ids."""

    def __init__(self, capacity: int = 10):
        if capacity < 1:
            raise ValueError("pool capacity must be >= 1")
        self.capacity = capacity
        self.entries: list[PoolEntry] = []
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.entries)

    def add_checkpoint(self, snapshot: Any, update_counter: int,
                       filename: Optional[str] = None) -> PoolEntry:
        entry = PoolEntry(id=self._next_id, update_counter=update_counter,
                          snapshot=snapshot, filename=filename)
        self._next_id += 1
        self.entries.append(entry)
        if len(self.entries) > self.capacity:
            self.entries.pop(0)  # strictly FIFO, ratings are diagnostic only
        return entry

    def latest(self) -> PoolEntry:
        if not self.entries:
            raise ValueError("empty checkpoint pool")
        return self.entries[-1]

    def sample_opponent(self, rng: np.random.Generator) -> PoolEntry:
        """Newest entry with probability 0.5, else uniform over the rest."""
        if not self.entries:
            raise ValueError("cannot sample an opponent from an empty pool")
        if len(self.entries) == 1:
            return self.entries[0]
        if rng.random() < 0.5:
            return self.entries[-1]
        return self.entries[int(rng.integers(len(self.entries) - 1))]

    def entry_by_id(self, entry_id: int) -> PoolEntry:
        for entry in self.entries:
            if entry.id == entry_id:
                return entry
        raise KeyError(f"checkpoint {entry_id} is not in the pool")

    def record_result(self, entry_id: int, learner: Rating, learner_won: bool,
                      draw: bool = False) -> Rating:
        """Update the learner's and one pool entry's ratings after a game."""
        entry = self.entry_by_id(entry_id)
        if learner_won:
            learner, entry.rating = update_rating(learner, entry.rating, draw)
        else:
            entry.rating, learner = update_rating(entry.rating, learner, draw)
        return learner

    def rank(self) -> list[int]:
        """Entry ids ordered by mu descending, ties broken by recency."""
        order = sorted(self.entries, key=lambda e: (-e.rating.mu, -e.id))
        return [entry.id for entry in order]

    def to_manifest(self) -> dict:
        return {
            "capacity": self.capacity,
            "next_id": self._next_id,
            "entries": [{"id": e.id, "update_counter": e.update_counter,
                         "mu": e.rating.mu, "sigma": e.rating.sigma,
                         "file": e.filename}
                        for e in self.entries],
        }

    def save_manifest(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_manifest(), indent=2,
                                         sort_keys=True) + "\n")

    @classmethod
    def from_manifest(cls, data: dict) -> "CheckpointPool":
        pool = cls(capacity=data["capacity"])
        pool._next_id = data["next_id"]
        for item in data["entries"]:
            pool.entries.append(PoolEntry(
                id=item["id"], update_counter=item["update_counter"],
                rating=Rating(item["mu"], item["sigma"]),
                filename=item["file"]))
        return pool

    @classmethod
    def load_manifest(cls, path: str | Path) -> "CheckpointPool":
        return cls.from_manifest(json.loads(Path(path).read_text()))


def rank_pool(pool: CheckpointPool) -> list[int]:
    return pool.rank()

"""Replay files: JSON lines, one header record then one record per turn.

The header carries the full config, the game seed and the zero bids; each
turn record carries both command lists, the event log and the post-step
state hash, which lets `verify_replay` re-simulate and detect corruption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

from .config import GameConfig
from .state import FactoryCommand, GameState, RobotCommand, state_hash

FORMAT_VERSION = 1


class ReplayError(ValueError):
    """Raised for unreadable, truncated or hash-inconsistent replays."""


def _commands_to_json(commands: list) -> list[dict]:
    return [cmd.to_dict() for cmd in commands]


def _commands_from_json(data: list[dict]) -> list:
    out = []
    for d in data:
        if "factory" in d:
            out.append(FactoryCommand.from_dict(d))
        else:
            out.append(RobotCommand.from_dict(d))
    return out


class ReplayWriter:
    def __init__(self, path: str | Path, config: GameConfig, seed: int,
                 pre_spawn_heavies: bool = False):
        self._fh = open(path, "w")
        header = {"format_version": FORMAT_VERSION, "seed": seed,
                  "bids": [0, 0], "pre_spawn_heavies": pre_spawn_heavies,
                  "config": config.to_dict()}
        self._fh.write(json.dumps(header, sort_keys=True) + "\n")

    def append(self, turn: int, commands_p0: list, commands_p1: list,
               events: list[dict], digest: str) -> None:
        record = {"turn": turn,
                  "commands_p0": _commands_to_json(commands_p0),
                  "commands_p1": _commands_to_json(commands_p1),
                  "events": events,
                  "state_hash": digest}
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "ReplayWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass
class ReplayTurn:
    turn: int
    commands_p0: list
    commands_p1: list
    events: list[dict]
    state_hash: str


@dataclass
class Replay:
    seed: int
    config: GameConfig
    turns: list[ReplayTurn]
    pre_spawn_heavies: bool = False


def read_replay(path: str | Path) -> Replay:
    path = Path(path)
    turns: list[ReplayTurn] = []
    header: Optional[dict] = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayError(f"{path}:{lineno}: bad JSON ({exc})") from exc
            if header is None:
                if "config" not in record or "seed" not in record:
                    raise ReplayError(f"{path}:{lineno}: missing replay header")
                header = record
                continue
            try:
                turns.append(ReplayTurn(
                    turn=record["turn"],
                    commands_p0=_commands_from_json(record["commands_p0"]),
                    commands_p1=_commands_from_json(record["commands_p1"]),
                    events=record["events"],
                    state_hash=record["state_hash"]))
            except KeyError as exc:
                raise ReplayError(f"{path}:{lineno}: missing field {exc}") from exc
    if header is None:
        raise ReplayError(f"{path}: empty replay file")
    return Replay(seed=header["seed"],
                  config=GameConfig.from_dict(header["config"]),
                  turns=turns,
                  pre_spawn_heavies=header.get("pre_spawn_heavies", False))


def verify_replay(replay: Replay,
                  on_turn: Optional[Callable[[int, GameState], None]] = None
                  ) -> GameState:
    """Re-simulate a replay, checking every state hash.

    `on_turn` is called with (turn, state) after each verified step, which
    the replay CLI uses to collect lichen/water curves and board renders.
    """
    from . import new_game, spawn_starting_robots
    from .step import step

    state = new_game(replay.config, replay.seed)
    if replay.pre_spawn_heavies:
        spawn_starting_robots(state)
    if on_turn is not None:
        on_turn(0, state)
    for i, turn in enumerate(replay.turns, start=1):
        state, _ = step(state, turn.commands_p0, turn.commands_p1)
        digest = state_hash(state)
        if digest != turn.state_hash:
            raise ReplayError(
                f"state hash mismatch at turn record {i} (turn {turn.turn}): "
                f"recorded {turn.state_hash[:12]}.., resimulated {digest[:12]}..")
        if on_turn is not None:
            on_turn(turn.turn, state)
    return state


def replay_digest(turn_hashes: list[str]) -> str:
    """Single digest summarizing a whole game (hash of per-turn hashes)."""
    import hashlib
    h = hashlib.sha256()
    for digest in turn_hashes:
        h.update(bytes.fromhex(digest))
    return h.hexdigest()

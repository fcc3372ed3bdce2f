"""Replay inspection: verification, per-turn curves, ASCII board renders."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional

from ..engine import GameState, Outcome
from ..engine.replay import ReplayError, read_replay, verify_replay

_OUTCOME_TEXT = {int(Outcome.P0_WINS): "player 0 wins",
                 int(Outcome.P1_WINS): "player 1 wins",
                 int(Outcome.DRAW): "draw"}


def render_board(state: GameState) -> str:
    """One character per cell: factories F/f, robots H/h/L/l (upper = p0),
    resources * (ice) and o (ore), lichen + / -, rubble shading . : #."""
    size = state.board.size
    grid = [[" "] * size for _ in range(size)]
    for y in range(size):
        for x in range(size):
            r = state.board.rubble[y, x]
            grid[y][x] = "#" if r > 66 else ":" if r > 33 else "." if r > 0 else " "
            if state.board.lichen[y, x] > 0:
                grid[y][x] = "+" if state.board.lichen_owner[y, x] == 0 else "-"
            if state.board.ice[y, x]:
                grid[y][x] = "*"
            elif state.board.ore[y, x]:
                grid[y][x] = "o"
    for factory in state.factories.values():
        for (y, x) in factory.footprint():
            grid[y][x] = "F" if factory.owner == 0 else "f"
    for robot in state.robots.values():
        y, x = robot.pos
        symbol = "H" if robot.kind == 1 else "L"
        grid[y][x] = symbol if robot.owner == 0 else symbol.lower()
    return "\n".join("".join(row) for row in grid)


def summarize_replay(path: str | Path, show_turn: Optional[int] = None,
                     out=sys.stdout) -> int:
    """Verify and summarize a replay; returns a process exit status."""
    try:
        replay = read_replay(path)
    except ReplayError as exc:
        print(f"error: {exc}", file=out)
        return 2

    curves: list[tuple[int, int, int, int, int]] = []
    renders: dict[int, str] = {}

    def on_turn(turn: int, state: GameState) -> None:
        water = [sum(f.water for f in state.player_factories(p)) for p in (0, 1)]
        curves.append((turn, state.lichen_total(0), state.lichen_total(1),
                       water[0], water[1]))
        if show_turn is not None and turn == show_turn:
            renders[turn] = render_board(state)

    try:
        final = verify_replay(replay, on_turn=on_turn)
    except ReplayError as exc:
        print(f"error: {exc}", file=out)
        return 2

    outcome = _OUTCOME_TEXT.get(
        int(final.outcome) if final.outcome is not None else -1, "unfinished")
    print(f"replay: {path}", file=out)
    print(f"seed: {replay.seed}  map: {replay.config.map_size}x"
          f"{replay.config.map_size}  turns: {final.turn}", file=out)
    print(f"outcome: {outcome}", file=out)
    print(f"state hashes verified: {len(replay.turns)}", file=out)
    print("turn,p0_lichen,p1_lichen,p0_water,p1_water", file=out)
    for row in curves:
        print(",".join(str(v) for v in row), file=out)
    if show_turn is not None:
        if show_turn in renders:
            print(f"board at turn {show_turn}:", file=out)
            print(renders[show_turn], file=out)
        else:
            print(f"turn {show_turn} not in replay (0..{final.turn})", file=out)
    return 0

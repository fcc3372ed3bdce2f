"""Pre-game phase: bids (fixed at zero) and scripted factory placement.

Placement greedily maximizes a scoring rule that pulls factories toward ice
first and ore second, away from rubble fields, and apart from enemy
factories.  Both the per-cell scorer and the vectorized scan used during
setup implement the same formula; tests cross-check them.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .config import HEAVY, GameConfig
from .state import Board, CommandError, GameState, Phase, adjacent4

FOOTPRINT_RADIUS = 1        # factories occupy 3x3 blocks
RUBBLE_WINDOW_RADIUS = 2    # scoring looks at the footprint plus one ring


def _nearest_manhattan(cells: np.ndarray, pos: tuple[int, int]) -> float:
    if cells.shape[0] == 0:
        return float("inf")
    return float(np.abs(cells - np.array(pos)).sum(axis=1).min())


def _window_mean(arr: np.ndarray, center: tuple[int, int], radius: int) -> float:
    y, x = center
    window = arr[max(0, y - radius):y + radius + 1, max(0, x - radius):x + radius + 1]
    return float(window.mean())


def footprint_fits(board: Board, center: tuple[int, int]) -> bool:
    y, x = center
    r = FOOTPRINT_RADIUS
    if not (r <= y < board.size - r and r <= x < board.size - r):
        return False
    return bool((board.factory_occ[y - r:y + r + 1, x - r:x + r + 1] == -1).all())


def score_placement(board: Board, cell: tuple[int, int],
                    enemy_factory_cells: Sequence[tuple[int, int]],
                    config: GameConfig) -> float:
    """Score one candidate factory center.

    Raises CommandError when the 3x3 footprint leaves the board or overlaps
    an existing factory.
    """
    if not footprint_fits(board, cell):
        raise CommandError(f"illegal factory footprint at {cell}")
    d_ice = _nearest_manhattan(np.argwhere(board.ice), cell)
    d_ore = _nearest_manhattan(np.argwhere(board.ore), cell)
    score = 0.0
    if np.isfinite(d_ice):
        score += config.placement_w_ice / (1.0 + d_ice)
    if np.isfinite(d_ore):
        score += config.placement_w_ore / (1.0 + d_ore)
    score -= config.placement_w_rubble * _window_mean(
        board.rubble, cell, RUBBLE_WINDOW_RADIUS)
    if enemy_factory_cells:
        d_enemy = min(abs(cell[0] - ey) + abs(cell[1] - ex)
                      for ey, ex in enemy_factory_cells)
        score += config.placement_w_enemy * d_enemy
    return score


def _distance_map(mask: np.ndarray) -> np.ndarray:
    """Manhattan distance from every cell to the nearest True cell."""
    size = mask.shape[0]
    cells = np.argwhere(mask)
    if cells.shape[0] == 0:
        return np.full((size, size), np.inf)
    ys = np.arange(size)
    dy = np.abs(ys[:, None] - cells[:, 0][None, :])  # (size, n)
    dx = np.abs(ys[:, None] - cells[:, 1][None, :])
    return (dy[:, None, :] + dx[None, :, :]).min(axis=2).astype(float)


def _box_sum(arr: np.ndarray, radius: int) -> np.ndarray:
    """Sum over (2r+1)^2 windows, zero-padded; same shape as arr."""
    size = arr.shape[0]
    padded = np.zeros((size + 2 * radius + 1, size + 2 * radius + 1), dtype=np.float64)
    padded[radius + 1:radius + 1 + size, radius + 1:radius + 1 + size] = arr
    c = padded.cumsum(axis=0).cumsum(axis=1)
    w = 2 * radius + 1
    return (c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w])


def _score_scan(board: Board, enemy_centers: list[tuple[int, int]],
                config: GameConfig) -> np.ndarray:
    """Vectorized score_placement over every cell (illegal cells = -inf)."""
    size = board.size
    score = np.zeros((size, size), dtype=np.float64)
    d_ice = _distance_map(board.ice)
    d_ore = _distance_map(board.ore)
    if np.isfinite(d_ice).all():
        score += config.placement_w_ice / (1.0 + d_ice)
    if np.isfinite(d_ore).all():
        score += config.placement_w_ore / (1.0 + d_ore)

    r = RUBBLE_WINDOW_RADIUS
    counts = _box_sum(np.ones((size, size)), r)
    score -= config.placement_w_rubble * _box_sum(board.rubble.astype(np.float64), r) / counts

    if enemy_centers:
        ys = np.arange(size)
        d_enemy = np.full((size, size), np.inf)
        for (ey, ex) in enemy_centers:
            d = np.abs(ys[:, None] - ey) + np.abs(ys[None, :] - ex)
            d_enemy = np.minimum(d_enemy, d)
        score += config.placement_w_enemy * d_enemy

    fits = (_box_sum((board.factory_occ != -1).astype(np.float64), FOOTPRINT_RADIUS) == 0)
    fits[:FOOTPRINT_RADIUS, :] = fits[-FOOTPRINT_RADIUS:, :] = False
    fits[:, :FOOTPRINT_RADIUS] = fits[:, -FOOTPRINT_RADIUS:] = False
    score[~fits] = -np.inf

    # prefer footprints that do not bury resources; fall back on cramped maps
    resource_free = (_box_sum((board.ice | board.ore).astype(np.float64),
                              FOOTPRINT_RADIUS) == 0)
    if (fits & resource_free).any():
        score[~resource_free] = -np.inf
    return score


def best_placement(board: Board, enemy_centers: list[tuple[int, int]],
                   config: GameConfig) -> tuple[int, int]:
    score = _score_scan(board, enemy_centers, config)
    if not np.isfinite(score).any():
        raise CommandError("no legal factory placement cell (malformed map)")
    flat = int(np.argmax(score))  # first maximum in row-major order
    return (flat // board.size, flat % board.size)


def run_setup_phase(state: GameState, rng: np.random.Generator) -> GameState:
    """Resolve bids (both zero) and alternately place all factories."""
    if state.phase != Phase.SETUP:
        raise CommandError(f"setup already done (phase={state.phase.name})")
    first = int(rng.integers(0, 2))
    order = [first, 1 - first] * state.config.factories_per_player
    for player in order:
        enemy_centers = [f.center for f in state.player_factories(1 - player)]
        center = best_placement(state.board, enemy_centers, state.config)
        state.add_factory(player, center)
    state.phase = Phase.NORMAL
    state.turn = 0
    return state


def spawn_starting_robots(state: GameState, kind: int = HEAVY,
                          per_factory: int = 1) -> list[int]:
    """Pre-spawn robots next to ice, one batch per factory (harness helper).

    Each robot lands on the free non-ice cell adjacent to ice that is closest
    to its factory (ties row-major) and starts with a full battery.  Used by
    the smoke task and benchmarks; regular games build robots at factories.
    """
    ice_adjacent = adjacent4(state.board.ice) & ~state.board.ice
    spawned = []
    for fid in sorted(state.factories):
        factory = state.factories[fid]
        candidates = np.argwhere(ice_adjacent
                                 & (state.board.factory_occ == -1)
                                 & (state.robot_grid == -1))
        if candidates.shape[0] == 0:
            continue
        dist = np.abs(candidates - np.array(factory.center)).sum(axis=1)
        order = np.lexsort((candidates[:, 1], candidates[:, 0], dist))
        for i in range(min(per_factory, len(order))):
            pos = tuple(int(v) for v in candidates[order[i]])
            robot = state.add_robot(factory.owner, kind, pos,
                                    power=state.config.battery_capacity[kind])
            spawned.append(robot.id)
    return spawned

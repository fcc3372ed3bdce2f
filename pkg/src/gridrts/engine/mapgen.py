"""Procedural board generation.

Boards are a deterministic function of (seed, config): rubble comes from
bilinearly smoothed value noise quantized to 0..100, and every map quadrant
receives one connected ice patch and one connected ore patch so no start
position is resource-starved.  Resource cells are kept rubble-free.
"""

from __future__ import annotations

import numpy as np

from .config import GameConfig
from .state import Board

_SEED_MASK = (1 << 64) - 1
_NOISE_CELL = 8  # coarse noise lattice spacing, in cells


def _rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, stream]))


def _value_noise(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    """Bilinear interpolation of a coarse uniform lattice, values in [0, 1]."""
    grid = rng.random((size // cell + 2, size // cell + 2))
    t = np.arange(size) / cell
    i0 = np.floor(t).astype(int)
    frac = t - i0
    v00 = grid[np.ix_(i0, i0)]
    v01 = grid[np.ix_(i0, i0 + 1)]
    v10 = grid[np.ix_(i0 + 1, i0)]
    v11 = grid[np.ix_(i0 + 1, i0 + 1)]
    ty = frac[:, None]
    tx = frac[None, :]
    top = v00 * (1 - tx) + v01 * tx
    bottom = v10 * (1 - tx) + v11 * tx
    return top * (1 - ty) + bottom * ty


def patch_size_bounds(config: GameConfig) -> tuple[int, int]:
    """Cells per resource patch, scaled so tiny maps stay mostly open."""
    quadrant = config.map_size // 2
    lo = max(1, quadrant // 8)
    hi = max(lo, quadrant // 4)
    return lo, hi


def _grow_patch(rng: np.random.Generator, blocked: np.ndarray,
                y0: int, x0: int, y1: int, x1: int, target: int) -> list[tuple[int, int]]:
    """Connected blob of up to `target` cells inside the given quadrant."""
    free = [(y, x) for y in range(y0, y1) for x in range(x0, x1) if not blocked[y, x]]
    if not free:
        return []
    origin = free[int(rng.integers(len(free)))]
    cells = {origin}
    while len(cells) < target:
        candidates = []
        for (y, x) in sorted(cells):
            for dy, dx in ((-1, 0), (0, 1), (1, 0), (0, -1)):
                ny, nx = y + dy, x + dx
                if y0 <= ny < y1 and x0 <= nx < x1 and (ny, nx) not in cells \
                        and not blocked[ny, nx]:
                    candidates.append((ny, nx))
        if not candidates:
            break
        cells.add(candidates[int(rng.integers(len(candidates)))])
    return sorted(cells)


def generate_map(seed: int, config: GameConfig) -> Board:
    size = config.map_size
    rng = _rng_for(seed, 0)
    board = Board.empty(size)

    noise = _value_noise(rng, size, _NOISE_CELL)
    # stretch and clip so ~15% of the map is rubble-free (lichen needs bare ground)
    board.rubble[:] = np.round(np.clip(1.4 * noise - 0.2, 0.0, 1.0) * 100).astype(np.int16)

    half = size // 2
    quadrants = ((0, 0, half, half), (0, half, half, size),
                 (half, 0, size, half), (half, half, size, size))
    lo, hi = patch_size_bounds(config)
    for layer in (board.ice, board.ore):
        blocked = board.ice | board.ore
        for (y0, x0, y1, x1) in quadrants:
            target = int(rng.integers(lo, hi + 1))
            for (y, x) in _grow_patch(rng, blocked, y0, x0, y1, x1, target):
                layer[y, x] = True
                blocked[y, x] = True

    board.rubble[board.ice | board.ore] = 0
    return board

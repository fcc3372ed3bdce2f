import numpy as np
import pytest

from gridrts.engine import (Board, CommandError, GameConfig, GameState, Phase,
                            generate_map, new_game, score_placement)
from gridrts.engine.setup import best_placement, footprint_fits

from conftest import small_config


def _blank_board(size=16):
    return Board.empty(size)


def test_score_adjacent_ice_zero_rubble_no_enemy():
    cfg = GameConfig(map_size=16)
    board = _blank_board(16)
    board.ice[5, 6] = True   # one step right of the candidate center
    board.ore[12, 12] = True
    cell = (5, 5)
    d_ore = abs(12 - 5) + abs(12 - 5)
    expected = cfg.placement_w_ice / 2 + cfg.placement_w_ore / (1 + d_ore)
    assert score_placement(board, cell, [], cfg) == pytest.approx(expected)


def test_score_nearer_ice_wins():
    cfg = GameConfig(map_size=16)
    board = _blank_board(16)
    board.ice[8, 8] = True
    near = score_placement(board, (8, 6), [], cfg)
    far = score_placement(board, (8, 3), [], cfg)
    assert near > far


def test_score_enemy_distance_rewarded():
    cfg = GameConfig(map_size=16)
    board = _blank_board(16)
    board.ice[8, 8] = True
    close = score_placement(board, (8, 6), [(8, 4)], cfg)
    clear = score_placement(board, (8, 6), [(14, 14)], cfg)
    assert clear > close


def test_score_rubble_penalty():
    cfg = GameConfig(map_size=16)
    board = _blank_board(16)
    board.ice[2, 2] = True
    clean = score_placement(board, (8, 8), [], cfg)
    board.rubble[6:11, 6:11] = 100
    dirty = score_placement(board, (8, 8), [], cfg)
    assert clean - dirty == pytest.approx(cfg.placement_w_rubble * 100)


def test_score_illegal_footprint_errors():
    cfg = GameConfig(map_size=16)
    board = _blank_board(16)
    with pytest.raises(CommandError):
        score_placement(board, (0, 5), [], cfg)


def _oracle_best(board, enemy_centers, cfg):
    """Exhaustive per-cell scan with score_placement as the oracle."""
    size = board.size
    resource = board.ice | board.ore
    best, best_cell = -np.inf, None
    candidates = []
    for y in range(1, size - 1):
        for x in range(1, size - 1):
            if not footprint_fits(board, (y, x)):
                continue
            buries = resource[y - 1:y + 2, x - 1:x + 2].any()
            candidates.append(((y, x), buries))
    if any(not buries for _, buries in candidates):
        candidates = [(c, b) for c, b in candidates if not b]
    for cell, _ in candidates:
        s = score_placement(board, cell, enemy_centers, cfg)
        if s > best:
            best, best_cell = s, cell
    return best_cell


def test_best_placement_matches_exhaustive_oracle_seed7():
    cfg = GameConfig()
    board = generate_map(7, cfg)
    assert best_placement(board, [], cfg) == _oracle_best(board, [], cfg)
    enemy = [(10, 10), (30, 35)]
    assert best_placement(board, enemy, cfg) == _oracle_best(board, enemy, cfg)


def test_setup_places_one_factory_each_when_configured():
    state = new_game(small_config(), seed=5)
    assert len(state.player_factories(0)) == 1
    assert len(state.player_factories(1)) == 1
    assert state.phase == Phase.NORMAL
    assert state.turn == 0


def test_setup_factories_start_with_150_water_and_metal():
    state = new_game(GameConfig(), seed=5)
    assert len(state.factories) == 4
    for factory in state.factories.values():
        assert factory.water == 150
        assert factory.metal == 150


def test_setup_footprints_disjoint_and_rubble_free():
    state = new_game(GameConfig(), seed=11)
    seen = set()
    for factory in state.factories.values():
        for cell in factory.footprint():
            assert cell not in seen
            seen.add(cell)
            assert state.board.rubble[cell] == 0


def test_setup_alternates_and_matches_scan_oracle_seed7():
    cfg = GameConfig()
    state = new_game(cfg, seed=7)
    # factory ids follow placement order; owners must alternate a,b,a,b
    placed = [state.factories[fid] for fid in sorted(state.factories)]
    owners = [f.owner for f in placed]
    assert owners[0] != owners[1] and owners[:2] * 2 == owners

    # replay the alternating argmax with the per-cell oracle
    replay = GameState(config=cfg, board=generate_map(7, cfg))
    for factory in placed:
        enemy = [f.center for f in replay.factories.values()
                 if f.owner != factory.owner]
        assert _oracle_best(replay.board, enemy, cfg) == factory.center
        replay.add_factory(factory.owner, factory.center)

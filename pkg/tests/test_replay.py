import json

import numpy as np
import pytest

from gridrts.engine import Phase, new_game, state_hash, step
from gridrts.engine.replay import (Replay, ReplayError, ReplayWriter,
                                   read_replay, replay_digest, verify_replay)
from gridrts.actions import compute_masks, actions_to_commands

from conftest import sample_legal_maps, small_config


def _record_game(path, seed=13, turns=40, rng_seed=2):
    cfg = small_config()
    state = new_game(cfg, seed=seed)
    rng = np.random.default_rng(rng_seed)
    with ReplayWriter(path, cfg, seed) as writer:
        for _ in range(turns):
            if state.phase != Phase.NORMAL:
                break
            commands = []
            for player in (0, 1):
                masks = compute_masks(state, player)
                maps = sample_legal_maps(masks, rng)
                cmds, _ = actions_to_commands(*maps, masks, state)
                commands.append(cmds)
            _, events = step(state, commands[0], commands[1])
            writer.append(state.turn, commands[0], commands[1], events,
                          state_hash(state))
    return cfg, state


def test_replay_round_trip_and_verify(tmp_path):
    path = tmp_path / "game.jsonl"
    cfg, final = _record_game(path)
    replay = read_replay(path)
    assert replay.seed == 13
    assert replay.config == cfg
    assert len(replay.turns) == 40
    resimulated = verify_replay(replay)
    assert state_hash(resimulated) == state_hash(final)


def test_replay_commands_preserved_exactly(tmp_path):
    path = tmp_path / "game.jsonl"
    _record_game(path, turns=10)
    replay = read_replay(path)
    # re-serialize and compare: command dicts are lossless
    for turn in replay.turns:
        for cmd in turn.commands_p0 + turn.commands_p1:
            rebuilt = type(cmd).from_dict(cmd.to_dict())
            assert rebuilt == cmd


def test_hash_mismatch_detected(tmp_path):
    path = tmp_path / "game.jsonl"
    _record_game(path, turns=15)
    lines = path.read_text().splitlines()
    record = json.loads(lines[8])
    record["state_hash"] = "0" * 64
    lines[8] = json.dumps(record, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ReplayError, match="mismatch at turn record 8"):
        verify_replay(read_replay(path))


def test_truncated_line_reports_line_number(tmp_path):
    path = tmp_path / "game.jsonl"
    _record_game(path, turns=5)
    text = path.read_text()
    path.write_text(text[:-30])  # chop the tail of the last record
    with pytest.raises(ReplayError, match=r":6: bad JSON"):
        read_replay(path)


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "game.jsonl"
    path.write_text(json.dumps({"turn": 1}) + "\n")
    with pytest.raises(ReplayError, match="header"):
        read_replay(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "game.jsonl"
    path.write_text("")
    with pytest.raises(ReplayError, match="empty"):
        read_replay(path)


def test_replay_digest_depends_on_every_turn():
    hashes = [format(i, "064x") for i in range(5)]
    digest = replay_digest(hashes)
    assert digest != replay_digest(hashes[:-1])
    assert digest == replay_digest(list(hashes))

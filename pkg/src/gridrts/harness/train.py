"""Training entry point: PPO against the PFSP pool or a scripted opponent.

Run directory layout:
    run_config.json     config echo (also read back by --resume)
    metrics.jsonl       one record per update (TrainStats + wall clock)
    episodes.jsonl      one record per finished episode, incl. replay hash
    checkpoints/        versioned policy binaries
    pool.json           checkpoint pool manifest
    trainer_state.json  update/step counters and the learner rating
"""

from __future__ import annotations

import copy
import json
import time
from collections import deque
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import torch

from ..league import CheckpointPool, Rating
from ..policy import GridPolicy, load_checkpoint, save_checkpoint
from ..rl import (LeagueOpponents, ScriptedOpponents, SelfPlayEnv, TrainStats,
                  collect_rollout, update)
from .bots import make_bot
from .run_config import RunConfig

_SEED_MASK = (1 << 64) - 1

StopPredicate = Callable[[int, int, TrainStats], bool]


def _derived_seed(master: int, stream: int) -> int:
    ss = np.random.SeedSequence([master & _SEED_MASK, stream])
    return int(ss.generate_state(2, np.uint64)[0] & 0x7FFFFFFFFFFFFFFF)


def _snapshot(policy: GridPolicy) -> GridPolicy:
    clone = copy.deepcopy(policy)
    clone.eval()
    for param in clone.parameters():
        param.requires_grad_(False)
    return clone


class Trainer:
    def __init__(self, config: RunConfig, out_dir: str | Path,
                 resume: bool = False):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "checkpoints").mkdir(exist_ok=True)
        torch.use_deterministic_algorithms(True)

        self.update_counter = 0
        self.env_steps = 0
        self.learner_rating = Rating()
        self.pool = CheckpointPool(config.league.capacity)

        if resume:
            self._load_state()
        else:
            torch.manual_seed(_derived_seed(config.master_seed, 10))
            self.policy = GridPolicy(config.arch)
            config.save(self.out / "run_config.json")
            self._checkpoint(initial=True)

        self.optimizer = torch.optim.Adam(self.policy.parameters(),
                                          lr=config.ppo.learning_rate)
        self.action_generator = torch.Generator().manual_seed(
            _derived_seed(config.master_seed, 11))
        self.shuffle_generator = torch.Generator().manual_seed(
            _derived_seed(config.master_seed, 12))

        self.envs = [SelfPlayEnv(config.game, config.master_seed, i,
                                 pre_spawn_heavies=config.pre_spawn_heavies)
                     for i in range(config.ppo.num_envs)]
        if config.opponent == "league":
            self.opponents = LeagueOpponents(
                self.pool, config.ppo.num_envs, config.master_seed,
                greedy=config.opponent_greedy)
        else:
            self.opponents = ScriptedOpponents(
                lambda rng: make_bot(config.opponent, rng),
                config.ppo.num_envs, config.master_seed)

        self.reward_window: deque[float] = deque(maxlen=100)
        self.length_window: deque[int] = deque(maxlen=100)

    # --- persistence -------------------------------------------------------

    def _checkpoint_path(self, update_counter: int) -> Path:
        return self.out / "checkpoints" / f"ckpt_{update_counter:06d}.bin"

    def _checkpoint(self, initial: bool = False) -> None:
        if getattr(self, "_last_checkpoint_update", None) == self.update_counter:
            return
        self._last_checkpoint_update = self.update_counter
        path = self._checkpoint_path(self.update_counter)
        save_checkpoint(self.policy, path, self.update_counter)
        save_checkpoint(self.policy, self.out / "checkpoints" / "latest.bin",
                        self.update_counter)
        self.pool.add_checkpoint(_snapshot(self.policy), self.update_counter,
                                 filename=str(path.relative_to(self.out)))
        self.pool.save_manifest(self.out / "pool.json")
        self._save_trainer_state()
        if initial:
            (self.out / "metrics.jsonl").touch()
            (self.out / "episodes.jsonl").touch()

    def _save_trainer_state(self) -> None:
        state = {"update_counter": self.update_counter,
                 "env_steps": self.env_steps,
                 "learner_rating": {"mu": self.learner_rating.mu,
                                    "sigma": self.learner_rating.sigma}}
        (self.out / "trainer_state.json").write_text(
            json.dumps(state, indent=2, sort_keys=True) + "\n")

    def _load_state(self) -> None:
        state = json.loads((self.out / "trainer_state.json").read_text())
        self.update_counter = state["update_counter"]
        self.env_steps = state["env_steps"]
        self.learner_rating = Rating(**state["learner_rating"])
        self.policy, _ = load_checkpoint(self.out / "checkpoints" / "latest.bin")
        self.policy.train()
        self.pool = CheckpointPool.load_manifest(self.out / "pool.json")
        for entry in self.pool.entries:
            entry.snapshot, _ = load_checkpoint(self.out / entry.filename)

    # --- the loop ----------------------------------------------------------

    def train(self, stop_predicate: Optional[StopPredicate] = None) -> dict:
        cfg = self.config
        started = time.time()
        episodes_done = 0
        steps_per_update = cfg.ppo.rollout_length * cfg.ppo.num_envs
        with open(self.out / "metrics.jsonl", "a") as metrics_fh, \
                open(self.out / "episodes.jsonl", "a") as episodes_fh:
            while self.env_steps < cfg.ppo.total_steps:
                buffer, episodes = collect_rollout(
                    self.envs, self.policy, self.opponents, cfg.ppo,
                    cfg.reward, self.update_counter, self.action_generator)
                self.env_steps += steps_per_update
                stats = update(self.policy, self.optimizer, buffer, cfg.ppo,
                               self.shuffle_generator)
                self.update_counter += 1

                for ep in episodes:
                    episodes_done += 1
                    self.reward_window.append(ep.reward)
                    self.length_window.append(ep.length)
                    if cfg.opponent == "league" and ep.opponent_id is not None:
                        try:
                            self.learner_rating = self.pool.record_result(
                                ep.opponent_id, self.learner_rating,
                                learner_won=ep.outcome == 0,
                                draw=ep.outcome == 2)
                        except KeyError:
                            pass  # opponent evicted mid-episode records
                    episodes_fh.write(json.dumps({
                        "env": ep.env_index, "episode": ep.episode,
                        "length": ep.length, "reward": ep.reward,
                        "outcome": ep.outcome, "opponent": ep.opponent_id,
                        "replay_hash": ep.replay_hash}, sort_keys=True) + "\n")

                if self.reward_window:
                    stats.episode_reward_mean = float(np.mean(self.reward_window))
                    stats.episode_length_mean = float(np.mean(self.length_window))
                record = {"update": self.update_counter,
                          "env_steps": self.env_steps,
                          "wall_clock_s": round(time.time() - started, 3),
                          "policy_loss": stats.policy_loss,
                          "value_loss": stats.value_loss,
                          "entropy": stats.entropy,
                          "approx_kl": stats.approx_kl,
                          "clip_fraction": stats.clip_fraction,
                          "episode_reward_mean": stats.episode_reward_mean,
                          "episode_length_mean": stats.episode_length_mean}
                metrics_fh.write(json.dumps(record, sort_keys=True) + "\n")
                metrics_fh.flush()
                episodes_fh.flush()

                if self.update_counter % cfg.log_every == 0:
                    print(f"update {self.update_counter} "
                          f"steps {self.env_steps} "
                          f"reward {stats.episode_reward_mean:.3f} "
                          f"entropy {stats.entropy:.3f} "
                          f"kl {stats.approx_kl:.5f}")

                if self.update_counter % cfg.ppo.checkpoint_interval == 0:
                    self._checkpoint()
                if stop_predicate is not None and stop_predicate(
                        self.update_counter, self.env_steps, stats):
                    break
        self._checkpoint()
        return {"updates": self.update_counter,
                "env_steps": self.env_steps,
                "episodes": episodes_done,
                "wall_clock_s": time.time() - started,
                "final_checkpoint": str(self._checkpoint_path(self.update_counter)),
                "out_dir": str(self.out)}


def run_training(config: RunConfig, out_dir: str | Path, resume: bool = False,
                 stop_predicate: Optional[StopPredicate] = None) -> dict:
    trainer = Trainer(config, out_dir, resume=resume)
    return trainer.train(stop_predicate)

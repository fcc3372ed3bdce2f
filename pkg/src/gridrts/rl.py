"""PPO training machinery: rollouts against pool opponents, GAE, updates.

The learner always controls player 0; opponents see the game through the
mirrored player-1 observation, so a single network plays either side.  All
randomness (map seeds, action sampling, opponent choice, minibatch
shuffling) is derived from one master seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Optional, Sequence

import numpy as np
import torch

from .actions import compute_masks, actions_to_commands
from .engine import GameConfig, GameState, Phase, new_game, spawn_starting_robots, state_hash
from .engine.replay import replay_digest
from .obs import encode_observation
from .policy import GridPolicy, TorchMasks, evaluate_actions, sample_actions_batch
from .reward import RewardConfig, step_reward

_SEED_MASK = (1 << 64) - 1


class TrainingDiverged(RuntimeError):
    """Raised when the PPO loss turns non-finite; the update is aborted."""


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    epochs: int = 4
    minibatches: int = 4
    learning_rate: float = 2.5e-4
    max_grad_norm: float = 0.5
    rollout_length: int = 128        # T
    num_envs: int = 8                # E
    total_steps: int = 1_000_000
    normalize_advantage: bool = True
    checkpoint_interval: int = 20    # updates between pool checkpoints

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if self.epochs < 1 or self.minibatches < 1:
            raise ValueError("epochs and minibatches must be >= 1")
        if self.rollout_length < 1 or self.num_envs < 1:
            raise ValueError("rollout_length and num_envs must be >= 1")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PPOConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown PPOConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrainStats:
    policy_loss: float = 0.0
    value_loss: float = 0.0
    entropy: float = 0.0
    approx_kl: float = 0.0
    clip_fraction: float = 0.0
    episode_reward_mean: float = float("nan")
    episode_length_mean: float = float("nan")


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                bootstrap_value, gamma: float, lam: float
                ) -> tuple[np.ndarray, np.ndarray]:
    """Backward-recursive generalized advantage estimation.

    Accepts (T,) or (T, E) arrays; `bootstrap_value` stands in for the value
    after the last step wherever that step is not terminal.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    squeeze = rewards.ndim == 1
    if squeeze:
        rewards = rewards[:, None]
        values = np.asarray(values, dtype=np.float64)[:, None]
        dones = np.asarray(dones)[:, None]
        bootstrap = np.asarray([bootstrap_value], dtype=np.float64)
    else:
        values = np.asarray(values, dtype=np.float64)
        dones = np.asarray(dones)
        bootstrap = np.asarray(bootstrap_value, dtype=np.float64)
    T = rewards.shape[0]
    advantages = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1], dtype=np.float64)
    next_value = bootstrap
    for t in reversed(range(T)):
        not_done = 1.0 - dones[t].astype(np.float64)
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        running = delta + gamma * lam * not_done * running
        advantages[t] = running
        next_value = values[t]
    returns = advantages + values
    if squeeze:
        return advantages[:, 0], returns[:, 0]
    return advantages, returns


@dataclass
class EpisodeRecord:
    env_index: int
    episode: int
    length: int
    reward: float
    outcome: int            # Outcome value
    opponent_id: Optional[int]
    replay_hash: str


class SelfPlayEnv:
    """One engine game plus the bookkeeping a trainer needs around it."""

    def __init__(self, config: GameConfig, master_seed: int, index: int,
                 pre_spawn_heavies: bool = False, track_hashes: bool = True):
        self.config = config
        self.master_seed = master_seed
        self.index = index
        self.pre_spawn_heavies = pre_spawn_heavies
        self.track_hashes = track_hashes
        self.episode = -1
        self.state: GameState = None  # type: ignore[assignment]
        self.turn_hashes: list[str] = []
        self.episode_reward = 0.0
        self.reset()

    def _episode_seed(self) -> int:
        ss = np.random.SeedSequence(
            [self.master_seed & _SEED_MASK, 1000 + self.index, self.episode])
        return int(ss.generate_state(2, np.uint64)[0])

    def reset(self) -> GameState:
        self.episode += 1
        self.state = new_game(self.config, self._episode_seed())
        if self.pre_spawn_heavies:
            spawn_starting_robots(self.state)
        self.turn_hashes = [state_hash(self.state)] if self.track_hashes else []
        self.episode_reward = 0.0
        return self.state

    def step(self, commands_p0: list, commands_p1: list) -> tuple[list[dict], bool]:
        from .engine import step as engine_step
        _, events = engine_step(self.state, commands_p0, commands_p1)
        if self.track_hashes:
            self.turn_hashes.append(state_hash(self.state))
        return events, self.state.phase == Phase.FINISHED


class OpponentProvider:
    """Supplies player-1 commands; episodes notify it so it can re-draw."""

    def on_episode_start(self, env_index: int) -> None:
        raise NotImplementedError

    def opponent_id(self, env_index: int) -> Optional[int]:
        return None

    def commands_for(self, envs: Sequence[SelfPlayEnv]) -> list[list]:
        raise NotImplementedError


class ScriptedOpponents(OpponentProvider):
    def __init__(self, bot_factory, num_envs: int, master_seed: int):
        self.bots = [bot_factory(np.random.default_rng(
            np.random.SeedSequence([master_seed & _SEED_MASK, 2000 + i])))
            for i in range(num_envs)]

    def on_episode_start(self, env_index: int) -> None:
        pass

    def commands_for(self, envs: Sequence[SelfPlayEnv]) -> list[list]:
        out = []
        for i, env in enumerate(envs):
            masks = compute_masks(env.state, 1)
            out.append(self.bots[i].act(env.state, masks, 1))
        return out


class LeagueOpponents(OpponentProvider):
    """PFSP opponents drawn from the checkpoint pool at episode starts."""

    def __init__(self, pool, num_envs: int, master_seed: int,
                 greedy: bool = False):
        self.pool = pool
        self.greedy = greedy
        self.rng = np.random.default_rng(
            np.random.SeedSequence([master_seed & _SEED_MASK, 3000]))
        self.generator = torch.Generator().manual_seed(
            (master_seed ^ 0x9E3779B97F4A7C15) & 0x7FFFFFFFFFFFFFFF)
        self.assigned: list[Any] = [None] * num_envs
        for i in range(num_envs):
            self.on_episode_start(i)

    def on_episode_start(self, env_index: int) -> None:
        self.assigned[env_index] = self.pool.sample_opponent(self.rng)

    def opponent_id(self, env_index: int) -> Optional[int]:
        return self.assigned[env_index].id

    def commands_for(self, envs: Sequence[SelfPlayEnv]) -> list[list]:
        groups: dict[int, list[int]] = {}
        for i in range(len(envs)):
            groups.setdefault(self.assigned[i].id, []).append(i)
        out: list[Optional[list]] = [None] * len(envs)
        for entry_id, env_indices in sorted(groups.items()):
            policy = self.pool.entry_by_id(entry_id).snapshot
            obs = np.stack([encode_observation(envs[i].state, 1)
                            for i in env_indices])
            masks = [compute_masks(envs[i].state, 1) for i in env_indices]
            tmasks = TorchMasks.from_masksets(masks)
            with torch.no_grad():
                robot_logits, factory_logits, _ = policy(torch.from_numpy(obs))
            robot_maps, factory_maps, _, _ = sample_actions_batch(
                robot_logits, factory_logits, tmasks,
                generator=self.generator, greedy=self.greedy)
            robot_maps = robot_maps.numpy()
            factory_maps = factory_maps.numpy()
            for j, i in enumerate(env_indices):
                commands, dropped = actions_to_commands(
                    robot_maps[j], factory_maps[j], masks[j], envs[i].state)
                assert dropped == 0, "mask-aware sampling must not drop commands"
                out[i] = commands
        return out  # type: ignore[return-value]


class RolloutBuffer:
    """Fixed-horizon storage for one update cycle, shaped (T, E, ...)."""

    def __init__(self, T: int, E: int, planes: int, size: int):
        self.T, self.E = T, E
        self.obs = np.zeros((T, E, planes, size, size), dtype=np.float32)
        self.robot_source = np.zeros((T, E, size, size), dtype=bool)
        self.factory_source = np.zeros((T, E, size, size), dtype=bool)
        self.robot_mask_stack = np.zeros((T, E, 22, size, size), dtype=bool)
        self.factory_mask = np.zeros((T, E, 4, size, size), dtype=bool)
        self.robot_actions = np.zeros((T, E, 5, size, size), dtype=np.int8)
        self.factory_actions = np.zeros((T, E, size, size), dtype=np.int8)
        self.log_probs = np.zeros((T, E), dtype=np.float32)
        self.values = np.zeros((T, E), dtype=np.float32)
        self.rewards = np.zeros((T, E), dtype=np.float32)
        self.dones = np.zeros((T, E), dtype=bool)
        self.advantages: Optional[np.ndarray] = None
        self.returns: Optional[np.ndarray] = None

    @property
    def num_samples(self) -> int:
        return self.T * self.E

    def finalize(self, bootstrap_value: np.ndarray, gamma: float,
                 lam: float) -> None:
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.dones, bootstrap_value, gamma, lam)

    def flat(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        return arr.reshape(self.num_samples, *arr.shape[2:])

    def minibatch(self, indices: np.ndarray) -> dict[str, Any]:
        masks = TorchMasks(
            robot_source=torch.from_numpy(self.flat("robot_source")[indices]),
            factory_source=torch.from_numpy(self.flat("factory_source")[indices]),
            robot_stack=torch.from_numpy(self.flat("robot_mask_stack")[indices]),
            factory_action=torch.from_numpy(self.flat("factory_mask")[indices]),
        )
        return {
            "obs": torch.from_numpy(self.flat("obs")[indices]),
            "masks": masks,
            "robot_actions": torch.from_numpy(
                self.flat("robot_actions")[indices]).to(torch.int64),
            "factory_actions": torch.from_numpy(
                self.flat("factory_actions")[indices]).to(torch.int64),
            "old_log_probs": torch.from_numpy(self.flat("log_probs")[indices]),
            "advantages": torch.from_numpy(
                self.flat("advantages")[indices].astype(np.float32)),
            "returns": torch.from_numpy(
                self.flat("returns")[indices].astype(np.float32)),
        }


def collect_rollout(envs: Sequence[SelfPlayEnv], policy: GridPolicy,
                    opponents: OpponentProvider, config: PPOConfig,
                    reward_config: RewardConfig, update_counter: int,
                    action_generator: torch.Generator
                    ) -> tuple[RolloutBuffer, list[EpisodeRecord]]:
    """Run E environments for T lockstep steps under the current policy."""
    E = len(envs)
    T = config.rollout_length
    size = envs[0].state.board.size
    buffer = RolloutBuffer(T, E, 17, size)
    episodes: list[EpisodeRecord] = []

    for t in range(T):
        obs = np.stack([encode_observation(env.state, 0) for env in envs])
        mask_list = [compute_masks(env.state, 0) for env in envs]
        tmasks = TorchMasks.from_masksets(mask_list)
        with torch.no_grad():
            robot_logits, factory_logits, values = policy(torch.from_numpy(obs))
        robot_maps, factory_maps, log_probs, _ = sample_actions_batch(
            robot_logits, factory_logits, tmasks, generator=action_generator)
        robot_maps_np = robot_maps.numpy()
        factory_maps_np = factory_maps.numpy()
        opponent_commands = opponents.commands_for(envs)

        buffer.obs[t] = obs
        for i, masks in enumerate(mask_list):
            buffer.robot_source[t, i] = masks.robot_source
            buffer.factory_source[t, i] = masks.factory_source
            buffer.robot_mask_stack[t, i] = masks.robot_stack()
            buffer.factory_mask[t, i] = masks.factory_action
        buffer.robot_actions[t] = robot_maps_np
        buffer.factory_actions[t] = factory_maps_np
        buffer.log_probs[t] = log_probs.numpy()
        buffer.values[t] = values.numpy()

        for i, env in enumerate(envs):
            commands, dropped = actions_to_commands(
                robot_maps_np[i], factory_maps_np[i], mask_list[i], env.state)
            assert dropped == 0, "mask-aware sampling must not drop commands"
            events, done = env.step(commands, opponent_commands[i])
            reward = step_reward(events, env.state, done, 0, update_counter,
                                 reward_config)
            env.episode_reward += reward
            buffer.rewards[t, i] = reward
            buffer.dones[t, i] = done
            if done:
                episodes.append(EpisodeRecord(
                    env_index=i, episode=env.episode, length=env.state.turn,
                    reward=env.episode_reward,
                    outcome=int(env.state.outcome),
                    opponent_id=opponents.opponent_id(i),
                    replay_hash=(replay_digest(env.turn_hashes)
                                 if env.track_hashes else "")))
                env.reset()
                opponents.on_episode_start(i)

    final_obs = np.stack([encode_observation(env.state, 0) for env in envs])
    with torch.no_grad():
        _, _, bootstrap = policy(torch.from_numpy(final_obs))
    buffer.finalize(bootstrap.numpy(), gamma=config.gamma,
                    lam=config.gae_lambda)
    return buffer, episodes


def ppo_loss(policy: GridPolicy, batch: dict[str, Any], config: PPOConfig
             ) -> tuple[torch.Tensor, dict[str, float]]:
    """Clipped-surrogate loss over one minibatch plus its diagnostics."""
    advantages = batch["advantages"]
    if config.normalize_advantage:
        std = torch.clamp(advantages.std(), min=1e-8)
        advantages = (advantages - advantages.mean()) / std
    new_logp, entropy, value = evaluate_actions(
        policy, batch["obs"], batch["masks"], batch["robot_actions"],
        batch["factory_actions"])
    ratio = torch.exp(new_logp - batch["old_log_probs"])
    unclipped = ratio * advantages
    clipped = torch.clamp(ratio, 1.0 - config.clip_eps,
                          1.0 + config.clip_eps) * advantages
    policy_term = -torch.minimum(unclipped, clipped).mean()
    value_term = ((value - batch["returns"]) ** 2).mean()
    entropy_term = entropy.mean()
    loss = policy_term + config.vf_coef * value_term \
        - config.ent_coef * entropy_term
    if not torch.isfinite(loss):
        raise TrainingDiverged(
            f"non-finite PPO loss (policy={float(policy_term)}, "
            f"value={float(value_term)}, entropy={float(entropy_term)})")
    with torch.no_grad():
        approx_kl = ((ratio - 1.0) - torch.log(ratio)).mean()
        clip_fraction = ((ratio - 1.0).abs() > config.clip_eps).float().mean()
        stats = {"policy_loss": float(policy_term),
                 "value_loss": float(value_term),
                 "entropy": float(entropy_term),
                 "approx_kl": float(approx_kl),
                 "clip_fraction": float(clip_fraction)}
    return loss, stats


def update(policy: GridPolicy, optimizer: torch.optim.Optimizer,
           buffer: RolloutBuffer, config: PPOConfig,
           shuffle_generator: torch.Generator) -> TrainStats:
    """Epochs x minibatches of clipped-surrogate gradient steps."""
    if buffer.advantages is None:
        raise ValueError("buffer advantages not computed (finalize first)")
    n = buffer.num_samples
    collected: dict[str, list[float]] = {}
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=shuffle_generator).numpy()
        for chunk in np.array_split(perm, config.minibatches):
            loss, stats = ppo_loss(policy, buffer.minibatch(chunk), config)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(policy.parameters(),
                                           config.max_grad_norm)
            optimizer.step()
            for key, val in stats.items():
                collected.setdefault(key, []).append(val)
    return TrainStats(**{key: float(np.mean(vals))
                         for key, vals in collected.items()})

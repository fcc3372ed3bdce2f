"""Head-to-head evaluation: checkpoint vs checkpoint or vs a scripted bot."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from ..actions import actions_to_commands, compute_masks
from ..engine import (GameConfig, Outcome, Phase, new_game,
                      spawn_starting_robots, state_hash, step)
from ..engine.replay import ReplayWriter
from ..obs import encode_observation
from ..policy import GridPolicy, load_checkpoint, sample_actions
from .bots import Bot, make_bot

_SEED_MASK = (1 << 64) - 1


class PolicyAgent:
    """Plays one side with a trained network (greedy by default)."""

    def __init__(self, policy: GridPolicy, greedy: bool = True,
                 seed: int = 0):
        self.policy = policy
        self.greedy = greedy
        self.generator = torch.Generator().manual_seed(seed)

    def act(self, state, masks, player: int) -> list:
        obs = encode_observation(state, player)
        robot_logits, factory_logits, _ = self.policy.forward_single(obs)
        sample = sample_actions(robot_logits, factory_logits, masks,
                                generator=self.generator, greedy=self.greedy)
        commands, dropped = actions_to_commands(
            sample.robot_maps, sample.factory_maps, masks, state)
        assert dropped == 0
        return commands


class BotAgent:
    def __init__(self, bot: Bot):
        self.bot = bot

    def act(self, state, masks, player: int) -> list:
        return self.bot.act(state, masks, player)


def load_agent(spec: str, greedy: bool = True, seed: int = 0):
    """`spec` is either a checkpoint path or a bot id."""
    if spec in ("noop", "random_legal", "ice_rusher"):
        rng = np.random.default_rng(seed & _SEED_MASK)
        return BotAgent(make_bot(spec, rng))
    policy, _ = load_checkpoint(spec)
    return PolicyAgent(policy, greedy=greedy, seed=seed)


@dataclass
class EvalResult:
    games: int = 0
    wins_a: int = 0
    draws: int = 0
    losses_a: int = 0
    mean_length: float = 0.0
    mean_lichen_a: float = 0.0
    mean_lichen_b: float = 0.0
    per_game: list = field(default_factory=list)

    def win_rate_a(self) -> float:
        return self.wins_a / self.games if self.games else 0.0

    def table(self) -> str:
        return "\n".join([
            f"games            {self.games}",
            f"wins (A)         {self.wins_a}",
            f"draws            {self.draws}",
            f"losses (A)       {self.losses_a}",
            f"win rate (A)     {self.win_rate_a():.3f}",
            f"mean ep length   {self.mean_length:.1f}",
            f"mean lichen (A)  {self.mean_lichen_a:.1f}",
            f"mean lichen (B)  {self.mean_lichen_b:.1f}",
        ])


def play_game(agent_p0, agent_p1, config: GameConfig, seed: int,
              pre_spawn_heavies: bool = False,
              replay_path: Optional[str | Path] = None,
              max_steps: Optional[int] = None) -> dict:
    state = new_game(config, seed)
    if pre_spawn_heavies:
        spawn_starting_robots(state)
    writer = ReplayWriter(replay_path, config, seed,
                          pre_spawn_heavies=pre_spawn_heavies) \
        if replay_path else None
    steps = 0
    while state.phase == Phase.NORMAL:
        commands = []
        for player, agent in ((0, agent_p0), (1, agent_p1)):
            masks = compute_masks(state, player)
            commands.append(agent.act(state, masks, player))
        _, events = step(state, commands[0], commands[1])
        if writer:
            writer.append(state.turn, commands[0], commands[1], events,
                          state_hash(state))
        steps += 1
        if max_steps is not None and steps >= max_steps:
            break
    if writer:
        writer.close()
    return {"outcome": int(state.outcome) if state.outcome is not None else -1,
            "turns": state.turn,
            "lichen": (state.lichen_total(0), state.lichen_total(1))}


def run_eval(agent_a, agent_b, games: int, seed: int, config: GameConfig,
             pre_spawn_heavies: bool = False,
             replay_dir: Optional[str | Path] = None) -> EvalResult:
    """Play `games` matches with alternating sides; deterministic in `seed`."""
    result = EvalResult()
    lengths, lichen_a, lichen_b = [], [], []
    for g in range(games):
        game_seed = int(np.random.SeedSequence(
            [seed & _SEED_MASK, g]).generate_state(2, np.uint64)[0])
        a_is_p0 = g % 2 == 0
        p0, p1 = (agent_a, agent_b) if a_is_p0 else (agent_b, agent_a)
        replay_path = None
        if replay_dir is not None:
            replay_path = Path(replay_dir) / f"game_{g:04d}.jsonl"
        outcome = play_game(p0, p1, config, game_seed,
                            pre_spawn_heavies=pre_spawn_heavies,
                            replay_path=replay_path)
        result.games += 1
        winner = outcome["outcome"]
        a_side = 0 if a_is_p0 else 1
        if winner == int(Outcome.DRAW):
            result.draws += 1
        elif winner == a_side:
            result.wins_a += 1
        else:
            result.losses_a += 1
        lengths.append(outcome["turns"])
        la, lb = outcome["lichen"]
        if not a_is_p0:
            la, lb = lb, la
        lichen_a.append(la)
        lichen_b.append(lb)
        result.per_game.append({"game": g, "seed": game_seed,
                                "a_played": "p0" if a_is_p0 else "p1",
                                "outcome": winner, "turns": outcome["turns"]})
    result.mean_length = float(np.mean(lengths)) if lengths else 0.0
    result.mean_lichen_a = float(np.mean(lichen_a)) if lichen_a else 0.0
    result.mean_lichen_b = float(np.mean(lichen_b)) if lichen_b else 0.0
    return result

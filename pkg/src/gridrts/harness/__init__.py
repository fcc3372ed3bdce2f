"""CLI, run configuration, scripted bots, training/eval/benchmark tooling."""

from .bots import make_bot, scripted_step
from .run_config import RunConfig, selfplay_run_config, smoke_run_config
from .train import run_training

__all__ = ["RunConfig", "make_bot", "run_training", "scripted_step",
           "selfplay_run_config", "smoke_run_config"]

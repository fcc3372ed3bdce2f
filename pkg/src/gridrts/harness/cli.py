"""Command line interface.

    gridrts train --config PATH --out DIR [--resume DIR]
    gridrts eval --a PATH --b PATH|--bot ID --games N --seed S
    gridrts benchmark [--config PATH] --steps N [--policy]
    gridrts replay PATH [--turn T]

Any config key can be overridden via GRIDRTS_SECTION__KEY env vars.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..engine import ConfigError, GameConfig
from .benchmark import format_report, run_benchmark
from .evaluate import load_agent, run_eval
from .replay_cmd import summarize_replay
from .run_config import RunConfig
from .train import run_training


def _cmd_train(args) -> int:
    try:
        if args.resume:
            out_dir = Path(args.resume)
            config = RunConfig.load(out_dir / "run_config.json")
            summary = run_training(config, out_dir, resume=True)
        else:
            if not args.config or not args.out:
                print("error: train needs --config and --out (or --resume DIR)",
                      file=sys.stderr)
                return 2
            config = RunConfig.load(args.config)
            summary = run_training(config, args.out)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"done: {summary['updates']} updates, {summary['env_steps']} env "
          f"steps, {summary['episodes']} episodes -> {summary['out_dir']}")
    return 0


def _cmd_eval(args) -> int:
    if (args.b is None) == (args.bot is None):
        print("error: eval needs exactly one of --b or --bot", file=sys.stderr)
        return 2
    try:
        config = GameConfig.load(args.config) if args.config else GameConfig()
        agent_a = load_agent(args.a, greedy=not args.sample, seed=args.seed)
        agent_b = load_agent(args.b or args.bot, greedy=not args.sample,
                             seed=args.seed + 1)
        replay_dir = None
        if args.save_replays:
            replay_dir = Path(args.save_replays)
            replay_dir.mkdir(parents=True, exist_ok=True)
        result = run_eval(agent_a, agent_b, args.games, args.seed, config,
                          pre_spawn_heavies=args.pre_spawn,
                          replay_dir=replay_dir)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(result.table())
    return 0


def _cmd_benchmark(args) -> int:
    try:
        config = GameConfig.load(args.config) if args.config else GameConfig()
        report = run_benchmark(config, args.steps, with_policy=False,
                               seed=args.seed)
        print(format_report(report))
        if args.policy:
            report = run_benchmark(config, args.steps, with_policy=True,
                                   seed=args.seed)
            print()
            print(format_report(report))
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_replay(args) -> int:
    return summarize_replay(args.path, show_turn=args.turn)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridrts",
        description="grid RTS engine with a centralized-control PPO stack")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run PPO training")
    train.add_argument("--config", help="run config JSON")
    train.add_argument("--out", help="output directory")
    train.add_argument("--resume", help="resume from a previous run directory")
    train.set_defaults(func=_cmd_train)

    ev = sub.add_parser("eval", help="pit two agents against each other")
    ev.add_argument("--a", required=True, help="checkpoint path or bot id")
    ev.add_argument("--b", help="checkpoint path for side B")
    ev.add_argument("--bot", help="bot id for side B "
                    "(noop, random_legal, ice_rusher)")
    ev.add_argument("--games", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--config", help="game config JSON")
    ev.add_argument("--sample", action="store_true",
                    help="sample policies instead of greedy argmax")
    ev.add_argument("--pre-spawn", action="store_true",
                    help="pre-spawn a heavy per factory")
    ev.add_argument("--save-replays", help="directory for replay JSONL files")
    ev.set_defaults(func=_cmd_eval)

    bench = sub.add_parser("benchmark", help="measure engine steps/s")
    bench.add_argument("--config", help="game config JSON")
    bench.add_argument("--steps", type=int, required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--policy", action="store_true",
                       help="also measure engine+policy stepping")
    bench.set_defaults(func=_cmd_benchmark)

    rep = sub.add_parser("replay", help="verify and summarize a replay")
    rep.add_argument("path")
    rep.add_argument("--turn", type=int, help="render the board at this turn")
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

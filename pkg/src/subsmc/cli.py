"""Command line interface: run, sweep, and replay experiment modes."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    run_experiment,
    run_replay_oracle,
    write_csv,
    write_replay_csv,
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file (defaults built in)")
    sub.add_argument("--seed", type=int, help="override run.master_seed")
    sub.add_argument("--out", required=True, help="output CSV path")
    sub.add_argument("--workers", type=int, help="parallel worker count")
    sub.add_argument("--timings", action="store_true",
                     help="record wall time per run (makes output nondeterministic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subsmc",
        description="Sequential MCMC tracking experiments with adaptive "
                    "measurement subsampling")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run the base configuration point")
    _add_common(run)
    run.add_argument("--mode", choices=("standard", "adaptive", "paired", "replay-oracle"),
                     help="override run.mode")

    sweep = subs.add_parser("sweep", help="run every sweep point in the config")
    _add_common(sweep)
    sweep.add_argument("--mode", choices=("standard", "adaptive", "paired"),
                       help="override run.mode")

    replay = subs.add_parser("replay", help="replay adaptive decisions against full data")
    _add_common(replay)
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"key 'run.workers': must be at least 1, got {args.workers}")
        updates["workers"] = args.workers
    if getattr(args, "mode", None):
        updates["mode"] = args.mode
    if args.timings:
        updates["timings"] = True
    return replace(cfg, **updates) if updates else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "replay" or cfg.mode == "replay-oracle":
            report = run_replay_oracle(cfg)
            write_replay_csv(report, args.out)
            print(f"replayed {report.total} decisions, {report.disagreements} "
                  f"disagreements (rate {report.rate:.4f}) -> {args.out}")
        elif args.command == "sweep":
            if not cfg.sweep:
                raise ConfigError("sweep command requires sweep.<id>.<key> entries")
            rows = run_experiment(cfg)
            write_csv(rows, args.out)
            print(f"wrote {len(rows)} rows over {len(cfg.sweep)} sweep points -> {args.out}")
        else:
            cfg = replace(cfg, sweep=())
            rows = run_experiment(cfg)
            write_csv(rows, args.out)
            print(f"wrote {len(rows)} rows -> {args.out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

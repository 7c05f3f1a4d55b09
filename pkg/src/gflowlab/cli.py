"""Command-line entry point.

Subcommands: train, eval, oracle, compare, serve, scatter.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
The GFLOWLAB_OUTPUT_ROOT environment variable prefixes relative output
directories; resolved paths are printed on start.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_mod
from . import config as config_mod
from . import experiment, plots
from .env import LANDSCAPE_NAMES
from .errors import ConfigError, TrainingError
from .gfn import GFNModel
from .goalsampler import TabGS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _output_dir(path: Path) -> Path:
    root = os.environ.get("GFLOWLAB_OUTPUT_ROOT")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def cmd_train(args: argparse.Namespace) -> int:
    if args.resume:
        ck = ckpt_mod.load(args.resume)
        run = ck.run
        out = _output_dir(run.output_dir)
        print(f"resuming {args.resume} at step {ck.step}; output: {out}")
        trainer = ck.restore_trainer()
        log = trainer.run()
        seed = run.train.seed
        seed_dir = out / f"seed{seed}"
        old = (experiment.read_jsonl(seed_dir / "train_log.jsonl")
               if (seed_dir / "train_log.jsonl").exists() else [])
        experiment.write_jsonl(seed_dir / "train_log.jsonl", old + log)
        ckpt_mod.save(seed_dir / "checkpoint.gfl", trainer, run)
        print(f"trained to step {trainer.step_index}")
        return EXIT_OK

    run = config_mod.load(args.config, args.set or [])
    out = _output_dir(run.output_dir)
    print(f"config: {args.config}; output: {out}")
    for seed in run.seeds:
        seeded = run.with_seed(seed)
        trainer = experiment.train_one_seed(run, seed)
        seed_dir = out / f"seed{seed}"
        if run.train.checkpoint_every > 0:
            log: list[dict] = []
            while trainer.step_index < run.train.n_steps:
                log += trainer.run(n_steps=run.train.checkpoint_every)
                ckpt_mod.save(seed_dir / f"checkpoint_step{trainer.step_index}.gfl",
                              trainer, seeded)
        else:
            log = trainer.run()
        experiment.write_jsonl(seed_dir / "train_log.jsonl", log)
        ckpt_mod.save(seed_dir / "checkpoint.gfl", trainer, seeded)
        if log:
            plots.learning_curves_png(log, seed_dir / "learning_curves.png")
        print(f"seed {seed}: {trainer.step_index} steps -> {seed_dir / 'checkpoint.gfl'}")
    return EXIT_OK


def _load_payload_file(path: str, k: int) -> np.ndarray:
    mat = np.loadtxt(path, ndmin=2)
    if mat.shape[1] != k:
        raise ConfigError(f"conditioning file rows must have {k} values")
    return mat


def cmd_eval(args: argparse.Namespace) -> int:
    out = _output_dir(Path(args.out))
    print(f"output: {out}")
    report = experiment.MetricReport()
    all_rows = []
    for path in args.checkpoints:
        ck = ckpt_mod.load(path)
        run = ck.run
        if args.reference:
            run.eval_reference = args.reference
        model = GFNModel(run.grid, ck.policy, ck.logz)
        goal_source = run.make_goal_source()
        if isinstance(goal_source, TabGS) and ck.header["tabgs"] is not None:
            goal_source.load_state_dict(ck.header["tabgs"])
        payloads = None
        if args.goals:
            payloads = _load_payload_file(args.goals, run.grid.objectives)
            payloads = payloads / np.linalg.norm(payloads, axis=1, keepdims=True)
        if args.preferences:
            payloads = _load_payload_file(args.preferences, run.grid.objectives)
        seed = run.train.seed
        result = experiment.evaluate(run, model, goal_source, seed,
                                     n=args.n_samples, payloads=payloads)
        experiment.write_jsonl(out / f"samples_seed{seed}.jsonl",
                               experiment.sample_log_records(seed, result))
        rows = {"seed": seed, "checkpoint": str(path), **result.metrics}
        all_rows.append(rows)
        for name in experiment.METRIC_NAMES:
            v = result.metrics.get(name)
            if v is not None:
                report.add(name, v)
        if len(result.samples) > 0 and run.grid.objectives >= 2:
            plots.emit_scatter_svg(result.samples.rewards, result.samples.payloads,
                                   "angle", out / f"scatter_seed{seed}.svg")
    summary = {name: {"mean": report.mean(name), "sem": report.sem(name)}
               for name in report.per_seed}
    experiment.write_jsonl(out / "report.jsonl", all_rows + [{"aggregate": summary}])
    lines = ["metric                mean +/- sem"]
    for name, agg in summary.items():
        sem = "" if agg["sem"] is None else f" +/- {agg['sem']:.4f}"
        lines.append(f"{name:<20} {agg['mean']:.4f}{sem}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    run = config_mod.load(args.config, args.set or [])
    out = _output_dir(Path(args.out) if args.out else run.output_dir / "oracle")
    print(f"output: {out}")
    info = experiment.emit_oracle(run, out)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


COMPARE_PRESETS = {
    "table1": dict(algorithms=["pref", "goal"], landscapes=list(LANDSCAPE_NAMES)),
    "table2-k3": dict(algorithms=["pref", "goal-tabgs"], landscapes=["unrestrained"],
                      base={"grid.objectives": "3"}),
    "replay-ablation": dict(algorithms=["goal"], landscapes=["concave"],
                            extra_axis={"train.buffer_capacity": None}),
    "mg-sweep": dict(algorithms=["goal"], landscapes=["unrestrained"],
                     extra_axis={"train.limit_reward_coef":
                                 ["1.0", "0.5", "0.2", "0.05"]}),
}


def cmd_compare(args: argparse.Namespace) -> int:
    run = config_mod.load(args.config, args.set or [])
    raw = config_mod.parse_config_text(run.text)
    out = _output_dir(Path(args.out) if args.out else run.output_dir / "compare")
    print(f"output: {out}")

    algorithms = args.algorithms.split(",") if args.algorithms else ["pref", "goal"]
    landscapes = args.landscapes.split(",") if args.landscapes else list(LANDSCAPE_NAMES)
    extra_axis = None
    if args.preset:
        preset = COMPARE_PRESETS.get(args.preset)
        if preset is None:
            raise ConfigError(
                f"unknown compare preset {args.preset!r}; known: {sorted(COMPARE_PRESETS)}")
        algorithms = preset["algorithms"]
        landscapes = preset["landscapes"]
        raw.update(preset.get("base", {}))
        extra_axis = preset.get("extra_axis")
        if extra_axis and args.preset == "replay-ablation":
            batch = raw.get("train.batch_size", "64")
            extra_axis = {"train.buffer_capacity":
                          [raw.get("train.buffer_capacity", "100000"), batch]}
    outcome = experiment.compare(raw, algorithms, landscapes, run.seeds, out,
                                 workers=args.workers, reuse=args.reuse,
                                 extra_axis=extra_axis)
    print(outcome["table"])
    n_failed = len(outcome["errors"])
    if n_failed:
        print(f"{n_failed} cell(s) failed:", file=sys.stderr)
        for key, err in outcome["errors"].items():
            print(f"  {key}: {err}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from . import service
    print(f"checkpoint: {args.checkpoint}")
    service.serve_forever(args.checkpoint, args.host, args.port, cors=args.cors)
    return EXIT_OK


def cmd_scatter(args: argparse.Namespace) -> int:
    records = experiment.read_jsonl(Path(args.samples))
    if not records:
        raise ConfigError(f"sample log {args.samples} is empty")
    rewards = np.array([r["reward"] for r in records])
    payloads = np.array([r["payload"] for r in records])
    out = _output_dir(Path(args.out))
    print(f"output: {out}")
    plots.emit_scatter_svg(rewards, payloads, args.coloring, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gflowlab",
        description="Conditional GFlowNets on enumerable hypergrids")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model per seed, write checkpoints")
    p.add_argument("config", nargs="?", help="config file (key=value lines)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key")
    p.add_argument("--resume", help="continue training from a checkpoint")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints, aggregate mean +/- sem")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--n-samples", type=int, default=5000)
    p.add_argument("--out", default="eval_out")
    p.add_argument("--reference", choices=["faces", "front"])
    p.add_argument("--goals", help="file of goal directions, one per line")
    p.add_argument("--preferences", help="file of preference vectors, one per line")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("oracle", help="emit the true front and exact distribution")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("compare", help="algorithms x landscapes x seeds grid")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--algorithms")
    p.add_argument("--landscapes")
    p.add_argument("--preset", help="table1 | table2-k3 | replay-ablation | mg-sweep")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--reuse", action="store_true",
                   help="skip cells whose summaries already match the config")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("serve", help="HTTP inference service over a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--cors", action="store_true")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("scatter", help="render a sample log to a standalone SVG")
    p.add_argument("samples")
    p.add_argument("--coloring", choices=["angle", "density"], default="angle")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_scatter)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train" and not args.resume and not args.config:
            raise ConfigError("train needs a config file (or --resume)")
        return args.fn(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as err:
        print(f"training error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as err:  # noqa: BLE001
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

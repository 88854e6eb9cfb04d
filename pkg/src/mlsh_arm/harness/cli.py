"""``mlsh-arm`` command line.

Exit codes: 0 success, 2 configuration error, 3 runtime error. Every error
is reported on stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .. import analysis
from ..mlsh import evaluate, load_checkpoint, mlsh_train, run_episode, save_checkpoint
from ..mlsh.checkpoint import CheckpointError
from ..mlsh.evaluate import subpolicy_sequence_stats
from ..mlsh.train import TrainingAborted
from . import metrics
from .config import ConfigError, ExperimentConfig, load_experiment, validate_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
OUT_DIR_ENV = "MLSH_OUT_DIR"
CHECKPOINT_NAME = "checkpoint.mlsh"


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, line: int | None = None):
        super().__init__(message)
        self.code, self.kind, self.line = code, kind, line


def _report(err: CliError) -> int:
    payload = {"status": "error", "code": err.code, "kind": err.kind, "message": str(err)}
    if err.line is not None:
        payload["line"] = err.line
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return err.code


def _out_dir(flag: str | None, config: ExperimentConfig | None = None,
             fallback: Path | None = None) -> Path:
    if flag:
        return Path(flag)
    if os.environ.get(OUT_DIR_ENV):
        return Path(os.environ[OUT_DIR_ENV])
    if config is not None:
        return Path(config.out_dir)
    return fallback or Path(".")


def _load_ckpt(path: str):
    try:
        experiment, policies, masters = load_checkpoint(path)
        return ExperimentConfig.from_dict(experiment), policies, masters
    except FileNotFoundError:
        raise CliError(EXIT_RUNTIME, "checkpoint", f"{path}: no such checkpoint") from None
    except (CheckpointError, KeyError, ValueError) as exc:
        raise CliError(EXIT_RUNTIME, "checkpoint", f"{path}: unreadable checkpoint ({exc})") from None


def _select_tasks(tasks, selector: str):
    if selector == "all":
        return tasks
    try:
        wanted = int(selector)
    except ValueError:
        raise CliError(EXIT_CONFIG, "argument", f"task must be an id or 'all', got '{selector}'")
    for task in tasks:
        if task.task_id == wanted:
            return [task]
    raise CliError(EXIT_CONFIG, "argument", f"no task with id {wanted}")


def _with_master(policies, masters, task):
    pol = policies.copy()
    if task.task_id in masters:
        pol.theta = masters[task.task_id]
    return pol


def cmd_train(args) -> int:
    config = load_experiment(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = _out_dir(args.out, config)
    out.mkdir(parents=True, exist_ok=True)
    timings = []
    clock = [time.perf_counter()]

    def on_iteration(rec):
        now = time.perf_counter()
        timings.append({"round": rec.round, "phase": rec.phase, "iteration": rec.iteration,
                        "wall_ms": round((now - clock[0]) * 1000.0, 3)})
        clock[0] = now

    try:
        result = mlsh_train(config.mlsh, config.tasks(), workers=args.workers,
                            on_iteration=on_iteration)
    except TrainingAborted as exc:
        if exc.log.records:
            metrics.write_csv(out / "metrics.csv", metrics.metrics_rows(exc.log, config.mlsh.num_subpolicies),
                              metrics.metrics_columns(config.mlsh.num_subpolicies))
        raise CliError(EXIT_RUNTIME, "training", str(exc)) from None
    k = config.mlsh.num_subpolicies
    save_checkpoint(out / CHECKPOINT_NAME, config.to_dict(), result.policies, result.masters)
    if result.log.records:
        metrics.write_csv(out / "metrics.csv", metrics.metrics_rows(result.log, k),
                          metrics.metrics_columns(k))
        metrics.write_csv(out / "timing.csv", timings)
    (out / "trainlog.json").write_text(json.dumps({
        "records": result.log.to_dicts(),
        "round_distances_mm": result.log.round_distances_mm,
        "round_tasks": result.log.round_tasks,
        "stopped_early": result.log.stopped_early,
    }, sort_keys=True, indent=1) + "\n")
    print(f"trained {len(result.log.round_tasks)} rounds; outputs in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config, policies, masters = _load_ckpt(args.ckpt)
    tasks = _select_tasks(config.tasks(), args.task)
    out = _out_dir(args.out, fallback=Path(args.ckpt).parent)
    out.mkdir(parents=True, exist_ok=True)
    reports = [evaluate(_with_master(policies, masters, task), task, config.mlsh,
                        args.episodes, args.deterministic, args.seed) for task in tasks]
    rows = analysis.aggregate_eval(reports)
    metrics.write_csv(out / "eval_table.csv", rows)
    table = analysis.render_table(rows)
    (out / "eval_table.md").write_text(table)
    seq_rows = []
    for rep in reports:
        for e, seq in enumerate(rep.sequences):
            seq_rows.append({"task_id": rep.task_id, "episode": e,
                             "mode": rows[0]["mode"],
                             "mean_mm": float(rep.episode_mean_mm[e]),
                             "std_mm": float(rep.episode_std_mm[e]),
                             "sequence": " ".join(map(str, seq))})
    metrics.write_csv(out / "sequences.csv", seq_rows)
    stats = subpolicy_sequence_stats(reports)
    metrics.write_csv(out / "sequence_agreement.csv", [
        {"task_id": s.task_id, "episodes": s.episodes, "agreement": s.agreement,
         "modal_sequence": " ".join(map(str, s.modal_sequence))} for s in stats.values()])
    sys.stdout.write(table)
    for s in stats.values():
        print(f"task {s.task_id}: sequence agreement {s.agreement:.2f} over {s.episodes} episodes")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    config, policies, masters = _load_ckpt(args.ckpt)
    (task,) = _select_tasks(config.tasks(), args.task)
    seed = config.seed if args.seed is None else args.seed
    ep = run_episode(_with_master(policies, masters, task), task, config.mlsh,
                     not args.stochastic, seed, args.episode)
    rows = [{"step": i + 1, "x": float(p[0]), "y": float(p[1]), "z": float(p[2]), "k": int(k)}
            for i, (p, k) in enumerate(zip(ep.ee_points, ep.ks))]
    text = metrics.rows_to_csv(rows, ["x", "y", "z", "step", "k"])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_experiment(args.config)
    try:
        checks = validate_experiment(config)
    except ValueError as exc:
        raise ConfigError(str(exc), None, args.config) from None
    for line in checks:
        print(f"ok: {line}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        log = metrics.read_metrics_csv(args.metrics)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(EXIT_RUNTIME, "metrics", f"{args.metrics}: {exc}") from None
    out = _out_dir(args.out, fallback=Path(args.metrics).parent)
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_csv(out / "usage.csv", analysis.usage_over_training(log))
    metrics.write_csv(out / "learning_curve.csv", analysis.learning_curve(log, args.window))
    print(f"wrote usage.csv and learning_curve.csv to {out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "usage", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlsh-arm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train on the experiment's task distribution")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help=f"output directory (else ${OUT_DIR_ENV}, else the config's)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="distance table and sub-policy sequences")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--task", default="all")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trajectory", help="end-effector path of one episode as CSV")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--episode", type=int, default=0)
    p.add_argument("--stochastic", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("validate", help="check an experiment file without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="usage fractions and learning curve from metrics.csv")
    p.add_argument("--metrics", required=True)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(message)s", stream=sys.stderr)
        if getattr(args, "workers", 1) < 1:
            raise CliError(EXIT_CONFIG, "argument", "--workers must be >= 1")
        if getattr(args, "episodes", 1) < 1:
            raise CliError(EXIT_CONFIG, "argument", "--episodes must be >= 1")
        return args.func(args)
    except CliError as err:
        return _report(err)
    except ConfigError as exc:
        return _report(CliError(EXIT_CONFIG, "config", str(exc), exc.line))
    except Exception as exc:  # noqa: BLE001 - every failure must map to an exit code
        return _report(CliError(EXIT_RUNTIME, "runtime", f"{type(exc).__name__}: {exc}"))


if __name__ == "__main__":
    sys.exit(main())

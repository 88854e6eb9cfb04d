"""Post-hoc summaries of training logs and evaluation reports.

Everything here is a pure function of its inputs. Distances are in
millimetres; spreads are population standard deviations over the pooled
last-10 end-effector points, the same definition :func:`evaluate` uses.
"""

from __future__ import annotations

import numpy as np

from .mlsh.evaluate import EvalReport, population_std
from .mlsh.train import IterationRecord, TrainLog


def format_spread(mean: float, std: float) -> str:
    if std == 0:
        spread = "0"
    elif std < 0.01:
        spread = f"{std:.1e}"
    else:
        spread = f"{std:.2f}"
    return f"{mean:.2f} ± {spread}"


def aggregate_eval(reports: list[EvalReport]) -> list[dict]:
    """One row per (configuration, target, mode), pooling all matching reports."""
    if not reports:
        raise ValueError("no evaluation reports to aggregate")
    groups: dict[tuple, list[EvalReport]] = {}
    for rep in reports:
        groups.setdefault((rep.task_id, rep.deterministic), []).append(rep)
    rows = []
    for (task_id, deterministic), reps in sorted(groups.items()):
        pooled = np.concatenate([r.last_points_mm.ravel() for r in reps])
        mean, std = float(pooled.mean()), float(population_std(pooled))
        rows.append({
            "configuration": reps[0].arm,
            "target": reps[0].label,
            "task_id": task_id,
            "mode": "deterministic" if deterministic else "stochastic",
            "episodes": sum(r.episodes for r in reps),
            "mean_mm": mean,
            "std_mm": std,
            "cell": format_spread(mean, std),
        })
    return rows


def render_table(rows: list[dict]) -> str:
    """Markdown table: configuration x target rows, distance as mean ± STD."""
    lines = ["| Configuration | Target | Mode | Episodes | Euclidean distance (mm) |",
             "|---|---|---|---|---|"]
    for row in rows:
        lines.append(f"| {row['configuration']} | {row['target']} | {row['mode']} | "
                     f"{row['episodes']} | {row['cell']} |")
    return "\n".join(lines) + "\n"


def _records(log: TrainLog | list[IterationRecord]) -> list[IterationRecord]:
    records = log.records if isinstance(log, TrainLog) else list(log)
    if not records:
        raise ValueError("training log is empty")
    return records


def usage_over_training(log: TrainLog | list[IterationRecord]) -> list[dict]:
    """Per-iteration fraction of master decisions given to each sub-policy."""
    rows = []
    for rec in _records(log):
        counts = np.asarray(rec.usage, dtype=np.float64)
        fractions = counts / counts.sum()
        row = {"round": rec.round, "phase": rec.phase, "iteration": rec.iteration,
               "task_id": rec.task_id}
        row.update({f"frac_{k}": float(f) for k, f in enumerate(fractions)})
        rows.append(row)
    return rows


def learning_curve(log: TrainLog | list[IterationRecord], window: int = 10) -> list[dict]:
    """Trailing moving average of mean episode reward over the global iteration index."""
    if window < 1:
        raise ValueError("smoothing window must be >= 1")
    records = _records(log)
    rewards = np.array([r.mean_reward for r in records])
    rows = []
    for i, rec in enumerate(records):
        lo = max(0, i - window + 1)
        rows.append({"step": i, "round": rec.round, "phase": rec.phase,
                     "iteration": rec.iteration, "mean_reward": float(rewards[i]),
                     "smoothed_reward": float(rewards[lo:i + 1].mean())})
    return rows

"""CSV formats written and read by the command-line tools.

All files have a header row, a fixed column order and ``repr`` floats, so
identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..mlsh.train import IterationRecord, TrainLog

METRIC_COLUMNS = ["round", "phase", "iteration", "task_id", "mean_reward",
                  "final_distance_mm", "master_entropy"]


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if not rows:
        raise ValueError("nothing to write")
    columns = columns or list(rows[0])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    Path(path).write_text(rows_to_csv(rows, columns))


def metrics_rows(log: TrainLog, num_subpolicies: int) -> list[dict]:
    rows = []
    for rec in log.records:
        row = {c: getattr(rec, c) for c in METRIC_COLUMNS}
        row.update({f"usage_{k}": rec.usage[k] for k in range(num_subpolicies)})
        rows.append(row)
    return rows


def metrics_columns(num_subpolicies: int) -> list[str]:
    return METRIC_COLUMNS + [f"usage_{k}" for k in range(num_subpolicies)]


def read_metrics_csv(path) -> TrainLog:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        usage_cols = [c for c in reader.fieldnames or [] if c.startswith("usage_")]
        records = [IterationRecord(
            round=int(row["round"]), phase=row["phase"], iteration=int(row["iteration"]),
            task_id=int(row["task_id"]), mean_reward=float(row["mean_reward"]),
            final_distance_mm=float(row["final_distance_mm"]),
            master_entropy=float(row["master_entropy"]),
            usage=tuple(int(row[c]) for c in usage_cols)) for row in reader]
    if not records:
        raise ValueError(f"{path}: no metric rows")
    return TrainLog(records)

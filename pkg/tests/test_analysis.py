import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlsh_arm.analysis import aggregate_eval, format_spread, learning_curve, render_table, usage_over_training
from mlsh_arm.mlsh import EvalReport
from mlsh_arm.mlsh.train import IterationRecord, TrainLog


def _report(task_id, points, deterministic=True, arm="3dof", label="O"):
    points = np.asarray(points, dtype=float)
    return EvalReport(task_id, arm, label, deterministic, points, [(0,)] * len(points))


def _record(i, usage=(3, 1), reward=-1.0):
    return IterationRecord(0, "joint", i, 0, reward, 10.0, 0.5, usage)


class TestAggregate:
    def test_constant_distance_cell(self):
        (row,) = aggregate_eval([_report(1, np.full((2, 10), 33.69))])
        assert row["cell"] == "33.69 ± 0"

    def test_three_row_fixture(self):
        # spreadsheet recomputation: pooled values 1..10, 11..20, 21..30 for task 0
        reports = [_report(0, [np.arange(1, 11) + 10 * i]) for i in range(3)]
        (row,) = aggregate_eval(reports)
        values = list(range(1, 31))
        mean = sum(values) / 30
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / 30)
        assert row["mean_mm"] == pytest.approx(15.5, abs=1e-12)
        assert row["std_mm"] == pytest.approx(std, abs=1e-12)
        assert row["episodes"] == 3
        assert row["cell"] == f"15.50 ± {std:.2f}"

    def test_groups_by_task_and_mode(self):
        rows = aggregate_eval([_report(1, np.ones((1, 10)), True), _report(0, np.ones((1, 10)), False),
                               _report(0, np.ones((1, 10)), True)])
        assert [(r["task_id"], r["mode"]) for r in rows] == \
            [(0, "stochastic"), (0, "deterministic"), (1, "deterministic")]

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_eval([])

    @pytest.mark.parametrize("std, cell", [(0.0, "33.69 ± 0"), (1.9e-7, "33.69 ± 1.9e-07"),
                                           (0.02, "33.69 ± 0.02")])
    def test_spread_format(self, std, cell):
        assert format_spread(33.69, std) == cell

    def test_table_layout(self):
        table = render_table(aggregate_eval([_report(1, np.full((1, 10), 60.07), label="H")]))
        lines = table.splitlines()
        assert lines[0].startswith("| Configuration | Target |")
        assert lines[2] == "| 3dof | H | deterministic | 1 | 60.07 ± 0 |"


class TestUsage:
    @settings(max_examples=30)
    @given(st.lists(st.lists(st.integers(0, 50), min_size=3, max_size=3).filter(lambda u: sum(u) > 0),
                    min_size=1, max_size=10))
    def test_rows_sum_to_one(self, usages):
        rows = usage_over_training(TrainLog([_record(i, tuple(u)) for i, u in enumerate(usages)]))
        for row in rows:
            assert abs(row["frac_0"] + row["frac_1"] + row["frac_2"] - 1.0) < 1e-12

    def test_empty_log(self):
        with pytest.raises(ValueError):
            usage_over_training(TrainLog())


class TestLearningCurve:
    def test_trailing_average(self):
        log = TrainLog([_record(i, reward=float(r)) for i, r in enumerate([1, 2, 3, 4, 5])])
        rows = learning_curve(log, window=2)
        assert [r["smoothed_reward"] for r in rows] == [1.0, 1.5, 2.5, 3.5, 4.5]

    def test_window_one_is_identity(self):
        log = TrainLog([_record(i, reward=-float(i) ** 2) for i in range(6)])
        assert [r["smoothed_reward"] for r in learning_curve(log, 1)] == [-float(i) ** 2 for i in range(6)]

    def test_bad_window(self):
        with pytest.raises(ValueError):
            learning_curve(TrainLog([_record(0)]), 0)

    def test_pure(self):
        log = TrainLog([_record(i, reward=float(i)) for i in range(4)])
        assert learning_curve(log, 3) == learning_curve(log, 3)

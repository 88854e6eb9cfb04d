"""Evaluation episodes and sub-policy sequence statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .. import env as reach
from ..env import Task
from . import seeding
from .config import MlshConfig
from .policies import PolicySet
from .rollout import act_hierarchical

LAST_POINTS = 10


@dataclass
class Episode:
    ee_points: np.ndarray       # (steps, 3), after each step
    ks: np.ndarray              # active sub-policy per step
    macro_sequence: tuple[int, ...]


def run_episode(policies: PolicySet, task: Task, config: MlshConfig, deterministic: bool,
                seed: int, episode: int) -> Episode:
    key = (seeding.EVAL, task.task_id, episode)
    reset_rng = seeding.stream(seed, *key, seeding.RESET_STREAM)
    master_rng = seeding.stream(seed, *key, seeding.MASTER_STREAM)
    action_rng = seeding.stream(seed, *key, seeding.ACTION_STREAM)
    state, obs = reach.reset(task, reset_rng)
    points, ks, sequence = [], [], []
    k = None
    for t in range(config.horizon):
        d = act_hierarchical(policies, obs, t, k, config.macro_duration, master_rng, action_rng,
                             deterministic)
        if d.new_macro:
            sequence.append(d.k)
        k = d.k
        state, obs, _, done = reach.step(state, d.action, task, config.horizon)
        points.append(state.ee_position)
        ks.append(k)
        if done:
            break
    return Episode(np.array(points), np.array(ks, dtype=np.int64), tuple(sequence))


def population_std(values, axis=None) -> np.ndarray:
    """Population STD, computed after shifting by one sample so constants give exactly 0."""
    values = np.asarray(values, dtype=np.float64)
    ref = values.reshape(-1)[0] if axis is None else np.take(values, [0], axis=axis)
    return (values - ref).std(axis=axis)


@dataclass
class EvalReport:
    """Distances (mm) of the last end-effector points of each episode.

    STDs are population standard deviations. ``mean_mm``/``std_mm`` pool
    the last points of all episodes.
    """

    task_id: int
    arm: str
    label: str
    deterministic: bool
    last_points_mm: np.ndarray  # (episodes, LAST_POINTS)
    sequences: list[tuple[int, ...]]

    @property
    def episodes(self) -> int:
        return len(self.sequences)

    @property
    def episode_mean_mm(self) -> np.ndarray:
        return self.last_points_mm.mean(axis=1)

    @property
    def episode_std_mm(self) -> np.ndarray:
        return population_std(self.last_points_mm, axis=1)

    @property
    def mean_mm(self) -> float:
        return float(self.last_points_mm.mean())

    @property
    def std_mm(self) -> float:
        return float(population_std(self.last_points_mm))


def evaluate(policies: PolicySet, task: Task, config: MlshConfig, episodes: int = 10,
             deterministic: bool = True, seed: int | None = None) -> EvalReport:
    """Run evaluation episodes; deterministic mode uses the master's argmax and action means."""
    seed = config.seed if seed is None else seed
    rows, sequences = [], []
    for e in range(episodes):
        ep = run_episode(policies, task, config, deterministic, seed, e)
        tail = ep.ee_points[-LAST_POINTS:]
        rows.append([reach.euclidean_distance(p, task.target) for p in tail])
        sequences.append(ep.macro_sequence)
    return EvalReport(task.task_id, task.arm.name, task.label, deterministic,
                      np.array(rows, dtype=np.float64).reshape(episodes, -1), sequences)


@dataclass
class SequenceStats:
    task_id: int
    modal_sequence: tuple[int, ...]
    agreement: float
    episodes: int


def subpolicy_sequence_stats(reports: list[EvalReport]) -> dict[int, SequenceStats]:
    """Per task: the most common macro sequence and the fraction of episodes matching it."""
    by_task: dict[int, list[tuple[int, ...]]] = {}
    for report in reports:
        by_task.setdefault(report.task_id, []).extend(report.sequences)
    stats = {}
    for task_id, seqs in by_task.items():
        if not seqs:
            raise ValueError(f"task {task_id} has no evaluation episodes")
        modal, count = Counter(seqs).most_common(1)[0]
        stats[task_id] = SequenceStats(task_id, modal, count / len(seqs), len(seqs))
    return stats

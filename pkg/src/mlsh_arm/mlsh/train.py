"""Warm-up / joint-update training over a task distribution.

One meta-round samples a task, gives it a freshly initialised master, trains
only the master for ``warmup_iters`` iterations, then trains master and
sub-policies together for ``joint_iters`` iterations. Sub-policies persist
across rounds; masters do not.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ..env import Task, sample_task
from ..numerics import AdamState, ParamVector
from . import seeding
from .config import MlshConfig
from .policies import PolicySet, init_master, init_policy_set, master_head, sub_head
from .ppo import PpoBatch, PpoSettings, ppo_update
from .rollout import RolloutBuffer, collect_rollout

log = logging.getLogger(__name__)


@dataclass
class IterationRecord:
    round: int
    phase: str
    iteration: int
    task_id: int
    mean_reward: float
    final_distance_mm: float
    master_entropy: float
    usage: tuple[int, ...]
    master_updates: int = 0
    sub_updates: int = 0


@dataclass
class TrainLog:
    records: list[IterationRecord] = field(default_factory=list)
    round_distances_mm: list[float] = field(default_factory=list)
    round_tasks: list[int] = field(default_factory=list)
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def phase(self, name: str) -> list[IterationRecord]:
        return [r for r in self.records if r.phase == name]

    def to_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.records]


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, log: TrainLog):
        super().__init__(message)
        self.log = log


@dataclass
class TrainerState:
    """Mutable training state owned by the single coordinating process."""

    config: MlshConfig
    policies: PolicySet
    master_opt: AdamState
    sub_opts: list[AdamState]
    executor: Executor | None = None
    workers: int = 1
    on_iteration: Callable[[IterationRecord], None] | None = None
    log: TrainLog | None = None

    @classmethod
    def fresh(cls, config: MlshConfig, **kwargs) -> "TrainerState":
        policies = init_policy_set(config)
        return cls(config, policies, AdamState.zeros(len(policies.theta)),
                   [AdamState.zeros(len(p)) for p in policies.phi], **kwargs)

    def reset_master(self, theta: ParamVector) -> None:
        self.policies.theta = theta
        self.master_opt = AdamState.zeros(len(theta))


def _settings(config: MlshConfig, lr: float) -> PpoSettings:
    return PpoSettings(config.clip_eps, config.epochs, config.minibatch_size, lr,
                       config.vf_coef, config.ent_coef, config.max_grad_norm)


def update_master(state: TrainerState, buf: RolloutBuffer, rng: np.random.Generator) -> dict:
    cfg = state.config
    macros = buf.macros()
    adv, ret = buf.macro_advantages(cfg.master_gamma, cfg.lam)
    batch = PpoBatch(macros["obs"], macros["ks"], macros["logprobs"], adv, ret)
    pol = state.policies
    pol.theta, state.master_opt, stats = ppo_update(
        pol.theta, batch, master_head(pol.arch), _settings(cfg, cfg.lr_master),
        state.master_opt, rng)
    return stats


def update_subpolicies(state: TrainerState, buf: RolloutBuffer, seed: int,
                       key: tuple[int, ...]) -> int:
    """Update each sub-policy on the steps it produced; returns how many were updated."""
    cfg = state.config
    steps = buf.steps()
    adv, ret = buf.step_advantages(cfg.gamma, cfg.lam)
    batch = PpoBatch(steps["obs"], steps["actions"], steps["sub_logprobs"], adv, ret)
    pol = state.policies
    head = sub_head(pol.arch)
    updated = 0
    for k in range(pol.num_subpolicies):
        idx = np.flatnonzero(steps["ks"] == k)
        if idx.size == 0:
            continue
        rng = seeding.stream(seed, seeding.UPDATE, *key, 1 + k)
        pol.phi[k], state.sub_opts[k], _ = ppo_update(
            pol.phi[k], batch.take(idx), head, _settings(cfg, cfg.lr_sub), state.sub_opts[k], rng)
        updated += 1
    return updated


def run_iteration(state: TrainerState, task: Task, round_index: int, phase: int,
                  iteration: int, update_subs: bool) -> IterationRecord:
    cfg = state.config
    key = (round_index, phase, iteration, task.task_id)
    buf = collect_rollout(state.policies, task, cfg.steps_per_iter, cfg.horizon,
                          cfg.macro_duration, cfg.seed, key, state.executor, state.workers)
    update_master(state, buf, seeding.stream(cfg.seed, seeding.UPDATE, *key, 0))
    sub_updates = update_subpolicies(state, buf, cfg.seed, key) if update_subs else 0
    record = IterationRecord(
        round=round_index, phase=seeding.PHASE_NAMES[phase], iteration=iteration,
        task_id=task.task_id, mean_reward=float(np.mean(buf.episode_returns())),
        final_distance_mm=float(np.mean(buf.final_distances_mm())),
        master_entropy=float(np.mean(buf.macros()["entropies"])),
        usage=tuple(int(c) for c in buf.usage(cfg.num_subpolicies)),
        master_updates=1, sub_updates=sub_updates)
    if state.log is not None:
        state.log.records.append(record)
    if state.on_iteration is not None:
        state.on_iteration(record)
    return record


def warmup_phase(state: TrainerState, task: Task, round_index: int = 0,
                 phase: int = seeding.WARMUP, iterations: int | None = None) -> list[IterationRecord]:
    """Master-only updates against frozen sub-policies."""
    n = state.config.warmup_iters if iterations is None else iterations
    return [run_iteration(state, task, round_index, phase, i, update_subs=False)
            for i in range(n)]


def joint_phase(state: TrainerState, task: Task, round_index: int = 0) -> list[IterationRecord]:
    return [run_iteration(state, task, round_index, seeding.JOINT, i, update_subs=True)
            for i in range(state.config.joint_iters)]


@dataclass
class TrainResult:
    policies: PolicySet
    log: TrainLog
    masters: dict[int, ParamVector]


def should_stop(round_distances: list[float], window: int, tol_mm: float) -> bool:
    """True once the mean over the last ``window`` rounds improved by less than ``tol_mm``."""
    if window < 1 or len(round_distances) < 2 * window:
        return False
    recent = np.mean(round_distances[-window:])
    before = np.mean(round_distances[-2 * window:-window])
    return bool(before - recent < tol_mm)


def _adapt_masters(state: TrainerState, tasks: list[Task], masters: dict[int, ParamVector],
                   rounds_run: int) -> None:
    cfg = state.config
    for task in tasks:
        theta = masters.get(task.task_id)
        if theta is None:
            rng = seeding.stream(cfg.seed, seeding.THETA_INIT, rounds_run, task.task_id)
            theta = init_master(state.policies.arch, rng)
        state.reset_master(theta.copy())
        warmup_phase(state, task, rounds_run, seeding.ADAPT, cfg.adaptation_iters)
        masters[task.task_id] = state.policies.theta.copy()


def mlsh_train(config: MlshConfig, tasks: list[Task], workers: int = 1,
               progress: Callable[[int, list[IterationRecord]], None] | None = None,
               on_iteration: Callable[[IterationRecord], None] | None = None) -> TrainResult:
    """Train shared sub-policies over ``tasks``.

    After the meta-rounds, every task's master is refreshed for
    ``config.adaptation_iters`` master-only iterations against the final
    sub-policies (starting from its last trained master, or a fresh one for
    tasks never sampled), so that each task has a master matched to the
    returned sub-policies.
    """
    if not tasks:
        raise ValueError("task distribution is empty")
    train_log = TrainLog()
    masters: dict[int, ParamVector] = {}
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    state = TrainerState.fresh(config, executor=executor, workers=workers,
                               on_iteration=on_iteration, log=train_log)
    try:
        rounds_run = 0
        for r in range(config.meta_rounds):
            task = sample_task(tasks, seeding.stream(config.seed, seeding.TASK_PICK, r))
            state.reset_master(init_master(state.policies.arch,
                                           seeding.stream(config.seed, seeding.THETA_INIT, r)))
            records = warmup_phase(state, task, r) + joint_phase(state, task, r)
            masters[task.task_id] = state.policies.theta.copy()
            rounds_run = r + 1
            if records:
                train_log.round_distances_mm.append(records[-1].final_distance_mm)
                train_log.round_tasks.append(task.task_id)
                log.info("round %d task %d final distance %.2f mm", r, task.task_id,
                         records[-1].final_distance_mm)
            if progress is not None:
                progress(r, records)
            if config.early_stop and should_stop(train_log.round_distances_mm,
                                                 config.early_stop_window,
                                                 config.early_stop_tol_mm):
                train_log.stopped_early = True
                break
        if rounds_run and config.adaptation_iters:
            last_theta = state.policies.theta
            _adapt_masters(state, tasks, masters, rounds_run)
            state.policies.theta = last_theta
    except Exception as exc:
        raise TrainingAborted(f"training aborted: {exc}", train_log) from exc
    finally:
        if executor is not None:
            executor.shutdown()
    return TrainResult(state.policies, train_log, masters)

"""Two-timescale experience collection.

An iteration's D steps are cut into episode segments of at most T steps,
each starting from a fresh reset and drawing from its own named random
streams. Segments can therefore be spread over worker processes and merged
back in segment order without changing a single bit of the result.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np

from .. import env as reach
from ..env import Task
from ..numerics import (
    categorical_entropy,
    categorical_logprob,
    categorical_sample,
    gaussian_logprob,
    gaussian_sample,
)
from . import seeding
from .gae import compute_gae
from .policies import PolicySet, action_mask, master_forward, sub_forward


@dataclass
class Decision:
    action: np.ndarray
    k: int
    new_macro: bool
    sub_logprob: float
    sub_value: float
    master_logprob: float = 0.0
    master_value: float = 0.0
    master_entropy: float = 0.0


def act_hierarchical(policies: PolicySet, obs: np.ndarray, t: int, carried_k: int | None,
                     macro_duration: int, master_rng: np.random.Generator | None = None,
                     action_rng: np.random.Generator | None = None,
                     deterministic: bool = False) -> Decision:
    """Pick (or keep) a sub-policy and sample its action for step ``t``.

    A new master decision is taken whenever ``t`` is a multiple of the macro
    duration; in between, ``carried_k`` stays in force.
    """
    if t < 0:
        raise ValueError(f"step index must be >= 0, got {t}")
    arch = policies.arch
    new_macro = t % macro_duration == 0
    master_logprob = master_value = master_entropy = 0.0
    if new_macro:
        logits, value = master_forward(arch, policies.theta, obs)
        k = int(np.argmax(logits)) if deterministic else categorical_sample(logits, master_rng)
        master_logprob = float(categorical_logprob(logits, k))
        master_value = float(value)
        master_entropy = float(categorical_entropy(logits))
    else:
        if carried_k is None:
            raise ValueError(f"no carried sub-policy index at step {t}, which is not a "
                             f"macro boundary")
        k = carried_k
    mean, log_std, sub_value = sub_forward(arch, policies.phi[k], obs)
    action = mean.copy() if deterministic else gaussian_sample(mean, log_std, action_rng)
    sub_logprob = float(gaussian_logprob(mean, log_std, action, action_mask(obs)))
    return Decision(action, k, new_macro, sub_logprob, float(sub_value),
                    master_logprob, master_value, master_entropy)


@dataclass
class SegmentData:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    sub_logprobs: np.ndarray
    sub_values: np.ndarray
    dones: np.ndarray
    ks: np.ndarray
    sub_last_value: float
    macro_obs: np.ndarray
    macro_ks: np.ndarray
    macro_rewards: np.ndarray
    macro_logprobs: np.ndarray
    macro_values: np.ndarray
    macro_dones: np.ndarray
    macro_entropies: np.ndarray
    master_last_value: float
    episode_return: float
    final_distance_mm: float
    completed: bool
    final_ee: np.ndarray = field(repr=False)


def run_segment(policies: PolicySet, task: Task, length: int, horizon: int,
                macro_duration: int, seed: int, key: tuple[int, ...]) -> SegmentData:
    reset_rng = seeding.stream(seed, *key, seeding.RESET_STREAM)
    master_rng = seeding.stream(seed, *key, seeding.MASTER_STREAM)
    action_rng = seeding.stream(seed, *key, seeding.ACTION_STREAM)
    state, obs = reach.reset(task, reset_rng)
    steps = {name: [] for name in ("obs", "actions", "rewards", "sub_logprobs", "sub_values",
                                   "dones", "ks")}
    macro = {name: [] for name in ("obs", "ks", "rewards", "logprobs", "values", "dones",
                                   "entropies")}
    k = None
    done = False
    for t in range(length):
        d = act_hierarchical(policies, obs, t, k, macro_duration, master_rng, action_rng)
        if d.new_macro:
            macro["obs"].append(obs)
            macro["ks"].append(d.k)
            macro["rewards"].append(0.0)
            macro["logprobs"].append(d.master_logprob)
            macro["values"].append(d.master_value)
            macro["dones"].append(False)
            macro["entropies"].append(d.master_entropy)
        k = d.k
        state, next_obs, reward, done = reach.step(state, d.action, task, horizon)
        steps["obs"].append(obs)
        steps["actions"].append(d.action)
        steps["rewards"].append(reward)
        steps["sub_logprobs"].append(d.sub_logprob)
        steps["sub_values"].append(d.sub_value)
        steps["dones"].append(done)
        steps["ks"].append(d.k)
        macro["rewards"][-1] += reward
        obs = next_obs
        if done:
            macro["dones"][-1] = True
            break
    sub_last = master_last = 0.0
    if not done:
        sub_last = float(sub_forward(policies.arch, policies.phi[k], obs)[2])
        master_last = float(master_forward(policies.arch, policies.theta, obs)[1])
    rewards = np.array(steps["rewards"])
    return SegmentData(
        obs=np.array(steps["obs"]), actions=np.array(steps["actions"]), rewards=rewards,
        sub_logprobs=np.array(steps["sub_logprobs"]), sub_values=np.array(steps["sub_values"]),
        dones=np.array(steps["dones"], dtype=bool), ks=np.array(steps["ks"], dtype=np.int64),
        sub_last_value=sub_last,
        macro_obs=np.array(macro["obs"]), macro_ks=np.array(macro["ks"], dtype=np.int64),
        macro_rewards=np.array(macro["rewards"]), macro_logprobs=np.array(macro["logprobs"]),
        macro_values=np.array(macro["values"]), macro_dones=np.array(macro["dones"], dtype=bool),
        macro_entropies=np.array(macro["entropies"]), master_last_value=master_last,
        episode_return=float(rewards.sum()),
        final_distance_mm=reach.euclidean_distance(state.ee_position, task.target),
        completed=done, final_ee=state.ee_position,
    )


def segment_lengths(total_steps: int, horizon: int) -> list[int]:
    full, rest = divmod(total_steps, horizon)
    return [horizon] * full + ([rest] if rest else [])


def _run_chunk(policies, task, jobs, horizon, macro_duration, seed):
    return [run_segment(policies, task, length, horizon, macro_duration, seed, key)
            for length, key in jobs]


@dataclass
class RolloutBuffer:
    segments: list[SegmentData]
    macro_duration: int

    def _cat(self, name: str) -> np.ndarray:
        return np.concatenate([getattr(s, name) for s in self.segments])

    @property
    def num_steps(self) -> int:
        return sum(len(s.rewards) for s in self.segments)

    @property
    def num_macros(self) -> int:
        return sum(len(s.macro_ks) for s in self.segments)

    def steps(self) -> dict[str, np.ndarray]:
        return {name: self._cat(name) for name in ("obs", "actions", "rewards", "sub_logprobs",
                                                   "sub_values", "dones", "ks")}

    def macros(self) -> dict[str, np.ndarray]:
        return {name: self._cat("macro_" + name) for name in ("obs", "ks", "rewards", "logprobs",
                                                              "values", "dones", "entropies")}

    def step_advantages(self, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
        parts = [compute_gae(s.rewards, s.sub_values, s.dones, gamma, lam, s.sub_last_value)
                 for s in self.segments]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def macro_advantages(self, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
        parts = [compute_gae(s.macro_rewards, s.macro_values, s.macro_dones, gamma, lam,
                             s.master_last_value) for s in self.segments]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def episode_returns(self) -> list[float]:
        """Reward sum of every segment, including a trailing cut-off one."""
        return [s.episode_return for s in self.segments]

    def final_distances_mm(self) -> list[float]:
        return [s.final_distance_mm for s in self.segments]

    def usage(self, num_subpolicies: int) -> np.ndarray:
        return np.bincount(self._cat("macro_ks"), minlength=num_subpolicies)


def collect_rollout(policies: PolicySet, task: Task, total_steps: int, horizon: int,
                    macro_duration: int, seed: int, key: tuple[int, ...] = (),
                    executor: Executor | None = None, workers: int = 1) -> RolloutBuffer:
    """Run exactly ``total_steps`` environment steps on ``task``.

    ``key`` identifies this collection among all others drawn from ``seed``;
    segment ``i`` uses streams keyed by ``(ROLLOUT, *key, i)``.
    """
    if total_steps < macro_duration:
        raise ValueError(f"need at least {macro_duration} steps per collection, got {total_steps}")
    jobs = [(length, (seeding.ROLLOUT, *key, i))
            for i, length in enumerate(segment_lengths(total_steps, horizon))]
    if executor is None or workers <= 1 or len(jobs) == 1:
        segments = _run_chunk(policies, task, jobs, horizon, macro_duration, seed)
    else:
        chunks = [c.tolist() for c in np.array_split(np.arange(len(jobs)), min(workers, len(jobs)))]
        futures = [executor.submit(_run_chunk, policies, task, [jobs[i] for i in c], horizon,
                                   macro_duration, seed) for c in chunks]
        segments = [seg for fut in futures for seg in fut.result()]
    return RolloutBuffer(segments, macro_duration)

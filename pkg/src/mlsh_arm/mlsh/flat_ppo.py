"""Single-level PPO on one task.

Serves two purposes: the baseline that calibrates how close a non-hierarchical
learner gets to each target, and the reference that a one-sub-policy,
one-step-macro hierarchy must reproduce exactly. It draws from the same
named random streams as the hierarchical trainer's round 0 joint phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import env as reach
from ..env import Task
from ..numerics import AdamState, ParamVector, gaussian_logprob, gaussian_sample
from . import seeding
from .config import MlshConfig
from .gae import compute_gae
from .policies import PolicyArch, action_mask, init_sub, sub_forward, sub_head
from .ppo import PpoBatch, PpoSettings, ppo_update
from .rollout import segment_lengths


@dataclass
class FlatResult:
    params: ParamVector
    mean_rewards: list[float]
    final_distances_mm: list[float]


def _episode(arch, params, task, length, horizon, seed, key):
    reset_rng = seeding.stream(seed, *key, seeding.RESET_STREAM)
    action_rng = seeding.stream(seed, *key, seeding.ACTION_STREAM)
    state, obs = reach.reset(task, reset_rng)
    rows = []
    done = False
    for _ in range(length):
        mean, log_std, value = sub_forward(arch, params, obs)
        action = gaussian_sample(mean, log_std, action_rng)
        logp = float(gaussian_logprob(mean, log_std, action, action_mask(obs)))
        state, next_obs, reward, done = reach.step(state, action, task, horizon)
        rows.append((obs, action, reward, logp, float(value), done))
        obs = next_obs
        if done:
            break
    last_value = 0.0 if done else float(sub_forward(arch, params, obs)[2])
    return rows, last_value, reach.euclidean_distance(state.ee_position, task.target)


def flat_ppo_train(config: MlshConfig, task: Task, iterations: int) -> FlatResult:
    arch = PolicyArch(1, config.hidden, log_std_min=config.log_std_min,
                      log_std_max=config.log_std_max)
    params = init_sub(arch, seeding.stream(config.seed, seeding.PHI_INIT, 0), config.init_log_std)
    opt = AdamState.zeros(len(params))
    settings = PpoSettings(config.clip_eps, config.epochs, config.minibatch_size, config.lr_sub,
                           config.vf_coef, config.ent_coef, config.max_grad_norm)
    head = sub_head(arch)
    rewards_curve, dist_curve = [], []
    for it in range(iterations):
        key = (0, seeding.JOINT, it, task.task_id)
        obs, acts, logps, advs, rets, ep_returns, dists = [], [], [], [], [], [], []
        for i, length in enumerate(segment_lengths(config.steps_per_iter, config.horizon)):
            rows, last_value, dist = _episode(arch, params, task, length, config.horizon,
                                              config.seed, (seeding.ROLLOUT, *key, i))
            o, a, r, lp, v, d = (np.array(col) for col in zip(*rows))
            adv, ret = compute_gae(r, v, d, config.gamma, config.lam, last_value)
            obs.append(o), acts.append(a), logps.append(lp), advs.append(adv), rets.append(ret)
            ep_returns.append(float(r.sum()))
            dists.append(dist)
        batch = PpoBatch(np.concatenate(obs), np.concatenate(acts), np.concatenate(logps),
                         np.concatenate(advs), np.concatenate(rets))
        rng = seeding.stream(config.seed, seeding.UPDATE, *key, 1)
        params, opt, _ = ppo_update(params, batch, head, settings, opt, rng)
        rewards_curve.append(float(np.mean(ep_returns)))
        dist_curve.append(float(np.mean(dists)))
    return FlatResult(params, rewards_curve, dist_curve)

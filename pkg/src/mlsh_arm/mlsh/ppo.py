"""Clipped-surrogate policy optimisation shared by both hierarchy levels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..numerics import AdamState, NonFiniteError, ParamVector, adam_step, grad_of_scalar
from ..numerics.autograd import clip, exp, minimum, square, value_of


class PpoUpdateError(RuntimeError):
    pass


@dataclass
class PpoBatch:
    obs: np.ndarray
    actions: np.ndarray
    old_logprobs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.old_logprobs)

    def take(self, idx) -> "PpoBatch":
        return PpoBatch(self.obs[idx], self.actions[idx], self.old_logprobs[idx],
                        self.advantages[idx], self.returns[idx])


@dataclass(frozen=True)
class PpoSettings:
    clip_eps: float = 0.2
    epochs: int = 4
    minibatch_size: int = 64
    lr: float = 3e-4
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    max_grad_norm: float | None = 0.5


def normalize_advantages(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    if len(adv) < 2:
        return adv.copy()
    return (adv - adv.mean()) / (adv.std() + eps)


def ppo_loss(params: ParamVector, batch: PpoBatch, head: Callable, clip_eps: float,
             vf_coef: float, ent_coef: float):
    """Scalar loss (to minimise) and diagnostics for one minibatch."""
    logp, entropy, value = head(params, batch.obs, batch.actions)
    ratio = exp(logp - batch.old_logprobs)
    adv = batch.advantages
    surrogate = minimum(ratio * adv, clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv).mean()
    value_loss = square(value - batch.returns).mean()
    mean_entropy = entropy.mean()
    loss = -surrogate + vf_coef * value_loss - ent_coef * mean_entropy
    r = value_of(ratio)
    stats = {
        "surrogate": float(value_of(surrogate)),
        "value_loss": float(value_of(value_loss)),
        "entropy": float(value_of(mean_entropy)),
        "approx_kl": float(np.mean(batch.old_logprobs - value_of(logp))),
        "clip_frac": float(np.mean(np.abs(r - 1.0) > clip_eps)),
    }
    return loss, stats


def ppo_update(params: ParamVector, batch: PpoBatch, head: Callable, settings: PpoSettings,
               opt_state: AdamState, rng: np.random.Generator):
    """Several epochs of minibatch Adam steps on the clipped objective.

    Advantages are normalised over the whole batch first. Returns the new
    parameters, optimizer state and the mean of the per-minibatch stats.
    """
    n = len(batch)
    if n == 0:
        return params, opt_state, {}
    batch = PpoBatch(batch.obs, batch.actions, batch.old_logprobs,
                     normalize_advantages(batch.advantages), batch.returns)
    history: list[dict] = []
    for _ in range(settings.epochs):
        order = rng.permutation(n)
        for start in range(0, n, settings.minibatch_size):
            mb = batch.take(order[start:start + settings.minibatch_size])
            stats: dict = {}

            def objective(p):
                loss, s = ppo_loss(p, mb, head, settings.clip_eps, settings.vf_coef,
                                   settings.ent_coef)
                stats.update(s)
                return loss

            try:
                result = grad_of_scalar(objective, params)
            except NonFiniteError as exc:
                raise PpoUpdateError(f"PPO loss became non-finite ({exc})") from exc
            grad = result.grad
            if settings.max_grad_norm is not None:
                norm = float(np.sqrt(np.sum(grad.values * grad.values)))
                if norm > settings.max_grad_norm:
                    grad = grad.with_values(grad.values * (settings.max_grad_norm / norm))
            params, opt_state = adam_step(params, grad, opt_state, settings.lr)
            stats["loss"] = result.value
            history.append(stats)
    summary = {key: float(np.mean([h[key] for h in history])) for key in history[0]}
    return params, opt_state, summary

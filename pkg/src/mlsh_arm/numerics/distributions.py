"""Categorical and diagonal-Gaussian policy heads.

Log-probabilities and entropies accept ndarrays or traced Vars; sampling is
always untraced and consumes exactly one draw per categorical sample and
one normal draw per Gaussian dimension.
"""

from __future__ import annotations

import numpy as np

from .autograd import Var, exp, log_softmax, total, value_of

LOG_2PI = float(np.log(2.0 * np.pi))


def softmax(logits) -> np.ndarray:
    return np.exp(log_softmax(value_of(logits)))


def categorical_sample(logits, rng: np.random.Generator) -> int:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("cannot sample from an empty categorical")
    if not np.all(np.isfinite(logits)):
        raise ValueError("categorical logits must be finite")
    cdf = np.cumsum(softmax(logits))
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), logits.size - 1))


def categorical_logprob(logits, index):
    """Log-probability of ``index`` (scalar or per-row array) under ``logits``."""
    k = value_of(logits).shape[-1]
    idx = np.asarray(index)
    if idx.size and (idx.min() < 0 or idx.max() >= k):
        raise IndexError(f"category index out of range for {k} categories")
    onehot = np.eye(k)[idx]
    return total(log_softmax(logits) * onehot, axis=-1)


def categorical_entropy(logits):
    logp = log_softmax(logits)
    return -total(exp(logp) * logp, axis=-1)


def gaussian_sample(mean, log_std, rng: np.random.Generator) -> np.ndarray:
    mean = np.asarray(mean, dtype=np.float64)
    return mean + np.exp(log_std) * rng.standard_normal(mean.shape)


def gaussian_logprob(mean, log_std, action, mask=None):
    """Diagonal-Gaussian log-density summed over the last axis.

    Dimensions where ``mask`` is 0 are excluded from the sum.
    """
    z = (action - mean) * exp(-log_std)
    per_dim = z * z * -0.5 - log_std - 0.5 * LOG_2PI
    if mask is not None:
        per_dim = per_dim * mask
    return total(per_dim, axis=-1)


def gaussian_entropy(log_std, mask=None):
    """Entropy of a diagonal Gaussian; broadcasts against ``mask`` rows."""
    per_dim = log_std + 0.5 * (1.0 + LOG_2PI)
    if mask is not None:
        per_dim = per_dim * mask
    return total(per_dim, axis=-1)

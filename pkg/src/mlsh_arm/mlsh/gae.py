from __future__ import annotations

import numpy as np


def compute_gae(rewards, values, dones, gamma: float, lam: float,
                last_value: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """GAE(lambda) advantages and value targets for one contiguous segment.

    ``last_value`` bootstraps the step after the final one and is ignored
    when that step is terminal.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not rewards.shape == values.shape == dones.shape or rewards.ndim != 1:
        raise ValueError(f"length mismatch: rewards {rewards.shape}, values {values.shape}, "
                         f"dones {dones.shape}")
    n = len(rewards)
    adv = np.zeros(n)
    running = 0.0
    next_value = last_value
    for t in range(n - 1, -1, -1):
        live = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values

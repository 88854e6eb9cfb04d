"""Adam with bias correction, as a pure function over explicit state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import ParamVector


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step)


def adam_step(params: ParamVector, grad: ParamVector, state: AdamState, lr: float,
              betas: tuple[float, float] = (0.9, 0.999),
              eps: float = 1e-8) -> tuple[ParamVector, AdamState]:
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if not params.same_layout(grad):
        raise ValueError("gradient layout does not match parameter layout")
    if state.m.shape != (len(params),):
        raise ValueError(f"optimizer state sized {state.m.shape}, params have {len(params)}")
    b1, b2 = betas
    g = grad.values
    step = state.step + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1 ** step)
    v_hat = v / (1.0 - b2 ** step)
    new_values = params.values - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params.with_values(new_values), AdamState(m, v, step)

"""Master and sub-policy parameterisations.

The master maps an observation to K logits and has its own value network;
each sub-policy maps an observation to a tanh-bounded Gaussian mean over the padded
action vector, a state-independent log-std, and a value estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import MAX_DOF, OBS_DIM
from ..numerics import (
    MlpSpec,
    ParamVector,
    Segment,
    categorical_entropy,
    categorical_logprob,
    clip,
    gaussian_entropy,
    gaussian_logprob,
    init_mlp,
    mlp_forward,
)
from ..numerics.autograd import tanh, value_of
from . import seeding
from .config import MlshConfig

POLICY_OUT_SCALE = 0.01
OFFSET_SCALE = 50.0  # a 2 cm error has unit size
EE_SLICE = slice(2 * MAX_DOF, 2 * MAX_DOF + 3)
TARGET_SLICE = slice(2 * MAX_DOF + 3, 2 * MAX_DOF + 6)


@dataclass(frozen=True)
class PolicyArch:
    num_subpolicies: int
    hidden: tuple[int, ...] = (64, 64)
    obs_dim: int = OBS_DIM
    act_dim: int = MAX_DOF
    log_std_min: float = -5.0
    log_std_max: float = 2.0

    @property
    def input_dim(self) -> int:
        return self.obs_dim + 3

    @property
    def master_pi(self) -> MlpSpec:
        return MlpSpec(self.input_dim, self.hidden, self.num_subpolicies)

    @property
    def sub_pi(self) -> MlpSpec:
        return MlpSpec(self.input_dim, self.hidden, self.act_dim)

    @property
    def value(self) -> MlpSpec:
        return MlpSpec(self.input_dim, self.hidden, 1)

    def master_layout(self) -> list[Segment]:
        return self.master_pi.layout("pi.") + self.value.layout("v.")

    def sub_layout(self) -> list[Segment]:
        return (self.sub_pi.layout("pi.") + self.value.layout("v.")
                + [Segment("log_std", (self.act_dim,))])

    @classmethod
    def from_config(cls, config: MlshConfig) -> "PolicyArch":
        return cls(config.num_subpolicies, config.hidden,
                   log_std_min=config.log_std_min, log_std_max=config.log_std_max)


@dataclass
class PolicySet:
    arch: PolicyArch
    theta: ParamVector
    phi: list[ParamVector]

    def __post_init__(self):
        if len(self.phi) != self.arch.num_subpolicies:
            raise ValueError(f"expected {self.arch.num_subpolicies} sub-policies, got {len(self.phi)}")

    @property
    def num_subpolicies(self) -> int:
        return self.arch.num_subpolicies

    def copy(self) -> "PolicySet":
        return PolicySet(self.arch, self.theta.copy(), [p.copy() for p in self.phi])

    def phi_bytes(self) -> bytes:
        return b"".join(np.ascontiguousarray(p.values).tobytes() for p in self.phi)


def init_master(arch: PolicyArch, rng: np.random.Generator) -> ParamVector:
    values = np.concatenate([init_mlp(arch.master_pi, rng, POLICY_OUT_SCALE),
                             init_mlp(arch.value, rng, 1.0)])
    return ParamVector(values, arch.master_layout())


def init_sub(arch: PolicyArch, rng: np.random.Generator, init_log_std: float) -> ParamVector:
    values = np.concatenate([init_mlp(arch.sub_pi, rng, POLICY_OUT_SCALE),
                             init_mlp(arch.value, rng, 1.0),
                             np.full(arch.act_dim, init_log_std)])
    return ParamVector(values, arch.sub_layout())


def init_policy_set(config: MlshConfig) -> PolicySet:
    arch = PolicyArch.from_config(config)
    phi = [init_sub(arch, seeding.stream(config.seed, seeding.PHI_INIT, k), config.init_log_std)
           for k in range(arch.num_subpolicies)]
    theta = init_master(arch, seeding.stream(config.seed, seeding.THETA_INIT, 0))
    return PolicySet(arch, theta, phi)


# forward passes (ndarray or traced) -----------------------------------------

def policy_input(obs) -> np.ndarray:
    """Observation plus the scaled end-effector-to-target offset.

    The offset is a linear function of the observation, but a network trained
    on a single target cannot separate target from end-effector position;
    giving it explicitly lets behaviour learned for one target carry over.
    """
    obs = value_of(obs)
    ee = obs[..., EE_SLICE]
    target = obs[..., TARGET_SLICE]
    return np.concatenate([obs, OFFSET_SCALE * (target - ee)], axis=-1)


def master_forward(arch: PolicyArch, theta: ParamVector, obs):
    x = policy_input(obs)
    logits = mlp_forward(arch.master_pi, theta, x, "pi.")
    value = mlp_forward(arch.value, theta, x, "v.")
    return logits, value[..., 0]


def sub_forward(arch: PolicyArch, phi: ParamVector, obs):
    x = policy_input(obs)
    # squashed so the mean stays inside the environment's [-1, 1] action box
    mean = tanh(mlp_forward(arch.sub_pi, phi, x, "pi."))
    log_std = clip(phi.segment("log_std"), arch.log_std_min, arch.log_std_max)
    value = mlp_forward(arch.value, phi, x, "v.")
    return mean, log_std, value[..., 0]


def action_mask(obs):
    return value_of(obs)[..., -MAX_DOF:]


def master_head(arch: PolicyArch):
    """Batch evaluator for PPO: (params, obs, indices) -> (logp, entropy, value)."""

    def head(theta, obs, actions):
        logits, value = master_forward(arch, theta, obs)
        return categorical_logprob(logits, actions), categorical_entropy(logits), value

    return head


def sub_head(arch: PolicyArch):
    def head(phi, obs, actions):
        mean, log_std, value = sub_forward(arch, phi, obs)
        mask = action_mask(obs)
        return (gaussian_logprob(mean, log_std, actions, mask),
                gaussian_entropy(log_std, mask), value)

    return head

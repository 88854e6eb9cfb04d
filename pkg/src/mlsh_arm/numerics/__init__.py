"""Small float64 autodiff stack: MLPs, Adam, policy distributions."""

from .adam import AdamState, adam_step
from .autograd import NonFiniteError, Var, clip, exp, log, log_softmax, minimum, square, tanh, total, value_of
from .distributions import (
    categorical_entropy,
    categorical_logprob,
    categorical_sample,
    gaussian_entropy,
    gaussian_logprob,
    gaussian_sample,
    softmax,
)
from .mlp import GradResult, MlpSpec, ParamVector, Segment, grad_of_scalar, init_mlp, mlp_forward

__all__ = [
    "AdamState", "adam_step", "NonFiniteError", "Var", "clip", "exp", "log", "log_softmax",
    "minimum", "square", "tanh", "total", "value_of", "categorical_entropy",
    "categorical_logprob", "categorical_sample", "gaussian_entropy", "gaussian_logprob",
    "gaussian_sample", "softmax", "GradResult", "MlpSpec", "ParamVector", "Segment",
    "grad_of_scalar", "init_mlp", "mlp_forward",
]

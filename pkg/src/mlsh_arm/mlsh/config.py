from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class MlshConfig:
    """Hyperparameters for the two-level learner.

    Defaults reproduce the reaching experiment: 4 sub-policies, macro
    duration 5, 20 warm-up and 200 joint-update iterations per task sample.
    """

    num_subpolicies: int = 4
    macro_duration: int = 5
    warmup_iters: int = 20
    joint_iters: int = 200
    steps_per_iter: int = 2000
    horizon: int = 200
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 4
    minibatch_size: int = 64
    lr_master: float = 3e-4
    lr_sub: float = 3e-4
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: tuple[int, ...] = (64, 64)
    init_log_std: float = 0.0
    log_std_min: float = -5.0
    log_std_max: float = 2.0
    meta_rounds: int = 30
    early_stop: bool = True
    early_stop_window: int = 5
    early_stop_tol_mm: float = 1.0
    adapt_iters: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        problems = []
        if self.num_subpolicies < 1:
            problems.append("num_subpolicies must be >= 1")
        if self.macro_duration < 1:
            problems.append("macro_duration must be >= 1")
        if self.steps_per_iter < self.macro_duration:
            problems.append("steps_per_iter must be >= macro_duration")
        if self.horizon < 1 or self.horizon % self.macro_duration:
            problems.append("horizon must be a positive multiple of macro_duration")
        if not 0 < self.gamma <= 1:
            problems.append("gamma must be in (0, 1]")
        if not 0 <= self.lam <= 1:
            problems.append("lam must be in [0, 1]")
        if self.clip_eps <= 0:
            problems.append("clip_eps must be > 0")
        if min(self.warmup_iters, self.joint_iters, self.meta_rounds) < 0:
            problems.append("iteration counts must be >= 0")
        if self.epochs < 1 or self.minibatch_size < 1:
            problems.append("epochs and minibatch_size must be >= 1")
        if self.lr_master <= 0 or self.lr_sub <= 0:
            problems.append("learning rates must be > 0")
        if self.log_std_min > self.log_std_max:
            problems.append("log_std_min must not exceed log_std_max")
        if self.adapt_iters is not None and self.adapt_iters < 0:
            problems.append("adapt_iters must be >= 0")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def master_gamma(self) -> float:
        return self.gamma ** self.macro_duration

    @property
    def adaptation_iters(self) -> int:
        return self.warmup_iters if self.adapt_iters is None else self.adapt_iters

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlshConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

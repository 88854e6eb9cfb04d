"""Kinematic SCARA reaching environment and the task distribution.

Every arm is padded to ``MAX_DOF`` joints so that observations and actions
have the same length for all configurations. Padded joints stay at exactly
zero and ignore their action component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_DOF = 4
OBS_DIM = 3 * MAX_DOF + 6
DEFAULT_HORIZON = 200
REACH_MARGIN = 1e-3


class UnreachableTargetError(ValueError):
    pass


@dataclass(frozen=True)
class ArmConfig:
    name: str
    link_lengths: tuple[float, ...]
    base_height: float
    joint_limits: tuple[tuple[float, float], ...]
    max_joint_step: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", tuple(float(x) for x in self.link_lengths))
        object.__setattr__(self, "joint_limits",
                           tuple((float(lo), float(hi)) for lo, hi in self.joint_limits))
        if not 1 <= self.dof <= MAX_DOF:
            raise ValueError(f"arm '{self.name}': dof must be in [1, {MAX_DOF}], got {self.dof}")
        if len(self.joint_limits) != self.dof:
            raise ValueError(f"arm '{self.name}': {len(self.joint_limits)} joint limits "
                             f"for {self.dof} links")
        if any(length <= 0 for length in self.link_lengths):
            raise ValueError(f"arm '{self.name}': link lengths must be positive")
        if any(lo > hi for lo, hi in self.joint_limits):
            raise ValueError(f"arm '{self.name}': joint limit with min > max")
        if self.max_joint_step <= 0:
            raise ValueError(f"arm '{self.name}': max_joint_step must be positive")

    @property
    def dof(self) -> int:
        return len(self.link_lengths)

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)

    @property
    def inner_radius(self) -> float:
        return max(0.0, 2.0 * max(self.link_lengths) - self.reach)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(MAX_DOF)
        m[:self.dof] = 1.0
        return m

    @cached_property
    def limits(self) -> np.ndarray:
        return np.asarray(self.joint_limits)


@dataclass(frozen=True)
class Task:
    arm: ArmConfig
    target: tuple[float, float, float]
    task_id: int
    label: str = ""

    def __post_init__(self):
        target = tuple(float(x) for x in self.target)
        if len(target) != 3:
            raise ValueError("target must be a 3-D point")
        object.__setattr__(self, "target", target)
        check_reachable(self.arm, np.array(target))

    @property
    def name(self) -> str:
        return f"{self.arm.name}/{self.label or self.task_id}"

    @cached_property
    def target_array(self) -> np.ndarray:
        return np.array(self.target)


@dataclass
class EnvState:
    joint_angles: np.ndarray
    step_index: int
    ee_position: np.ndarray = field(repr=False)


def check_reachable(arm: ArmConfig, target: np.ndarray, margin: float = REACH_MARGIN) -> None:
    radius = float(np.hypot(target[0], target[1]))
    if radius > arm.reach - margin or radius < arm.inner_radius + margin:
        raise UnreachableTargetError(
            f"target {tuple(float(x) for x in target)} at radius {radius:.4f} m is outside the "
            f"[{arm.inner_radius:.4f}, {arm.reach:.4f}] m annulus of arm '{arm.name}'")
    if abs(target[2] - arm.base_height) > margin:
        raise UnreachableTargetError(
            f"target height {target[2]} differs from arm '{arm.name}' plane {arm.base_height}")


def forward_kinematics(arm: ArmConfig, joint_angles) -> np.ndarray:
    q = np.asarray(joint_angles, dtype=np.float64)
    if q.shape != (arm.dof,):
        raise ValueError(f"arm '{arm.name}' takes {arm.dof} joint angles, got shape {q.shape}")
    x = y = heading = 0.0
    for length, angle in zip(arm.link_lengths, q.tolist()):
        heading += angle
        x += length * math.cos(heading)
        y += length * math.sin(heading)
    return np.array([x, y, arm.base_height])


def _distance_m(a, b) -> float:
    dx, dy, dz = (float(p) - float(q) for p, q in zip(a, b))
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def euclidean_distance(ee, target) -> float:
    """Distance in millimetres between two points given in metres."""
    return _distance_m(ee, target) * 1000.0


def observe(state: EnvState, task: Task) -> np.ndarray:
    q = state.joint_angles
    return np.concatenate([np.cos(q), np.sin(q), state.ee_position,
                           task.target_array, task.arm.mask])


def _make_state(arm: ArmConfig, active: np.ndarray, step_index: int) -> EnvState:
    q = np.zeros(MAX_DOF)
    q[:arm.dof] = active
    return EnvState(q, step_index, forward_kinematics(arm, active))


def reset(task: Task, rng: np.random.Generator) -> tuple[EnvState, np.ndarray]:
    arm = task.arm
    active = rng.uniform(-0.1, 0.1, size=arm.dof)
    active = np.clip(active, arm.limits[:, 0], arm.limits[:, 1])
    state = _make_state(arm, active, 0)
    return state, observe(state, task)


def step(state: EnvState, action, task: Task, horizon: int = DEFAULT_HORIZON):
    """Advance one control step; returns (state, observation, reward, done)."""
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (MAX_DOF,):
        raise ValueError(f"action must have length {MAX_DOF}, got shape {action.shape}")
    if not np.all(np.isfinite(action)):
        raise ValueError(f"non-finite action {action}")
    arm = task.arm
    command = np.clip(action[:arm.dof], -1.0, 1.0)
    active = state.joint_angles[:arm.dof] + command * arm.max_joint_step
    active = np.clip(active, arm.limits[:, 0], arm.limits[:, 1])
    nxt = _make_state(arm, active, state.step_index + 1)
    reward = -_distance_m(nxt.ee_position, task.target)
    return nxt, observe(nxt, task), reward, nxt.step_index >= horizon


# task distributions --------------------------------------------------------

SCARA_LIMIT = 2.6

TARGET_H = (0.3305805, -0.1326121)
TARGET_O = (0.3325683, 0.0657366)


def scara_arms() -> dict[str, ArmConfig]:
    three = ArmConfig("3dof", (0.15, 0.15, 0.10), 0.3746, ((-SCARA_LIMIT, SCARA_LIMIT),) * 3)
    four = ArmConfig("4dof", (0.15, 0.15, 0.10, 0.08), 0.4868,
                     ((-SCARA_LIMIT, SCARA_LIMIT),) * 4)
    return {three.name: three, four.name: four}


def make_task_distribution(arms: dict[str, ArmConfig] | None = None,
                           targets: list[tuple[str, tuple[float, float, float], str]] | None = None,
                           ) -> list[Task]:
    """Build the (configuration, target) task list.

    With no arguments this is the two-configuration, two-target setup:
    the centres of the H and O letters at each configuration's height.
    """
    if arms is None:
        arms = scara_arms()
    if targets is None:
        targets = []
        for arm_name in ("3dof", "4dof"):
            z = arms[arm_name].base_height
            targets.append((arm_name, (*TARGET_H, z), "H"))
            targets.append((arm_name, (*TARGET_O, z), "O"))
    tasks = []
    for i, (arm_name, target, label) in enumerate(targets):
        if arm_name not in arms:
            raise KeyError(f"task {i} references undefined arm '{arm_name}'")
        tasks.append(Task(arms[arm_name], tuple(target), i, label))
    return tasks


def toy_arms() -> dict[str, ArmConfig]:
    arm = ArmConfig("2dof", (0.2, 0.15), 0.0, ((-SCARA_LIMIT, SCARA_LIMIT),) * 2)
    return {arm.name: arm}


def toy_task_distribution() -> list[Task]:
    """Two planar targets for a 2-DoF arm; small enough for quick runs."""
    return make_task_distribution(toy_arms(), [("2dof", (0.22, 0.15, 0.0), "A"),
                                               ("2dof", (0.12, -0.22, 0.0), "B")])


def sample_task(tasks: list[Task], rng: np.random.Generator) -> Task:
    return tasks[int(rng.integers(len(tasks)))]

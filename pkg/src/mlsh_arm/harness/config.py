"""Experiment files: INI sections for the learner, arms and tasks.

Example::

    [experiment]
    run_name = paper
    seed = 0

    [mlsh]
    num_subpolicies = 4
    hidden = 64, 64

    [arm 3dof]
    link_lengths = 0.15, 0.15, 0.10
    base_height = 0.3746
    joint_limits = -2.6:2.6, -2.6:2.6, -2.6:2.6

    [task 0]
    arm = 3dof
    target = 0.3305805, -0.1326121, 0.3746
    label = H
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..env import ArmConfig, Task, make_task_distribution
from ..mlsh.config import MlshConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}" if line else (path or "<config>")
        super().__init__(f"{where}: {message}")
        self.reason = message


@dataclass
class ExperimentConfig:
    mlsh: MlshConfig
    arms: dict[str, ArmConfig]
    targets: list[tuple[str, tuple[float, float, float], str]]
    run_name: str = "run"
    out_dir: str = "runs"
    source: str | None = field(default=None, compare=False)

    @property
    def seed(self) -> int:
        return self.mlsh.seed

    def tasks(self) -> list[Task]:
        return make_task_distribution(self.arms, self.targets)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self._replace_mlsh(seed=seed)

    def _replace_mlsh(self, **changes) -> "ExperimentConfig":
        d = self.mlsh.to_dict()
        d.update(changes)
        return ExperimentConfig(MlshConfig.from_dict(d), self.arms, self.targets,
                                self.run_name, self.out_dir, self.source)

    def to_dict(self) -> dict:
        return {
            "run_name": self.run_name,
            "out_dir": self.out_dir,
            "mlsh": self.mlsh.to_dict(),
            "arms": {name: {"link_lengths": list(a.link_lengths), "base_height": a.base_height,
                            "joint_limits": [list(lim) for lim in a.joint_limits],
                            "max_joint_step": a.max_joint_step}
                     for name, a in self.arms.items()},
            "tasks": [{"arm": arm, "target": list(target), "label": label}
                      for arm, target, label in self.targets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        arms = {name: ArmConfig(name, tuple(a["link_lengths"]), a["base_height"],
                                tuple(tuple(lim) for lim in a["joint_limits"]),
                                a["max_joint_step"])
                for name, a in d["arms"].items()}
        targets = [(t["arm"], tuple(t["target"]), t["label"]) for t in d["tasks"]]
        return cls(MlshConfig.from_dict(d["mlsh"]), arms, targets, d["run_name"], d["out_dir"])


_SECTION = re.compile(r"^\s*\[(?P<name>[^\]]+)\]")
_KEY = re.compile(r"^\s*(?P<key>[^=:#;\s\[][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    index: dict[tuple[str, str | None], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            section = m.group("name").strip()
            index[(section, None)] = lineno
            continue
        m = _KEY.match(line)
        if m and section is not None:
            index[(section, m.group("key").strip().lower())] = lineno
    return index


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _limits(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.strip().partition(":")
        if not sep:
            raise ValueError(f"joint limit '{part.strip()}' is not of the form min:max")
        out.append((float(lo), float(hi)))
    return tuple(out)


_MLSH_FIELDS = {f.name: f for f in fields(MlshConfig)}


def _mlsh_value(name: str, raw: str):
    default = getattr(MlshConfig(), name)
    if name == "hidden":
        return tuple(int(x) for x in raw.replace(",", " ").split())
    if name == "adapt_iters":
        return None if raw.strip().lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"'{raw}' is not a boolean")
    if isinstance(default, int):
        return int(raw)
    return float(raw)


def parse_experiment(text: str, path: str | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key '{exc.option}' in [{exc.section}]", exc.lineno, path)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, path)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section]", exc.lineno, path)
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse line {line!r}", lineno, path)
    lines = _line_index(text)

    def fail(msg, section, key=None):
        raise ConfigError(msg, lines.get((section, key)) or lines.get((section, None)), path)

    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section", None, path)
    exp = parser["experiment"]
    if "seed" not in exp:
        fail("[experiment] must set an explicit seed", "experiment")
    mlsh_kwargs = {}
    try:
        mlsh_kwargs["seed"] = int(exp["seed"])
    except ValueError:
        fail(f"seed '{exp['seed']}' is not an integer", "experiment", "seed")
    for key in exp:
        if key not in ("seed", "run_name", "out_dir"):
            fail(f"unknown key '{key}' in [experiment]", "experiment", key)

    if parser.has_section("mlsh"):
        for key, raw in parser["mlsh"].items():
            if key not in _MLSH_FIELDS or key == "seed":
                fail(f"unknown key '{key}' in [mlsh]", "mlsh", key)
            try:
                mlsh_kwargs[key] = _mlsh_value(key, raw)
            except ValueError as exc:
                fail(f"bad value for '{key}': {exc}", "mlsh", key)
    try:
        mlsh = MlshConfig(**mlsh_kwargs)
    except ValueError as exc:
        # point at the first key a problem names, if the file sets it
        named = [p.split()[0] for p in str(exc).split("; ")]
        key = next((k for k in named if ("mlsh", k) in lines), None)
        fail(str(exc), "mlsh", key)

    arms: dict[str, ArmConfig] = {}
    targets = []
    task_sections = []
    for section in parser.sections():
        kind, _, name = section.partition(" ")
        name = name.strip()
        if kind == "arm":
            body = parser[section]
            for key in body:
                if key not in ("link_lengths", "base_height", "joint_limits", "max_joint_step"):
                    fail(f"unknown key '{key}' in [{section}]", section, key)
            for required in ("link_lengths", "base_height"):
                if required not in body:
                    fail(f"[{section}] is missing '{required}'", section)
            current = "link_lengths"
            try:
                links = _floats(body["link_lengths"])
                current = "base_height"
                base = float(body["base_height"])
                current = "joint_limits"
                limits = (_limits(body["joint_limits"]) if "joint_limits" in body
                          else ((-3.141592653589793, 3.141592653589793),) * len(links))
                current = "max_joint_step"
                step = float(body.get("max_joint_step", "0.05"))
                arms[name] = ArmConfig(name, links, base, limits, step)
            except ValueError as exc:
                fail(str(exc), section, current)
        elif kind == "task":
            task_sections.append(section)
        elif section not in ("experiment", "mlsh"):
            fail(f"unknown section [{section}]", section)

    for section in task_sections:
        body = parser[section]
        for key in body:
            if key not in ("arm", "target", "label"):
                fail(f"unknown key '{key}' in [{section}]", section, key)
        if "arm" not in body or "target" not in body:
            fail(f"[{section}] needs 'arm' and 'target'", section)
        if body["arm"] not in arms:
            fail(f"[{section}] references undefined arm '{body['arm']}'", section, "arm")
        try:
            target = _floats(body["target"])
        except ValueError as exc:
            fail(str(exc), section, "target")
        if len(target) != 3:
            fail(f"target must have 3 coordinates, got {len(target)}", section, "target")
        targets.append((body["arm"], target, body.get("label", section.partition(" ")[2])))
    if not targets:
        raise ConfigError("no [task ...] sections defined", None, path)

    config = ExperimentConfig(mlsh, arms, targets, exp.get("run_name", "run"),
                              exp.get("out_dir", "runs"), path)
    for section, task_def in zip(task_sections, targets):
        try:
            make_task_distribution(arms, [task_def])
        except ValueError as exc:
            fail(str(exc), section, "target")
    return config


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_experiment(text, str(path))


def validate_experiment(config: ExperimentConfig) -> list[str]:
    """Human-readable summary of the checked invariants (raises on failure)."""
    tasks = config.tasks()
    m = config.mlsh
    return [
        f"{len(config.arms)} arm configurations, {len(tasks)} tasks, all targets reachable",
        f"horizon {m.horizon} is a multiple of macro duration {m.macro_duration}",
        f"{m.num_subpolicies} sub-policies",
    ]

import os
from importlib import resources

import pytest

TINY_INI = """\
[experiment]
run_name = tiny
seed = 3

[mlsh]
num_subpolicies = 2
macro_duration = 5
warmup_iters = 1
joint_iters = 2
steps_per_iter = 100
horizon = 50
hidden = 8, 8
meta_rounds = 2
early_stop = false

[arm 2dof]
link_lengths = 0.2, 0.15
base_height = 0.0
joint_limits = -2.6:2.6, -2.6:2.6

[task 0]
arm = 2dof
target = 0.22, 0.15, 0.0
label = A

[task 1]
arm = 2dof
target = 0.12, -0.22, 0.0
label = B
"""


def pytest_addoption(parser):
    parser.addoption("--run-long", action="store_true", default=False,
                     help="run hours-long paper-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-long") or os.environ.get("MLSH_RUN_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long run; pass --run-long or set MLSH_RUN_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI)
    return path


@pytest.fixture
def shipped_config():
    def get(name):
        return resources.files("mlsh_arm") / "configs" / name
    return get


_VERDICTS_KEY = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion."""
    verdicts = request.config.stash.setdefault(_VERDICTS_KEY, {})

    def record(number, title, passed, detail=""):
        line = f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        verdicts[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts = config.stash.get(_VERDICTS_KEY, {})
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(verdicts):
            terminalreporter.write_line(verdicts[number])

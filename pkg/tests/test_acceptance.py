"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line, repeated in the terminal summary.
Criterion 5 trains five seeds of the toy experiment (about 20 minutes on one
core) and is marked ``slow``; criterion 6 trains the full four-task setup
(about an hour or more) and only runs with ``--run-long`` or
``MLSH_RUN_LONG=1``. Set ``MLSH_PAPER_CKPT`` to evaluate an existing
checkpoint for criterion 6 instead of training one.
"""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from mlsh_arm.env import forward_kinematics, scara_arms, toy_arms, toy_task_distribution
from mlsh_arm.harness import load_experiment
from mlsh_arm.harness.cli import main as cli
from mlsh_arm.mlsh import (
    MlshConfig,
    collect_rollout,
    compute_gae,
    evaluate,
    flat_ppo_train,
    load_checkpoint,
    mlsh_train,
    save_checkpoint,
    subpolicy_sequence_stats,
)
from mlsh_arm.mlsh.train import TrainerState, joint_phase, warmup_phase
from mlsh_arm.numerics import (
    MlpSpec,
    ParamVector,
    Segment,
    categorical_entropy,
    categorical_logprob,
    clip,
    gaussian_entropy,
    gaussian_logprob,
    grad_of_scalar,
    log_softmax,
    mlp_forward,
    square,
    total,
    value_of,
)
from oracles import central_difference, fk_transform_chain, gae_double_loop, relative_error

# Per-task bars for criterion 5: flat PPO trained alone on each toy task for
# one round's worth of joint iterations (50 x 2000 steps), evaluated
# deterministically and averaged over seeds 0-4 (scripts/flat_baseline.py),
# plus 50%.
FLAT_BASELINE_MM = {"2dof/A": 4.85828046588505, "2dof/B": 3.6311282586246767}
TOY_BAR_MM = {name: None if mm is None else 1.5 * mm for name, mm in FLAT_BASELINE_MM.items()}


def _composition(seed):
    rng = np.random.default_rng(seed)
    din, dout = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    hidden = tuple(int(h) for h in rng.integers(1, 7, size=rng.integers(0, 3)))
    spec = MlpSpec(din, hidden, dout)
    layout = spec.layout() + [Segment("log_std", (dout,))]
    params = ParamVector(rng.normal(0, 0.5, sum(s.size for s in layout)), layout)
    obs, act = rng.normal(size=(5, din)), rng.normal(size=(5, dout))
    idx = rng.integers(0, dout, 5)
    kind = seed % 4

    def f(q):
        out = mlp_forward(spec, q, obs)
        log_std = clip(q.segment("log_std"), -5.0, 2.0)
        if kind == 0:
            v = gaussian_logprob(out, log_std, act)
        elif kind == 1:
            v = categorical_logprob(out, idx)
        elif kind == 2:
            v = categorical_entropy(out) + gaussian_entropy(log_std) * 0.1
        else:
            v = square(gaussian_logprob(out, log_std, act) * 0.1) + log_softmax(out)[..., 0]
        return total(v) / 5.0

    return f, params


def test_criterion_1_gradient_correctness(verdict):
    worst = 0.0
    for seed in range(100):
        f, params = _composition(seed)
        grad = grad_of_scalar(f, params).grad.values
        fd = central_difference(lambda v: float(value_of(f(params.with_values(v)))), params.values)
        worst = max(worst, float(relative_error(grad, fd, floor=1e-8).max()))
    assert verdict(1, "gradient correctness", worst < 1e-4,
                   f"100 compositions, worst relative error {worst:.2e}, bar 1e-4")


def test_criterion_2_fk_oracle(verdict):
    arms = list(scara_arms().values()) + list(toy_arms().values())
    worst = 0.0
    rng = np.random.default_rng(2)
    for arm in arms:
        for q in rng.uniform(-math.pi, math.pi, size=(10_000, arm.dof)):
            err = np.abs(forward_kinematics(arm, q) - fk_transform_chain(arm.link_lengths,
                                                                         arm.base_height, q))
            worst = max(worst, float(err.max()))
    assert verdict(2, "FK oracle equivalence", worst <= 1e-12,
                   f"{len(arms)} arms x 10k configurations, worst error {worst:.1e} m")


def test_criterion_3_algorithm_structure(verdict, tiny_config, tmp_path):
    checks = {}
    tasks = toy_task_distribution()
    cfg = MlshConfig(num_subpolicies=3, hidden=(16, 16), steps_per_iter=300, horizon=100,
                     warmup_iters=3, joint_iters=2, seed=5)

    state = TrainerState.fresh(cfg)
    before = state.policies.phi_bytes()
    warmup_phase(state, tasks[0])
    checks["frozen phi during warm-up"] = state.policies.phi_bytes() == before

    buf = collect_rollout(state.policies, tasks[1], 730, 100, 5, seed=5)
    macro_ok = reward_ok = True
    for seg in buf.segments:
        for m, k in enumerate(seg.macro_ks):
            window = slice(5 * m, 5 * m + 5)
            macro_ok &= bool((seg.ks[window] == k).all())
            reward_ok &= seg.macro_rewards[m] == sum(seg.rewards[window].tolist())
        macro_ok &= len(seg.macro_ks) == math.ceil(len(seg.rewards) / 5)
    checks["macro decisions at t = 0 mod N"] = macro_ok
    checks["macro reward equals window sum"] = reward_ok

    state.policies.theta.segment("pi.b2")[:] = [50.0, -50.0, -50.0]
    untouched = [p.values.tobytes() for p in state.policies.phi[1:]]
    joint_phase(state, tasks[0])
    checks["unused sub-policies untouched"] = \
        [p.values.tobytes() for p in state.policies.phi[1:]] == untouched

    rng = np.random.default_rng(3)
    r, v, d = rng.normal(size=50), rng.normal(size=50), rng.random(50) < 0.1
    adv, _ = compute_gae(r, v, d, 0.99, 0.95, 0.2)
    oracle = gae_double_loop(r.tolist(), v.tolist(), d.tolist(), 0.99, 0.95, 0.2)
    checks["GAE double-loop oracle"] = float(np.abs(adv - oracle).max()) <= 1e-12

    masters = {0: state.policies.theta.copy()}
    save_checkpoint(tmp_path / "a.mlsh", {"seed": 5}, state.policies, masters)
    save_checkpoint(tmp_path / "b.mlsh", *load_checkpoint(tmp_path / "a.mlsh"))
    checks["checkpoint round trip"] = \
        (tmp_path / "a.mlsh").read_bytes() == (tmp_path / "b.mlsh").read_bytes()

    for name in ("run1", "run2"):
        cli(["train", "--config", str(tiny_config), "--out", str(tmp_path / name)])
    checks["run-twice identical CSVs"] = all(
        (tmp_path / "run1" / f).read_bytes() == (tmp_path / "run2" / f).read_bytes()
        for f in ("metrics.csv", "checkpoint.mlsh"))

    failed = [name for name, ok in checks.items() if not ok]
    assert verdict(3, "algorithm structure", not failed,
                   f"{len(checks) - len(failed)}/{len(checks)} checks"
                   + (f"; failed: {', '.join(failed)}" if failed else ""))


def test_criterion_4_degeneracy(verdict):
    iterations = 15
    task = toy_task_distribution()[0]
    cfg = MlshConfig(num_subpolicies=1, macro_duration=1, warmup_iters=0,
                     joint_iters=iterations, meta_rounds=1, adapt_iters=0, early_stop=False, seed=7)
    hier = mlsh_train(cfg, [task])
    flat = flat_ppo_train(cfg, task, iterations)
    curve = [r.mean_reward for r in hier.log.records]
    same = curve == flat.mean_rewards and hier.policies.phi[0] == flat.params
    assert verdict(4, "K=1, N=1 degeneracy", same,
                   f"{iterations} iterations, learning curves {'identical' if same else 'differ'}")


@pytest.mark.slow
def test_criterion_5_toy_learning(verdict, shipped_config):
    config = load_experiment(shipped_config("toy.ini"))
    passing, details = 0, []
    for seed in range(5):
        run = config.with_seed(seed)
        result = mlsh_train(run.mlsh, run.tasks())
        ok = True
        dists = []
        for task in run.tasks():
            pol = result.policies.copy()
            pol.theta = result.masters[task.task_id]
            mm = evaluate(pol, task, run.mlsh, 10, True).mean_mm
            ok &= mm < TOY_BAR_MM[task.name]
            dists.append(f"{mm:.1f}")
        passing += ok
        details.append("/".join(dists))
    bars = "/".join(f"{b:.1f}" for b in TOY_BAR_MM.values())
    assert verdict(5, "toy learning", passing >= 4,
                   f"{passing}/5 seeds under {bars} mm; per-seed A/B mm: {', '.join(details)}")


def _paper_checkpoint(tmp_path):
    env_path = os.environ.get("MLSH_PAPER_CKPT")
    if env_path:
        return Path(env_path)
    from importlib import resources
    cfg = resources.files("mlsh_arm") / "configs" / "paper.ini"
    assert cli(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    return tmp_path / "checkpoint.mlsh"


def _shared_prefix(sequences):
    n = 0
    while all(len(seq) > n for seq in sequences) and len({seq[n] for seq in sequences}) == 1:
        n += 1
    return f"{n}/{max(len(seq) for seq in sequences)}"


@pytest.mark.long
def test_criterion_6_paper_scale(verdict, tmp_path):
    from mlsh_arm.harness import ExperimentConfig

    experiment, policies, masters = load_checkpoint(_paper_checkpoint(tmp_path))
    config = ExperimentConfig.from_dict(experiment)
    distances, det_agree, sto_agree, shared = {}, {}, {}, {}
    for task in config.tasks():
        pol = policies.copy()
        pol.theta = masters[task.task_id]
        det = evaluate(pol, task, config.mlsh, 20, True)
        sto = evaluate(pol, task, config.mlsh, 20, False)
        distances[task.name] = det.mean_mm
        det_agree[task.name] = subpolicy_sequence_stats([det])[task.task_id].agreement
        sto_agree[task.name] = subpolicy_sequence_stats([sto])[task.task_id].agreement
        shared[task.name] = _shared_prefix(det.sequences)
    ok_a = all(mm < 100 for mm in distances.values())
    ok_b = all(a == 1.0 for a in det_agree.values()) and all(a >= 0.8 for a in sto_agree.values())
    # the shared prefix is diagnostic only: how far into the episode all
    # deterministic sequences still coincide
    detail = "; ".join(f"{name}: {distances[name]:.1f} mm, agreement det {det_agree[name]:.2f} "
                       f"sto {sto_agree[name]:.2f}, det shared prefix {shared[name]}"
                       for name in distances)
    assert verdict(6, "paper-scale reproduction", ok_a and ok_b,
                   f"(a) {'ok' if ok_a else 'fail'}, (b) {'ok' if ok_b else 'fail'}; {detail}")


def test_criterion_7_parallel_determinism(verdict, tiny_config, tmp_path):
    text = tiny_config.read_text().replace("steps_per_iter = 100", "steps_per_iter = 230")
    tiny_config.write_text(text)
    for workers in (1, 4):
        assert cli(["train", "--config", str(tiny_config), "--out", str(tmp_path / f"w{workers}"),
                    "--workers", str(workers)]) == 0
    same = (tmp_path / "w1" / "checkpoint.mlsh").read_bytes() == \
        (tmp_path / "w4" / "checkpoint.mlsh").read_bytes()
    assert verdict(7, "parallel determinism", same,
                   "1-worker and 4-worker checkpoints " + ("identical" if same else "differ"))

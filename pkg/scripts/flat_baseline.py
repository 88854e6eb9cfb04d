"""Flat PPO per toy task: the reference distance behind the toy learning bar.

Each task gets its own single-level policy trained for the same number of
joint-update iterations one meta-round gives the hierarchy, then is
evaluated deterministically. Each task's acceptance bar is its mean distance
over seeds plus 50%.

    python scripts/flat_baseline.py --seeds 0 1 2 3 4 --iterations 50
"""

import argparse
import json
import time

import numpy as np

from mlsh_arm.env import toy_task_distribution
from mlsh_arm.mlsh import MlshConfig, PolicyArch, PolicySet, evaluate, flat_ppo_train, init_master
from mlsh_arm.mlsh import seeding


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--iterations", type=int, default=50)
    parser.add_argument("--episodes", type=int, default=10)
    args = parser.parse_args()

    results = []
    for seed in args.seeds:
        config = MlshConfig(num_subpolicies=1, macro_duration=1, steps_per_iter=2000, seed=seed)
        for task in toy_task_distribution():
            start = time.perf_counter()
            flat = flat_ppo_train(config, task, args.iterations)
            arch = PolicyArch(1, config.hidden)
            policies = PolicySet(arch, init_master(arch, seeding.stream(seed, seeding.THETA_INIT, 0)),
                                 [flat.params])
            report = evaluate(policies, task, config, args.episodes, deterministic=True)
            row = {"seed": seed, "task": task.name, "eval_mean_mm": report.mean_mm,
                   "eval_std_mm": report.std_mm, "train_final_mm": flat.final_distances_mm[-1],
                   "seconds": round(time.perf_counter() - start, 1)}
            results.append(row)
            print(json.dumps(row), flush=True)
    per_task = {}
    for row in results:
        per_task.setdefault(row["task"], []).append(row["eval_mean_mm"])
    summary = {task: float(np.mean(v)) for task, v in per_task.items()}
    bars = {task: 1.5 * mm for task, mm in summary.items()}
    print(json.dumps({"mean_eval_mm_per_task": summary, "bar_mm_per_task": bars}))


if __name__ == "__main__":
    main()

"""Train the toy experiment over several seeds and report per-task distances.

    python scripts/toy_seeds.py --seeds 0 1 2 3 4 --out runs/toy_seeds.json
"""

import argparse
import json
import time
from importlib import resources

from mlsh_arm.harness import load_experiment
from mlsh_arm.mlsh import evaluate, mlsh_train


def run_seed(config, seed, episodes=10):
    config = config.with_seed(seed)
    start = time.perf_counter()
    result = mlsh_train(config.mlsh, config.tasks())
    distances = {}
    for task in config.tasks():
        policies = result.policies.copy()
        policies.theta = result.masters[task.task_id]
        distances[task.name] = evaluate(policies, task, config.mlsh, episodes, True).mean_mm
    return {"seed": seed, "distances_mm": distances, "round_tasks": result.log.round_tasks,
            "seconds": round(time.perf_counter() - start, 1)}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=str(resources.files("mlsh_arm") / "configs" / "toy.ini"))
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--out")
    args = parser.parse_args()
    config = load_experiment(args.config)
    rows = []
    for seed in args.seeds:
        rows.append(run_seed(config, seed))
        print(json.dumps(rows[-1]), flush=True)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()

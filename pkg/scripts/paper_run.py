"""Train the four-task SCARA experiment, then evaluate and analyze it.

Runs the same steps as the CLI: train, deterministic and stochastic eval over
20 episodes, and analyze. Pass ``--ckpt`` to skip training and reuse a
finished checkpoint.

    python scripts/paper_run.py --out runs/paper
"""

import argparse
from importlib import resources
from pathlib import Path

from mlsh_arm.harness.cli import main as cli


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=str(resources.files("mlsh_arm") / "configs" / "paper.ini"))
    parser.add_argument("--out", default="runs/paper")
    parser.add_argument("--ckpt", help="existing checkpoint; skips training")
    parser.add_argument("--episodes", type=int, default=20)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    out = Path(args.out)
    ckpt = args.ckpt
    if ckpt is None:
        if cli(["-v", "train", "--config", args.config, "--out", str(out),
                "--workers", str(args.workers)]):
            raise SystemExit("training failed")
        ckpt = str(out / "checkpoint.mlsh")
    for mode, flags in (("deterministic", ["--deterministic"]), ("stochastic", [])):
        print(f"== {mode}")
        if cli(["eval", "--ckpt", ckpt, "--episodes", str(args.episodes),
                "--out", str(out / f"eval_{mode}"), *flags]):
            raise SystemExit("evaluation failed")
    if (out / "metrics.csv").exists():
        cli(["analyze", "--metrics", str(out / "metrics.csv"), "--out", str(out / "analysis")])


if __name__ == "__main__":
    main()

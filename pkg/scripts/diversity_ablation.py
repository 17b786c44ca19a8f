"""Desk-profile trainings with and without the diversification bonus.

For each (alpha, seed) pair, trains to OUT/a{alpha}_s{seed}/ (skipped if
best.ckpt already exists), then reports the best-of-10 validation objective
and the mean pairwise L1 distance among the 10 samples per graph.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from lwd import nn
from lwd.experiments import diversity_on_validation
from lwd.ppo import desk_profile, train


def run(out: Path, alpha: float, seed: int, updates: int):
    cfg = desk_profile(alpha=alpha, seed=seed, total_updates=updates)
    d = out / f"a{alpha}_s{seed}"
    if not (d / "best.ckpt").exists():
        train(cfg, d)
    obj, div = diversity_on_validation(nn.load_checkpoint(d / "best.ckpt"), cfg)
    return dict(alpha=alpha, seed=seed, objective=obj, diversity=div)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.1])
    ap.add_argument("--updates", type=int, default=2000)
    args = ap.parse_args()
    rows = []
    for a in args.alphas:
        for s in args.seeds:
            rows.append(run(args.out, a, s, args.updates))
            print(json.dumps(rows[-1]), flush=True)
    for a in args.alphas:
        sel = [r for r in rows if r["alpha"] == a]
        print(f"alpha={a}: objective {np.mean([r['objective'] for r in sel]):.3f}, "
              f"diversity {np.mean([r['diversity'] for r in sel]):.3f}")


if __name__ == "__main__":
    main()

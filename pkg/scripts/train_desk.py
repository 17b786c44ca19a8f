"""Train the desk profile and score best-of-10 against the exact MIS oracle.

Usage: python scripts/train_desk.py OUT_DIR [--updates N] [--alpha A] [--seed S]
"""

import argparse
import json
import time

from lwd.experiments import held_out_graphs, oracle_score
from lwd.ppo import desk_profile, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--updates", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--test-graphs", type=int, default=100)
    args = ap.parse_args()

    cfg = desk_profile(total_updates=args.updates, alpha=args.alpha, seed=args.seed)
    t0 = time.time()
    res = train(cfg, args.out, progress=lambda r: print(json.dumps(r), flush=True))
    print(f"trained in {time.time() - t0:.0f}s, best validation {res.best_val:.3f}")
    score = oracle_score(res.best, cfg, held_out_graphs(cfg, args.test_graphs))
    print(f"approximation ratio {score.ratio:.4f}, feasible {score.feasible}")


if __name__ == "__main__":
    main()

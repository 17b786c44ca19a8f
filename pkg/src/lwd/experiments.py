"""Desk-scale experiment helpers shared by scripts and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent import Agent
from .datasets import stream
from .ppo import TrainConfig, _validation_set, evaluate_best_of_k, mean_pairwise_l1, validate
from .problems import ProblemSpec
from .solvers import brute_force_mis

HELD_OUT_OFFSET = 10_000  # held-out graphs come from seed + offset, disjoint from training streams


def held_out_graphs(cfg: TrainConfig, count: int = 100):
    rng = stream(cfg.seed + HELD_OUT_OFFSET, "gen")
    return [cfg.graph.sample(rng) for _ in range(count)]


@dataclass
class OracleScore:
    ratio: float
    feasible: bool
    objectives: np.ndarray
    optima: np.ndarray


def oracle_score(store, cfg: TrainConfig, graphs, k: int = 10) -> OracleScore:
    """Best-of-k MIS objective per graph against the exact optimum."""
    evals = evaluate_best_of_k(Agent(store, need_value=False), graphs, ProblemSpec(), cfg.horizon, k,
                               stream(cfg.seed + HELD_OUT_OFFSET, "eval"), chunk=len(graphs))
    opt = np.array([brute_force_mis(g)[0] for g in graphs], dtype=float)
    got = np.array([e.best for e in evals])
    return OracleScore(float(np.mean(got / opt)), all(e.feasible for e in evals), got, opt)


def diversity_on_validation(store, cfg: TrainConfig) -> tuple[float, float]:
    """(mean best-of-k objective, mean pairwise L1 distance among the k samples) on the validation set."""
    graphs, specs = _validation_set(cfg)
    res = validate(store, cfg, graphs, specs)
    return (float(np.mean([r.best for r in res])),
            float(np.mean([mean_pairwise_l1(r.solutions) for r in res])))

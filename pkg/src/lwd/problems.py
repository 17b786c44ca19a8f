"""Objectives for MIS and its locally decomposable relatives.

States use the ternary encoding ``EXCLUDED=0, INCLUDED=1, DEFERRED=2``. The
partial objective of a state counts only terms whose vertices are all
determined, so per-step differences telescope to the final objective.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .graph import Graph

EXCLUDED, INCLUDED, DEFERRED = 0, 1, 2


class ProblemKind(str, enum.Enum):
    MIS = "mis"
    MWIS = "mwis"
    PCMIS = "pcmis"
    MAXCUT = "maxcut"
    ISING = "ising"


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    kind: ProblemKind = ProblemKind.MIS
    weights: np.ndarray | None = None
    lam: float = 0.5
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if self.kind is ProblemKind.MWIS:
            if self.weights is None:
                raise ValueError("MWIS requires per-vertex weights")
            w = np.asarray(self.weights, dtype=np.float64)
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValueError("MWIS weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)
        if self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    @property
    def uses_cleanup(self) -> bool:
        return self.kind in (ProblemKind.MIS, ProblemKind.MWIS)

    def with_weights(self, weights) -> "ProblemSpec":
        return ProblemSpec(self.kind, weights, self.lam, self.beta, self.gamma)


def sample_mwis_weights(n: int, rng: np.random.Generator, mean=1.0, std=0.1) -> np.ndarray:
    """Normal(mean, std) weights truncated below at 1e-6 to stay positive."""
    return np.maximum(rng.normal(mean, std, size=n), 1e-6)


def _check_len(g: Graph, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (g.n,):
        raise ValueError(f"assignment has shape {x.shape}, graph has {g.n} vertices")
    if g.n and x.dtype != bool and (x.min() < 0 or x.max() > 2):
        raise ValueError("assignment values must lie in {0, 1} (or 2 for deferred)")
    return x.astype(np.int8)


def objective(spec: ProblemSpec, g: Graph, x) -> float:
    """Objective of a complete 0/1 assignment (feasibility is not checked)."""
    x = _check_len(g, x)
    if np.any(x == DEFERRED):
        raise ValueError("objective needs a complete assignment")
    return partial_objective(spec, g, x)


def partial_objective(spec: ProblemSpec, g: Graph, s) -> float:
    s = _check_len(g, s)
    inc = s == INCLUDED
    kind = spec.kind
    if kind is ProblemKind.MIS:
        return float(np.count_nonzero(inc))
    if kind is ProblemKind.MWIS:
        return float(spec.weights[inc].sum())
    u, v = g.edge_array()
    if kind is ProblemKind.PCMIS:
        return float(np.count_nonzero(inc)) - spec.lam * float(np.count_nonzero(inc[u] & inc[v]))
    det = s != DEFERRED
    both = det[u] & det[v]
    differ = s[u] != s[v]
    if kind is ProblemKind.MAXCUT:
        return float(np.count_nonzero(both & differ))
    # Ising
    f1 = float(np.count_nonzero(inc)) - float(np.count_nonzero(s == EXCLUDED))
    f2 = float(np.count_nonzero(both & differ)) - float(np.count_nonzero(both & ~differ))
    return spec.gamma * f1 + spec.beta * f2


def is_independent(g: Graph, x) -> bool:
    x = np.asarray(x)
    inc = x == INCLUDED
    u, v = g.edge_array()
    return not bool(np.any(inc[u] & inc[v]))


def vertex_gain(spec: ProblemSpec, g: Graph, s: np.ndarray, i: int, value: int) -> float:
    """Change of the partial objective when deferred vertex ``i`` is set to ``value``."""
    kind = spec.kind
    nb = s[g.neighbors(i)]
    if kind is ProblemKind.MIS:
        return float(value)
    if kind is ProblemKind.MWIS:
        return float(spec.weights[i]) * value
    if kind is ProblemKind.PCMIS:
        return 0.0 if value == 0 else 1.0 - spec.lam * float(np.count_nonzero(nb == INCLUDED))
    det = nb[nb != DEFERRED]
    cut = float(np.count_nonzero(det != value))
    if kind is ProblemKind.MAXCUT:
        return cut
    return spec.gamma * (2 * value - 1) + spec.beta * (cut - (len(det) - cut))


def greedy_complete(spec: ProblemSpec, g: Graph, s) -> np.ndarray:
    """Fill deferred vertices to obtain a complete assignment.

    MIS/MWIS: deferred vertices are excluded (keeps feasibility). Other
    problems: deferred vertices in ascending order each take the value with the
    larger partial-objective gain given everything fixed so far; ties pick 0.
    """
    x = np.array(s, dtype=np.int8)
    if spec.uses_cleanup:
        x[x == DEFERRED] = EXCLUDED
        return x
    for i in np.flatnonzero(x == DEFERRED):
        x[i] = INCLUDED if vertex_gain(spec, g, x, i, 1) > vertex_gain(spec, g, x, i, 0) else EXCLUDED
    return x

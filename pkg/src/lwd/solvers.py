"""Non-learned references: exact oracles, min-degree greedy and 2-improvement local search."""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .problems import ProblemSpec, is_independent, objective

MIS_CAP = 40
GENERIC_CAP = 22


class SizeCapError(ValueError):
    pass


def brute_force_mis(g: Graph) -> tuple[int, list[int]]:
    """Exact MIS by branch and bound on bitmasks.

    Branches on a maximum-degree vertex of the residual graph (exclude it, or
    include it and drop its neighborhood); prunes when the current size plus
    the number of remaining vertices cannot beat the incumbent.
    """
    if g.n > MIS_CAP:
        raise SizeCapError(f"brute_force_mis supports n <= {MIS_CAP}, got n={g.n}")
    nbr = [0] * g.n
    for i in range(g.n):
        for j in g.neighbors(i).tolist():
            nbr[i] |= 1 << j
    best_size = 0
    best_set = 0

    def search(rem: int, cur: int, size: int):
        nonlocal best_size, best_set
        # vertices isolated in the residual graph are always taken
        iso = 0
        r = rem
        while r:
            low = r & -r
            v = low.bit_length() - 1
            if not nbr[v] & rem:
                iso |= low
            r ^= low
        if iso:
            rem &= ~iso
            cur |= iso
            size += iso.bit_count()
        if size + rem.bit_count() <= best_size:
            return
        if not rem:
            best_size, best_set = size, cur
            return
        v_best, d_best = -1, -1
        r = rem
        while r:
            low = r & -r
            v = low.bit_length() - 1
            d = (nbr[v] & rem).bit_count()
            if d > d_best:
                v_best, d_best = v, d
            r ^= low
        bit = 1 << v_best
        search(rem & ~bit & ~nbr[v_best], cur | bit, size + 1)
        search(rem & ~bit, cur, size)

    search((1 << g.n) - 1, 0, 0)
    witness = [i for i in range(g.n) if best_set >> i & 1]
    x = np.zeros(g.n, dtype=np.int8)
    x[witness] = 1
    assert is_independent(g, x)
    return best_size, witness


def _enumerate(n: int, chunk: int = 1 << 16):
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        yield masks, ((masks[:, None] >> np.arange(n)) & 1).astype(np.int8)


def brute_force_generic(spec: ProblemSpec, g: Graph) -> tuple[float, np.ndarray]:
    """Exhaustive search over all 2^n assignments (independent sets only for MIS/MWIS).

    Ties resolve to the smallest assignment in binary order (vertex 0 = lowest bit).
    """
    if g.n > GENERIC_CAP:
        raise SizeCapError(f"brute_force_generic supports n <= {GENERIC_CAP}, got n={g.n}")
    u, v = g.edge_array()
    best, best_x = -np.inf, None
    kind = spec.kind.value
    for _, xs in _enumerate(g.n):
        x = xs.astype(np.float64)
        if kind in ("mis", "mwis", "pcmis"):
            vert = x @ (spec.weights if kind == "mwis" else np.ones(g.n))
            inside = (xs[:, u] & xs[:, v]).sum(axis=1)
            if kind == "pcmis":
                val = vert - spec.lam * inside
            else:
                val = np.where(inside == 0, vert, -np.inf)
        else:
            cut = (xs[:, u] != xs[:, v]).sum(axis=1).astype(np.float64)
            if kind == "maxcut":
                val = cut
            else:
                f1 = 2 * x.sum(axis=1) - g.n
                val = spec.gamma * f1 + spec.beta * (2 * cut - len(u))
        k = int(np.argmax(val))
        if val[k] > best:
            best, best_x = float(val[k]), xs[k].copy()
    assert best_x is not None
    return objective(spec, g, best_x), best_x


def greedy_mis(g: Graph) -> list[int]:
    """Repeatedly take a minimum residual-degree vertex (lowest index on ties)."""
    alive = np.ones(g.n, dtype=bool)
    deg = g.degrees.astype(np.int64).copy()
    chosen = []
    while alive.any():
        cand = np.flatnonzero(alive)
        v = int(cand[np.argmin(deg[cand])])
        chosen.append(v)
        removed = [v] + [int(u) for u in g.neighbors(v) if alive[u]]
        for r in removed:
            alive[r] = False
        for r in removed:
            for w in g.neighbors(r):
                if alive[w]:
                    deg[w] -= 1
    return sorted(chosen)


def local_search_2imp(g: Graph, solution) -> list[int]:
    """2-improvement local search from an independent set.

    Free vertices (no solution neighbor) are inserted first. Then, scanning
    solution vertices ``v`` in ascending order, look among the 1-tight
    neighbors of ``v`` (whose only solution neighbor is ``v``) for a
    non-adjacent pair ``u < w``; swap ``v`` out for them, re-insert free
    vertices and rescan. Stops when no move applies.
    """
    x = np.zeros(g.n, dtype=np.int8)
    x[list(solution)] = 1
    if not is_independent(g, x):
        raise ValueError("local search needs an independent starting set")
    nbrs = g.neighbor_sets
    in_sol = set(int(i) for i in solution)
    tight = np.zeros(g.n, dtype=np.int64)
    for v in in_sol:
        for u in nbrs[v]:
            tight[u] += 1

    def insert(v):
        in_sol.add(v)
        for u in nbrs[v]:
            tight[u] += 1

    def remove(v):
        in_sol.discard(v)
        for u in nbrs[v]:
            tight[u] -= 1

    def fill_free():
        for v in range(g.n):
            if v not in in_sol and tight[v] == 0:
                insert(v)

    fill_free()
    improved = True
    while improved:
        improved = False
        for v in sorted(in_sol):
            cands = sorted(u for u in nbrs[v] if tight[u] == 1)
            pair = None
            for a_i, a in enumerate(cands):
                for b in cands[a_i + 1:]:
                    if b not in nbrs[a]:
                        pair = (a, b)
                        break
                if pair:
                    break
            if pair:
                remove(v)
                insert(pair[0])
                insert(pair[1])
                fill_free()
                improved = True
                break
    return sorted(in_sol)

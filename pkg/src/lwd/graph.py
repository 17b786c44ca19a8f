"""Immutable CSR graphs, random graph models, induced subgraphs and edge-list IO."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Invalid graph construction."""


class EdgeListFormatError(GraphError):
    """Malformed edge-list file (header or line structure)."""


class VertexRangeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with sorted CSR adjacency.

    ``indptr`` has length ``n + 1``; ``indices[indptr[i]:indptr[i+1]]`` are the
    neighbors of ``i`` in ascending order. Build instances with
    :meth:`from_edges` unless the arrays are already canonical.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges, check: bool = True) -> "Graph":
        """Build a graph from an iterable / (m, 2) array of undirected edges.

        With ``check`` the edges must be free of self-loops and duplicates
        (in either orientation); each violation raises its own error type.
        """
        n = int(n)
        if n < 0:
            raise GraphError(f"negative vertex count {n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
            raise VertexRangeError(f"edge ({bad[0]}, {bad[1]}) out of range for n={n}")
        u = np.minimum(e[:, 0], e[:, 1])
        v = np.maximum(e[:, 0], e[:, 1])
        if check and np.any(u == v):
            i = int(u[u == v][0])
            raise SelfLoopError(f"self-loop at vertex {i}")
        key = u * max(n, 1) + v
        uniq, counts = np.unique(key, return_counts=True)
        if check and np.any(counts > 1):
            k = int(uniq[counts > 1][0])
            raise DuplicateEdgeError(f"duplicate edge ({k // n}, {k % n})")
        u, v = uniq // max(n, 1), uniq % max(n, 1)
        keep = u != v
        u, v = u[keep], v[keep]
        return cls._from_unique_pairs(n, u, v)

    @classmethod
    def _from_unique_pairs(cls, n: int, u: np.ndarray, v: np.ndarray) -> "Graph":
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, indptr, cols.astype(np.int64))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @cached_property
    def _coo(self) -> tuple[np.ndarray, np.ndarray]:
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        return rows, self.indices

    def edge_array(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints ``(u, v)`` with ``u < v``, lexicographically sorted."""
        rows, cols = self._coo
        mask = rows < cols
        return rows[mask], cols[mask]

    def edges(self) -> list[tuple[int, int]]:
        u, v = self.edge_array()
        return list(zip(u.tolist(), v.tolist()))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """0/1 adjacency as a scipy CSR matrix (int32 data)."""
        data = np.ones(len(self.indices), dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def neighbor_sets(self) -> list[set]:
        return [set(self.neighbors(i).tolist()) for i in range(self.n)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def check(self) -> None:
        """Raise if any CSR invariant is violated (symmetry, sorting, simplicity)."""
        rows, cols = self._coo
        if np.any(rows == cols):
            raise SelfLoopError("self-loop in adjacency")
        for i in range(self.n):
            nb = self.neighbors(i)
            if np.any(np.diff(nb) <= 0):
                raise GraphError(f"neighbor list of {i} not strictly ascending")
        a = self.adjacency
        if (a != a.T).nnz:
            raise GraphError("adjacency not symmetric")


def induced_subgraph(g: Graph, keep) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``keep`` (bool mask or vertex ids) plus the sub->full vertex map.

    Subgraph vertices are numbered in ascending order of their original ids.
    """
    keep = np.asarray(keep)
    if keep.dtype == bool:
        if keep.shape != (g.n,):
            raise VertexRangeError(f"mask of length {keep.shape} for n={g.n}")
        mask = keep
    else:
        ids = keep.astype(np.int64).ravel()
        if ids.size and (ids.min() < 0 or ids.max() >= g.n):
            raise VertexRangeError(f"vertex ids outside [0, {g.n})")
        mask = np.zeros(g.n, dtype=bool)
        mask[ids] = True
    sub_to_full = np.flatnonzero(mask)
    full_to_sub = np.full(g.n, -1, dtype=np.int64)
    full_to_sub[sub_to_full] = np.arange(len(sub_to_full))
    rows, cols = g._coo
    e = mask[rows] & mask[cols]
    r, c = full_to_sub[rows[e]], full_to_sub[cols[e]]
    k = len(sub_to_full)
    # rows come out sorted and columns stay sorted within each row
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=k), out=indptr[1:])
    return Graph(k, indptr, c), sub_to_full


def disjoint_union(graphs) -> tuple[Graph, np.ndarray]:
    """Block-diagonal union; returns the graph and per-graph vertex offsets."""
    sizes = np.array([g.n for g in graphs], dtype=np.int64)
    offsets = np.zeros(len(graphs) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    if not graphs:
        return Graph.empty(0), offsets
    edge_offsets = np.cumsum([0] + [len(g.indices) for g in graphs])
    indptr = np.concatenate([[0]] + [g.indptr[1:] + eo for g, eo in zip(graphs, edge_offsets)])
    indices = np.concatenate([g.indices + off for g, off in zip(graphs, offsets[:-1])])
    return Graph(int(offsets[-1]), indptr.astype(np.int64), indices.astype(np.int64)), offsets


def normalized_adjacency(g: Graph) -> sp.csr_matrix:
    """``D^-1/2 A D^-1/2`` as float32 CSR; rows of isolated vertices are empty."""
    deg = g.degrees.astype(np.float64)
    rows, cols = g._coo
    vals = 1.0 / np.sqrt(deg[rows] * deg[cols])
    return sp.csr_matrix((vals.astype(np.float32), g.indices, g.indptr), shape=(g.n, g.n))


# ---------------------------------------------------------------- generators

def gen_er(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p): every vertex pair independently with probability p."""
    if n < 1:
        raise GraphError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p={p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    u, v = np.triu_indices(n, k=1)
    take = rng.random(len(u)) < p
    return Graph._from_unique_pairs(n, u[take].astype(np.int64), v[take].astype(np.int64))


def _random_subset(repeated: list, m: int, rng: np.random.Generator) -> list:
    # m distinct picks, each proportional to multiplicity in `repeated`
    targets: list = []
    seen = set()
    while len(targets) < m:
        x = repeated[int(rng.integers(len(repeated)))]
        if x not in seen:
            seen.add(x)
            targets.append(x)
    return targets


def _attach(n: int, m_attach: int, p_triad: float, seed: int) -> Graph:
    if not 1 <= m_attach < n:
        raise GraphError(f"need 1 <= m_attach < n, got m_attach={m_attach}, n={n}")
    if not 0.0 <= p_triad <= 1.0:
        raise GraphError(f"p_triad={p_triad} outside [0, 1]")
    rng = np.random.default_rng(seed)
    adj: list[set] = [set() for _ in range(n)]
    repeated = list(range(m_attach))
    for source in range(m_attach, n):
        targets = _random_subset(repeated, m_attach, rng)
        target = targets.pop()
        adj[source].add(target)
        adj[target].add(source)
        repeated.append(target)
        count = 1
        while count < m_attach:
            closed = False
            if p_triad > 0 and rng.random() < p_triad:
                cands = sorted(adj[target] - adj[source] - {source})
                if cands:
                    nb = cands[int(rng.integers(len(cands)))]
                    adj[source].add(nb)
                    adj[nb].add(source)
                    repeated.append(nb)
                    closed = True
            if not closed:
                # a triad partner may already have consumed a pre-drawn target
                target = targets.pop()
                while target in adj[source]:
                    if not targets:
                        targets = _random_subset(
                            [x for x in repeated if x not in adj[source] and x != source], 1, rng)
                    target = targets.pop()
                adj[source].add(target)
                adj[target].add(source)
                repeated.append(target)
            count += 1
        repeated.extend([source] * m_attach)
    u = [i for i in range(n) for j in adj[i] if i < j]
    v = [j for i in range(n) for j in adj[i] if i < j]
    return Graph._from_unique_pairs(n, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64))


def gen_ba(n: int, m_attach: int, seed: int) -> Graph:
    """Barabasi-Albert preferential attachment from ``m_attach`` isolated seeds."""
    return _attach(n, m_attach, 0.0, seed)


def gen_hk(n: int, m_attach: int, p_triad: float, seed: int) -> Graph:
    """Holme-Kim powerlaw-cluster model: BA plus triad closure with prob. ``p_triad``.

    With ``p_triad == 0`` no extra random draws are made, so the output equals
    :func:`gen_ba` for the same seed.
    """
    return _attach(n, m_attach, p_triad, seed)


def gen_ws(n: int, k: int, p_rewire: float, seed: int) -> Graph:
    """Watts-Strogatz small world: ring lattice of degree k, edges rewired w.p. p_rewire."""
    if k % 2 or k >= n or k < 0:
        raise GraphError(f"k must be even and < n, got k={k}, n={n}")
    if not 0.0 <= p_rewire <= 1.0:
        raise GraphError(f"p_rewire={p_rewire} outside [0, 1]")
    rng = np.random.default_rng(seed)
    adj: list[set] = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    if p_rewire > 0:
        for j in range(1, k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                if rng.random() < p_rewire and v in adj[u]:
                    if len(adj[u]) >= n - 1:
                        continue
                    w = int(rng.integers(n))
                    while w == u or w in adj[u]:
                        w = int(rng.integers(n))
                    adj[u].discard(v)
                    adj[v].discard(u)
                    adj[u].add(w)
                    adj[w].add(u)
    u = [a for a in range(n) for b in adj[a] if a < b]
    v = [b for a in range(n) for b in adj[a] if a < b]
    return Graph._from_unique_pairs(n, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64))


# ------------------------------------------------------------------- file io

def parse_edge_list(text: str) -> Graph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EdgeListFormatError("empty edge-list file")
    head = lines[0].split()
    if len(head) != 2 or not all(t.lstrip("-").isdigit() for t in head):
        raise EdgeListFormatError(f"malformed header {lines[0]!r}, expected 'n m'")
    n, m = int(head[0]), int(head[1])
    if n < 0 or m < 0:
        raise EdgeListFormatError(f"negative count in header {lines[0]!r}")
    body = lines[1:]
    if len(body) != m:
        raise EdgeListFormatError(f"header declares {m} edges, found {len(body)} lines")
    edges = np.zeros((m, 2), dtype=np.int64)
    for i, ln in enumerate(body):
        tok = ln.split()
        if len(tok) != 2 or not all(t.lstrip("-").isdigit() for t in tok):
            raise EdgeListFormatError(f"line {i + 2}: malformed edge {ln!r}")
        edges[i] = int(tok[0]), int(tok[1])
    return Graph.from_edges(n, edges, check=True)


def load_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g: Graph) -> str:
    u, v = g.edge_array()
    out = [f"{g.n} {g.m}"]
    out.extend(f"{a} {b}" for a, b in zip(u.tolist(), v.tolist()))
    return "\n".join(out) + "\n"


def save_edge_list(g: Graph, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_edge_list(g))


def load_weights(path, n: int | None = None) -> np.ndarray:
    w = np.array([float(t) for t in Path(path).read_text().split()], dtype=np.float64)
    if n is not None and len(w) != n:
        raise GraphError(f"weights file has {len(w)} values for {n} vertices")
    return w


def save_weights(w: np.ndarray, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("".join(f"{x!r}\n" for x in np.asarray(w, dtype=np.float64).tolist()))

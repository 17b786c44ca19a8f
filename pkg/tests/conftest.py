import itertools

import numpy as np
import pytest

from lwd.graph import Graph


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return Graph.from_edges(n, list(itertools.combinations(range(n), 2)))


def star(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def naive_mis(g: Graph) -> int:
    """Size of a maximum independent set by scanning every vertex subset."""
    if g.n == 0:
        return 0
    masks = np.arange(1 << g.n, dtype=np.int64)
    bad = np.zeros(len(masks), dtype=bool)
    for u, v in g.edges():
        bad |= ((masks >> u) & (masks >> v) & 1).astype(bool)
    sizes = np.unpackbits(masks.view(np.uint8).reshape(-1, 8), axis=1).sum(axis=1)
    return int(sizes[~bad].max())


def dense_normalized(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for u, v in g.edges():
        a[u, v] = a[v, u] = 1.0
    d = a.sum(axis=1)
    inv = np.where(d > 0, 1 / np.sqrt(np.where(d > 0, d, 1)), 0.0)
    return inv[:, None] * a * inv[None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)

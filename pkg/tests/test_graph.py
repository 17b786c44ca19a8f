import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lwd.graph import (DuplicateEdgeError, EdgeListFormatError, Graph, GraphError, SelfLoopError,
                       VertexRangeError, disjoint_union, gen_ba, gen_er, gen_hk, gen_ws,
                       induced_subgraph, load_edge_list, normalized_adjacency, parse_edge_list,
                       save_edge_list)

from conftest import complete, cycle, dense_normalized, path, star


def assert_simple(g: Graph):
    g.check()
    assert g.degrees.sum() == 2 * g.m
    for i in range(g.n):
        for j in g.neighbors(i):
            assert i in g.neighbors(j)


def clustering(g: Graph) -> float:
    vals = []
    for i in range(g.n):
        nb = g.neighbors(i)
        k = len(nb)
        if k < 2:
            vals.append(0.0)
            continue
        links = sum(1 for a, b in itertools.combinations(nb.tolist(), 2) if b in g.neighbor_sets[a])
        vals.append(2 * links / (k * (k - 1)))
    return float(np.mean(vals))


# ------------------------------------------------------------------------ ER

def test_er_degenerate_probabilities():
    assert gen_er(5, 0.0, 3).m == 0
    tri = gen_er(3, 1.0, 99)
    assert tri == complete(3)


def test_er_edge_count_matches_binomial():
    n, p, seeds = 200, 0.15, 1000
    pairs = n * (n - 1) // 2
    counts = np.array([gen_er(n, p, s).m for s in range(seeds)])
    mean, sd = pairs * p, np.sqrt(pairs * p * (1 - p))
    # standard error of the mean over seeds
    assert abs(counts.mean() - mean) < 3 * sd / np.sqrt(seeds)
    assert mean == pytest.approx(2985.0)


def test_er_is_deterministic_per_seed():
    assert gen_er(40, 0.2, 5) == gen_er(40, 0.2, 5)
    assert gen_er(40, 0.2, 5) != gen_er(40, 0.2, 6)


def test_er_rejects_bad_probability():
    with pytest.raises(GraphError):
        gen_er(5, 1.5, 0)


# ------------------------------------------------------------------- BA / HK

def test_ba_small_cases():
    g = gen_ba(2, 1, 0)
    assert g.m == 1
    tree = gen_ba(10, 1, 4)
    assert tree.m == 9
    assert_simple(tree)


@pytest.mark.parametrize("seed", range(5))
def test_ba_edge_count(seed):
    g = gen_ba(100, 2, seed)
    assert g.m == (100 - 2) * 2 == 196
    assert_simple(g)


def test_ba_rejects_large_attachment():
    with pytest.raises(GraphError):
        gen_ba(5, 5, 0)


@pytest.mark.parametrize("seed", range(5))
def test_hk_without_triads_equals_ba(seed):
    assert gen_hk(60, 3, 0.0, seed) == gen_ba(60, 3, seed)


def _connected(g):
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v).tolist():
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == g.n


@pytest.mark.parametrize("seed", range(5))
def test_hk_tree_when_single_attachment(seed):
    g = gen_hk(10, 1, 1.0, seed)
    assert g.m == 9 and _connected(g)


def test_hk_edge_count_and_simplicity():
    for seed in range(10):
        g = gen_hk(80, 3, 0.5, seed)
        assert g.m == (80 - 3) * 3
        assert_simple(g)


def test_hk_triads_raise_clustering():
    hk = np.mean([clustering(gen_hk(100, 3, 0.5, s)) for s in range(500)])
    ba = np.mean([clustering(gen_ba(100, 3, s)) for s in range(500)])
    assert hk > ba


# ------------------------------------------------------------------------ WS

def test_ws_lattice():
    assert gen_ws(6, 2, 0.0, 0) == cycle(6)
    g = gen_ws(20, 4, 0.0, 0)
    assert g.m == 40


@pytest.mark.parametrize("seed", range(5))
def test_ws_full_rewiring_keeps_edge_count(seed):
    g = gen_ws(20, 4, 1.0, seed)
    assert g.m == 40
    assert g != gen_ws(20, 4, 0.0, seed)
    assert_simple(g)


@pytest.mark.parametrize("n,k", [(10, 3), (10, 10), (4, 6)])
def test_ws_rejects_bad_k(n, k):
    with pytest.raises(GraphError):
        gen_ws(n, k, 0.1, 0)


@settings(max_examples=40, deadline=None)
@given(model=st.sampled_from(["er", "ba", "hk", "ws"]), n=st.integers(5, 40),
       seed=st.integers(0, 2**32))
def test_generators_are_simple_and_deterministic(model, n, seed):
    make = {"er": lambda s: gen_er(n, 0.2, s), "ba": lambda s: gen_ba(n, 2, s),
            "hk": lambda s: gen_hk(n, 2, 0.3, s), "ws": lambda s: gen_ws(n, 4, 0.3, s)}[model]
    g = make(seed)
    assert_simple(g)
    assert g == make(seed)


# ------------------------------------------------------------ construction

def test_from_edges_errors():
    with pytest.raises(SelfLoopError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(DuplicateEdgeError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(VertexRangeError):
        Graph.from_edges(3, [(0, 3)])


# --------------------------------------------------------- induced subgraph

def test_induced_subgraph_small():
    sub, mapping = induced_subgraph(complete(3), [0, 1])
    assert sub == path(2)
    assert mapping.tolist() == [0, 1]
    g = gen_er(12, 0.4, 1)
    same, ident = induced_subgraph(g, np.arange(g.n))
    assert same == g and ident.tolist() == list(range(g.n))


def test_induced_subgraph_edge_count(rng):
    for s in range(20):
        g = gen_er(50, 0.2, s)
        keep = rng.choice(50, 20, replace=False)
        sub, mapping = induced_subgraph(g, keep)
        kept = set(keep.tolist())
        expected = sum(1 for u, v in g.edges() if u in kept and v in kept)
        assert sub.m == expected
        for a, b in sub.edges():
            assert mapping[b] in g.neighbor_sets[mapping[a]]
        assert sorted(kept) == mapping.tolist()
        sub.check()


def test_induced_subgraph_range_error():
    with pytest.raises(VertexRangeError):
        induced_subgraph(path(3), [5])


def test_disjoint_union():
    u, off = disjoint_union([path(2), complete(3)])
    assert off.tolist() == [0, 2, 5]
    assert u.edges() == [(0, 1), (2, 3), (2, 4), (3, 4)]
    u.check()


# -------------------------------------------------------- normalized adjacency

def test_normalized_adjacency_closed_forms():
    a = normalized_adjacency(path(2)).toarray()
    assert a.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    s = normalized_adjacency(star(4)).toarray()
    assert np.allclose(s[0, 1:], 0.5) and np.allclose(s[1:, 0], 0.5)
    p = normalized_adjacency(path(3)).toarray()
    assert p[0, 1] == pytest.approx(1 / np.sqrt(2)) and p[1, 2] == pytest.approx(1 / np.sqrt(2))
    assert normalized_adjacency(path(3)).dtype == np.float32


def test_normalized_adjacency_matches_dense():
    for s in range(20):
        g = gen_er(20, 0.2, s)
        a = normalized_adjacency(g).toarray()
        d = dense_normalized(g)
        assert np.allclose(a, d, atol=1e-6)
        assert np.allclose(a, a.T)
        iso = g.degrees == 0
        assert not a[iso].any()


# -------------------------------------------------------------------- file io

def test_parse_edge_list_examples():
    assert parse_edge_list("3 2\n0 1\n1 2\n") == path(3)
    g = parse_edge_list("1 0\n")
    assert g.n == 1 and g.m == 0


@pytest.mark.parametrize("text,err", [
    ("3\n0 1\n", EdgeListFormatError),
    ("x y\n", EdgeListFormatError),
    ("3 2\n0 1\n", EdgeListFormatError),
    ("3 1\n0 3\n", VertexRangeError),
    ("3 1\n2 2\n", SelfLoopError),
    ("3 2\n0 1\n1 0\n", DuplicateEdgeError),
])
def test_parse_edge_list_errors(text, err):
    with pytest.raises(err):
        parse_edge_list(text)


def test_edge_list_round_trip(tmp_path):
    g = gen_ws(100, 4, 0.1, 7)
    p = tmp_path / "g.txt"
    save_edge_list(g, p)
    assert load_edge_list(p) == g
    first = p.read_bytes()
    save_edge_list(load_edge_list(p), p)
    assert p.read_bytes() == first
    lines = first.decode().splitlines()
    assert lines[0] == f"100 {g.m}"
    assert all(int(a) < int(b) for a, b in (ln.split() for ln in lines[1:]))

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lwd.graph import Graph, gen_er
from lwd.problems import (DEFERRED, ProblemKind, ProblemSpec, greedy_complete, is_independent,
                          objective, partial_objective, sample_mwis_weights, vertex_gain)

from conftest import complete, path

KINDS = [ProblemKind.MIS, ProblemKind.PCMIS, ProblemKind.MAXCUT, ProblemKind.ISING]
EDGE = path(2)


def spec_for(kind, n=0, rng=None):
    if kind is ProblemKind.MWIS:
        return ProblemSpec(kind, sample_mwis_weights(n, rng or np.random.default_rng(0)))
    return ProblemSpec(kind)


def reference_objective(spec, g, x):
    """Direct transcription of each objective, one term at a time."""
    x = list(x)
    if spec.kind is ProblemKind.MIS:
        return sum(x)
    if spec.kind is ProblemKind.MWIS:
        return sum(w for w, xi in zip(spec.weights, x) if xi)
    if spec.kind is ProblemKind.PCMIS:
        return sum(x) - spec.lam * sum(1 for u, v in g.edges() if x[u] and x[v])
    if spec.kind is ProblemKind.MAXCUT:
        return sum(1 for u, v in g.edges() if x[u] != x[v])
    f1 = sum(1 if xi else -1 for xi in x)
    f2 = sum(1 if x[u] != x[v] else -1 for u, v in g.edges())
    return spec.gamma * f1 + spec.beta * f2


def test_objective_examples():
    assert objective(ProblemSpec(ProblemKind.MIS), complete(3), [1, 0, 0]) == 1
    assert objective(ProblemSpec(ProblemKind.PCMIS, lam=0.5), EDGE, [1, 1]) == 1.5
    ising = ProblemSpec(ProblemKind.ISING)
    assert objective(ising, EDGE, [1, 0]) == 1
    assert objective(ising, EDGE, [1, 1]) == 1


def test_ising_k2_enumeration():
    ising = ProblemSpec(ProblemKind.ISING)
    expected = {(0, 0): -3, (0, 1): 1, (1, 0): 1, (1, 1): 1}
    for x, phi in expected.items():
        assert objective(ising, EDGE, list(x)) == phi


def test_objective_length_mismatch():
    with pytest.raises(ValueError):
        objective(ProblemSpec(), EDGE, [1, 0, 0])


def test_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(ProblemKind.MWIS)
    with pytest.raises(ValueError):
        ProblemSpec(ProblemKind.MWIS, np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        ProblemSpec(ProblemKind.PCMIS, lam=0.0)
    assert ProblemSpec(ProblemKind.MIS).uses_cleanup
    assert ProblemSpec(ProblemKind.MWIS, np.ones(2)).uses_cleanup
    assert not any(ProblemSpec(k).uses_cleanup for k in KINDS[1:])


def test_mwis_weights_positive():
    w = sample_mwis_weights(100000, np.random.default_rng(0))
    assert w.min() > 0
    assert w.mean() == pytest.approx(1.0, abs=0.01)
    assert w.std() == pytest.approx(0.1, abs=0.01)


@pytest.mark.parametrize("kind", KINDS + [ProblemKind.MWIS])
def test_objective_matches_reference(kind, rng):
    for s in range(10):
        g = gen_er(9, 0.35, s)
        spec = spec_for(kind, g.n, rng)
        for _ in range(20):
            x = rng.integers(0, 2, g.n)
            assert objective(spec, g, x) == pytest.approx(reference_objective(spec, g, x))


@pytest.mark.parametrize("kind", KINDS)
def test_partial_objective_boundaries(kind):
    g = gen_er(10, 0.4, 3)
    spec = spec_for(kind)
    assert partial_objective(spec, g, np.full(g.n, DEFERRED)) == 0
    x = np.random.default_rng(1).integers(0, 2, g.n)
    assert partial_objective(spec, g, x) == objective(spec, g, x)


def test_partial_maxcut_path():
    assert partial_objective(ProblemSpec(ProblemKind.MAXCUT), path(3), [1, 0, DEFERRED]) == 1


def test_is_independent_exhaustive():
    graphs = [Graph.from_edges(4, e) for e in ([], [(0, 1)], [(0, 1), (1, 2), (2, 3)],
                                              [(0, 1), (0, 2), (0, 3), (1, 2)])]
    for g in graphs:
        for x in itertools.product([0, 1], repeat=4):
            expected = all(not (x[u] and x[v]) for u, v in g.edges())
            assert is_independent(g, np.array(x)) == expected
    assert is_independent(complete(3), [1, 0, 0])
    assert not is_independent(EDGE, [1, 1])


def test_greedy_complete_examples():
    assert greedy_complete(ProblemSpec(), EDGE, [DEFERRED, DEFERRED]).tolist() == [0, 0]
    assert greedy_complete(ProblemSpec(ProblemKind.MAXCUT), EDGE, [1, DEFERRED]).tolist() == [1, 0]
    # scan: v0 gains 1, v1 gains 1 - 0.5, v2 ties at 1 - 2*0.5 = 0 and takes 0
    pc = ProblemSpec(ProblemKind.PCMIS, lam=0.5)
    x = greedy_complete(pc, complete(3), [DEFERRED] * 3)
    assert x.tolist() == [1, 1, 0]
    assert objective(pc, complete(3), x) == 1.5


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(KINDS), seed=st.integers(0, 10**6), p=st.floats(0.0, 1.0))
def test_greedy_complete_never_decreases(kind, seed, p):
    rng = np.random.default_rng(seed)
    g = gen_er(10, 0.4, seed)
    spec = spec_for(kind)
    s = rng.integers(0, 3, g.n).astype(np.int8)
    s[rng.random(g.n) < p] = DEFERRED
    x = s.copy()
    phi = partial_objective(spec, g, x)
    for i in np.flatnonzero(x == DEFERRED):
        g1, g0 = vertex_gain(spec, g, x, i, 1), vertex_gain(spec, g, x, i, 0)
        x[i] = 1 if g1 > g0 else 0
        new = partial_objective(spec, g, x)
        assert new - phi == pytest.approx(max(g1, g0))
        assert new >= phi - 1e-12 or max(g1, g0) < 0
        phi = new
    if not spec.uses_cleanup:
        assert np.array_equal(x, greedy_complete(spec, g, s))


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(KINDS), seed=st.integers(0, 10**6))
def test_telescoping_potential(kind, seed):
    """Any order of fixing vertices telescopes exactly to the final objective."""
    rng = np.random.default_rng(seed)
    g = gen_er(12, 0.3, seed)
    spec = spec_for(kind)
    x = rng.integers(0, 2, g.n)
    s = np.full(g.n, DEFERRED, dtype=np.int8)
    total = 0.0
    for chunk in np.array_split(rng.permutation(g.n), rng.integers(1, g.n + 1)):
        before = partial_objective(spec, g, s)
        s[chunk] = x[chunk]
        total += partial_objective(spec, g, s) - before
    assert total == objective(spec, g, x)

import itertools

import numpy as np
import pytest

from lwd.sat import CNFError, assignment_from_independent_set, parse_dimacs, sat3_to_mis
from lwd.solvers import brute_force_mis

from conftest import complete, path


def satisfiable(num_vars, clauses) -> bool:
    for bits in itertools.product([False, True], repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def test_single_clause_is_triangle():
    g, lits = sat3_to_mis([(1, 2, 3)])
    assert g == complete(3)
    assert brute_force_mis(g)[0] == 1
    assert lits == [(0, 1), (0, 2), (0, 3)]


def test_contradiction():
    g, _ = sat3_to_mis([(1,), (-1,)])
    assert g == path(2)
    assert brute_force_mis(g)[0] == 1 < 2


def test_empty_clause_rejected():
    with pytest.raises(CNFError):
        sat3_to_mis([(1, 2), ()])


def test_random_satisfiable_formula(rng):
    found = 0
    while found < 5:
        clauses = [tuple(int(v) * int(s) for v, s in zip(rng.choice(np.arange(1, 6), 3, replace=False),
                                                       rng.choice([-1, 1], 3)))
                   for _ in range(8)]
        if not satisfiable(5, clauses):
            continue
        found += 1
        g, lits = sat3_to_mis(clauses)
        size, witness = brute_force_mis(g)
        assert size == 8
        values = assignment_from_independent_set(lits, witness, 5)
        assert all(any(values[abs(l) - 1] == (l > 0) for l in c) for c in clauses)


def test_parse_dimacs():
    text = "c example\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n%\n0\n"
    nv, clauses = parse_dimacs(text)
    assert nv == 3
    assert clauses == [(1, -2), (2, 3, -1)]


@pytest.mark.parametrize("text", ["1 2 0\n", "p cnf 2 1\n1 3 0\n", "p cnf 2 2\n1 0\n",
                                  "p cnf 2 1\n0\n", "p dnf 2 1\n1 0\n"])
def test_parse_dimacs_errors(text):
    with pytest.raises(CNFError):
        parse_dimacs(text)

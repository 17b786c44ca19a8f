"""DIMACS CNF parsing and the clause/literal reduction from SAT to independent set."""

from __future__ import annotations

from itertools import combinations
from pathlib import Path

from .graph import Graph


class CNFError(ValueError):
    pass


def parse_dimacs(text: str) -> tuple[int, list[tuple[int, ...]]]:
    """Parse the DIMACS CNF subset: ``c`` comments, ``p cnf V C`` header, 0-terminated clauses.

    Clauses may span lines. A ``%`` line (SATLIB trailer) ends the clause list.
    Returns ``(num_vars, clauses)``.
    """
    num_vars = num_clauses = None
    clauses: list[tuple[int, ...]] = []
    cur: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            tok = line.split()
            if len(tok) != 4 or tok[1] != "cnf":
                raise CNFError(f"bad problem line {line!r}")
            num_vars, num_clauses = int(tok[2]), int(tok[3])
            continue
        if num_vars is None:
            raise CNFError("clause before 'p cnf' header")
        for t in line.split():
            lit = int(t)
            if lit == 0:
                if not cur:
                    raise CNFError("empty clause")
                clauses.append(tuple(cur))
                cur = []
            else:
                if abs(lit) > num_vars:
                    raise CNFError(f"literal {lit} exceeds declared {num_vars} variables")
                cur.append(lit)
    if num_vars is None:
        raise CNFError("missing 'p cnf' header")
    if cur:
        clauses.append(tuple(cur))
    if num_clauses is not None and len(clauses) != num_clauses:
        raise CNFError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return num_vars, clauses


def load_dimacs(path) -> tuple[int, list[tuple[int, ...]]]:
    return parse_dimacs(Path(path).read_text())


def sat3_to_mis(clauses) -> tuple[Graph, list[tuple[int, int]]]:
    """Reduce a CNF formula to an MIS instance.

    One vertex per literal occurrence; edges join occurrences in the same clause
    and complementary occurrences of a variable. The formula is satisfiable iff
    the maximum independent set has one vertex per clause.

    Returns the graph and, per vertex, ``(clause_index, literal)``.
    """
    literal_map: list[tuple[int, int]] = []
    edges = set()
    by_var: dict[int, list[int]] = {}
    for ci, clause in enumerate(clauses):
        if len(clause) == 0:
            raise CNFError(f"clause {ci} is empty")
        start = len(literal_map)
        for lit in clause:
            lit = int(lit)
            if lit == 0:
                raise CNFError(f"clause {ci} contains literal 0")
            v = len(literal_map)
            literal_map.append((ci, lit))
            by_var.setdefault(abs(lit), []).append(v)
        edges.update(combinations(range(start, len(literal_map)), 2))
    for occ in by_var.values():
        for a, b in combinations(occ, 2):
            if literal_map[a][1] == -literal_map[b][1]:
                edges.add((a, b))
    g = Graph.from_edges(len(literal_map), sorted(edges) or [], check=True)
    return g, literal_map


def assignment_from_independent_set(literal_map, chosen, num_vars: int) -> list[bool]:
    """Truth assignment making every chosen literal true (unconstrained vars False)."""
    value = [False] * (num_vars + 1)
    for v in chosen:
        lit = literal_map[v][1]
        value[abs(lit)] = lit > 0
    return value[1:]

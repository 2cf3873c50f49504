"""Correlative sparsity: variable-coupling graph and clique decomposition.

Two variables are coupled when they appear together in a monomial of the
objective (or of a top-degree constraint), or both appear anywhere in a
lower-degree constraint.  Maximal cliques of a chordal extension of this
graph give the variable subsets; each constraint is then assigned to one
clique containing all of its variables.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import Graph, chordal_extension_heuristic, chordal_extension_maximal
from .poly import PopInstance, half_degrees


class OrderTooLowError(ValueError):
    """Relaxation order below the minimum feasible order."""


@dataclass(frozen=True)
class CliqueDecomposition:
    """Variable cliques with the constraint assignment.

    ``cliques[l]`` is a sorted tuple of variable indices.  ``ineq_assignment``
    and ``eq_assignment`` map constraint index -> clique index for every
    constraint not handled as a scalar; ``j_prime`` / ``eq_j_prime`` list the
    top-degree constraints kept as scalar moment constraints.
    """

    cliques: tuple[tuple[int, ...], ...]
    ineq_assignment: dict[int, int]
    eq_assignment: dict[int, int]
    j_prime: tuple[int, ...]
    eq_j_prime: tuple[int, ...]

    @property
    def max_clique_size(self) -> int:
        return max((len(c) for c in self.cliques), default=0)

    def clique_ineqs(self, l: int) -> list[int]:
        return sorted(j for j, cl in self.ineq_assignment.items() if cl == l)

    def clique_eqs(self, l: int) -> list[int]:
        return sorted(j for j, cl in self.eq_assignment.items() if cl == l)


def _check_order(pop: PopInstance, d: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    hd = half_degrees(pop)
    if d < hd.d_min:
        raise OrderTooLowError(
            f"relaxation order {d} is below the minimum feasible order {hd.d_min}"
        )
    return hd.d_ineq, hd.d_eq


def build_csp_graph(pop: PopInstance, d: int) -> Graph:
    """Correlative sparsity pattern graph on the variable set."""
    d_ineq, d_eq = _check_order(pop, d)
    edges: set[tuple[int, int]] = set()

    def add_pairs(var_set):
        vs = sorted(var_set)
        for i, u in enumerate(vs):
            for v in vs[i + 1 :]:
                edges.add((u, v))

    # top-degree constraints couple variables monomial-by-monomial, like f
    rule_i_polys = [pop.f]
    rule_i_polys += [g for j, g in enumerate(pop.g) if d_ineq[j] == d]
    rule_i_polys += [h for j, h in enumerate(pop.h) if d_eq[j] == d]
    for p in rule_i_polys:
        for alpha in p.supp:
            add_pairs(i for i, a in enumerate(alpha) if a)

    # lower-degree constraints couple all of their variables
    rule_ii_polys = [g for j, g in enumerate(pop.g) if d_ineq[j] < d]
    rule_ii_polys += [h for j, h in enumerate(pop.h) if d_eq[j] < d]
    for p in rule_ii_polys:
        var_set: set[int] = set()
        for alpha in p.supp:
            var_set.update(i for i, a in enumerate(alpha) if a)
        add_pairs(var_set)

    return Graph(pop.n, frozenset(edges))


def decompose(pop: PopInstance, d: int, heuristic: str = "MD") -> CliqueDecomposition:
    """Chordal-extend the csp graph and assign constraints to cliques.

    ``heuristic`` is "MD" or "MF"; "maximal" completes connected components.
    """
    d_ineq, d_eq = _check_order(pop, d)
    csp = build_csp_graph(pop, d)
    if heuristic == "maximal":
        res = chordal_extension_maximal(csp)
    else:
        res = chordal_extension_heuristic(csp, heuristic)
    cliques = res.cliques

    def assign(p, where: str) -> int:
        vs: set[int] = set()
        for alpha in p.supp:
            vs.update(i for i, a in enumerate(alpha) if a)
        for l, clique in enumerate(cliques):
            if vs <= set(clique):
                return l
        raise AssertionError(
            f"{where}: no clique contains variables {sorted(vs)}"
        )

    j_prime = tuple(j for j, dj in enumerate(d_ineq) if dj == d)
    eq_j_prime = tuple(j for j, dj in enumerate(d_eq) if dj == d)
    ineq_assignment = {
        j: assign(pop.g[j], f"inequality {j}")
        for j in range(len(pop.g))
        if j not in j_prime
    }
    eq_assignment = {
        j: assign(pop.h[j], f"equality {j}")
        for j in range(len(pop.h))
        if j not in eq_j_prime
    }
    return CliqueDecomposition(cliques, ineq_assignment, eq_assignment, j_prime, eq_j_prime)

"""Undirected graphs, chordal extensions, and maximal-clique machinery.

Vertices are integers 0..n-1 and edges are unordered pairs stored as sorted
tuples.  Chordal extensions come in two flavours: the maximal extension
(complete every connected component) and greedy elimination heuristics that
approximate a smallest chordal extension (minimum degree / minimum fill-in).
Every extension is certified by a perfect elimination ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class InvalidEliminationOrder(ValueError):
    """The supplied vertex order is not a perfect elimination ordering."""


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..num_vertices-1."""

    num_vertices: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u},{v}) outside vertex range")
            if u > v:
                raise ValueError(f"edge ({u},{v}) must be stored sorted")

    @staticmethod
    def from_edges(num_vertices: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(num_vertices, frozenset(_norm_edge(u, v) for u, v in edges))

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_vertices)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges


@dataclass(frozen=True)
class ChordalResult:
    """A chordal supergraph with its elimination order and maximal cliques."""

    extended: Graph
    order: tuple[int, ...]
    cliques: tuple[tuple[int, ...], ...]


def connected_components(g: Graph) -> list[tuple[int, ...]]:
    adj = g.adjacency()
    seen = [False] * g.num_vertices
    comps = []
    for start in range(g.num_vertices):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def is_perfect_elimination_order(g: Graph, order: Sequence[int]) -> bool:
    """Check that each vertex's later neighbors form a clique in g."""
    if sorted(order) != list(range(g.num_vertices)):
        return False
    pos = {v: i for i, v in enumerate(order)}
    adj = g.adjacency()
    for v in order:
        later = [w for w in adj[v] if pos[w] > pos[v]]
        for i, a in enumerate(later):
            for b in later[i + 1 :]:
                if not g.has_edge(a, b):
                    return False
    return True


def chordal_extension_maximal(g: Graph) -> ChordalResult:
    """Complete every connected component; cliques are the components."""
    comps = connected_components(g)
    edges = set(g.edges)
    for comp in comps:
        for i, u in enumerate(comp):
            for v in comp[i + 1 :]:
                edges.add((u, v))
    extended = Graph(g.num_vertices, frozenset(edges))
    # any vertex order eliminates a disjoint union of complete graphs
    order = tuple(range(g.num_vertices))
    cliques = sorted(comps, key=lambda c: (len(c), c))
    return ChordalResult(extended, order, tuple(cliques))


def chordal_extension_heuristic(g: Graph, heuristic: str = "MF") -> ChordalResult:
    """Greedy elimination producing an approximately smallest chordal extension.

    ``heuristic`` is "MD" (eliminate a vertex of minimum current degree) or
    "MF" (eliminate a vertex whose elimination adds the fewest fill edges).
    Ties break toward the smallest vertex label, which makes the result
    deterministic.
    """
    if heuristic not in ("MD", "MF"):
        raise ValueError(f"unknown heuristic {heuristic!r} (want 'MD' or 'MF')")
    n = g.num_vertices
    adj = g.adjacency()
    alive = set(range(n))
    fill: set[tuple[int, int]] = set()
    order: list[int] = []

    def fill_count(v: int) -> int:
        nbrs = list(adj[v])
        cnt = 0
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                if b not in adj[a]:
                    cnt += 1
        return cnt

    while alive:
        if heuristic == "MD":
            v = min(alive, key=lambda u: (len(adj[u]), u))
        else:
            v = min(alive, key=lambda u: (fill_count(u), u))
        nbrs = sorted(adj[v])
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    fill.add((a, b))
        for a in nbrs:
            adj[a].discard(v)
        adj[v] = set()
        alive.discard(v)
        order.append(v)

    extended = Graph(n, frozenset(g.edges | fill))
    cliques = maximal_cliques(extended, order)
    return ChordalResult(extended, tuple(order), tuple(cliques))


def maximal_cliques(
    chordal: Graph, order: Sequence[int]
) -> list[tuple[int, ...]]:
    """Maximal cliques of a chordal graph from a perfect elimination ordering.

    Raises InvalidEliminationOrder when ``order`` fails the perfect
    elimination check.
    """
    if not is_perfect_elimination_order(chordal, order):
        raise InvalidEliminationOrder(
            "order is not a perfect elimination ordering of the graph"
        )
    pos = {v: i for i, v in enumerate(order)}
    adj = chordal.adjacency()
    candidates = []
    for v in order:
        cand = tuple(sorted({v} | {w for w in adj[v] if pos[w] > pos[v]}))
        candidates.append(cand)
    sets = [frozenset(c) for c in candidates]
    keep = []
    for i, c in enumerate(sets):
        if any(i != j and c < other for j, other in enumerate(sets)):
            continue
        if any(c == other for other in sets[:i]):
            continue
        keep.append(candidates[i])
    return sorted(set(keep), key=lambda c: (len(c), c))


def merge_cliques(
    cliques: Sequence[Sequence[int]], md: int = 3
) -> list[tuple[int, ...]]:
    """Greedily merge heavily overlapping cliques.

    A pair (C_i, C_j) qualifies when ``|C_i & C_j| * md >= min(|C_i|, |C_j|)
    * (md - 1)``; among qualifying pairs the one with the largest overlap is
    merged (ties: lowest index pair) and the scan repeats until no pair
    qualifies.
    """
    if md < 2:
        raise ValueError(f"merge strength md={md} must be >= 2")
    work = [frozenset(c) for c in cliques]
    while True:
        best = None
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                ov = len(work[i] & work[j])
                if ov * md >= min(len(work[i]), len(work[j])) * (md - 1):
                    if best is None or ov > best[0]:
                        best = (ov, i, j)
        if best is None:
            break
        _, i, j = best
        merged = work[i] | work[j]
        work = [c for k, c in enumerate(work) if k not in (i, j)]
        work.append(merged)
    return sorted({tuple(sorted(c)) for c in work}, key=lambda c: (len(c), c))


def write_edge_list(g: Graph, stream) -> None:
    """Dump edges as one "u v" pair per line (debug aid)."""
    for u, v in sorted(g.edges):
        stream.write(f"{u} {v}\n")

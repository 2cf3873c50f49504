"""Term sparsity: monomial bases, support sets, and the block iteration.

Starting from the union of all problem supports plus the squared monomial
basis, each step builds one graph per constraint on the monomial basis
(vertices are basis monomials, edges mark pairs whose products meet the
current support), chordal-extends it, takes its maximal cliques as PSD
blocks, and grows the support with every product reachable inside a block.
The loop stabilizes once the support stops growing.

With a clique decomposition the same iteration runs independently on each
variable clique, over monomials in the clique's variables only.

Group structures are keyed by constraint: ``("m", 0)`` is the moment
matrix, ``("g", j)`` the localizing matrix of ``pop.g[j]``, and
``("h", j)`` the (equality-sense) block structure of ``pop.h[j]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .correlative import CliqueDecomposition, OrderTooLowError
from .graphs import (
    Graph,
    chordal_extension_heuristic,
    chordal_extension_maximal,
    merge_cliques,
)
from .poly import (
    Exponent,
    Polynomial,
    PopInstance,
    grlex_key,
    half_degrees,
    reduce_binary,
    support_of,
    variables_used,
)

TS_MODES = ("block", "MD", "MF")

GroupKey = tuple[str, int]
MOMENT_KEY: GroupKey = ("m", 0)


def monomial_basis(
    n: int, deg: int, variables: Sequence[int] | None = None, nb: int = 0
) -> tuple[Exponent, ...]:
    """All degree <= deg monomials over the given variables, graded-lex sorted.

    Exponents are full length-n vectors; with ``nb`` > 0 they are binary
    reduced and deduplicated.
    """
    vs = sorted(variables) if variables is not None else list(range(n))
    out: set[Exponent] = set()
    for k in range(deg + 1):
        for combo in itertools.combinations_with_replacement(vs, k):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            out.add(reduce_binary(alpha, nb))
    return tuple(sorted(out, key=grlex_key))


def newton_basis(f: Polynomial, d: int) -> tuple[Exponent, ...]:
    """Monomials whose square lies in the Newton polytope of f (plus 1).

    Optional basis reduction for unconstrained problems: keeps beta with
    2*beta inside conv(supp(f) + {0}).
    """
    import numpy as np
    from scipy.optimize import linprog

    pts = np.array(sorted(set(f.supp) | {(0,) * f.n}, key=grlex_key), dtype=float)
    full = monomial_basis(f.n, d)

    def in_hull(target) -> bool:
        # feasibility LP: convex weights on pts reproducing target
        m = pts.shape[0]
        a_eq = np.vstack([pts.T, np.ones(m)])
        b_eq = np.append(np.asarray(target, dtype=float), 1.0)
        res = linprog(np.zeros(m), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        return res.status == 0

    return tuple(b for b in full if in_hull([2 * v for v in b]))


def initial_support(pop: PopInstance, d: int) -> frozenset[Exponent]:
    """Supports of f, g, h together with all squared monomials of degree <= d."""
    if d < half_degrees(pop).d_min:
        raise OrderTooLowError(
            f"relaxation order {d} is below the minimum feasible order"
        )
    out = {reduce_binary(a, pop.nb) for a in support_of(pop)}
    for beta in monomial_basis(pop.n, d, nb=pop.nb):
        out.add(reduce_binary(tuple(2 * v for v in beta), pop.nb))
    return frozenset(out)


def tsp_graph(
    s_prev: frozenset[Exponent],
    g: Polynomial | None,
    basis: Sequence[Exponent],
    nb: int = 0,
) -> Graph:
    """Term sparsity pattern graph on the monomial basis.

    Vertices are basis indices; {i, j} is an edge when some support exponent
    of g (or 0 when g is None, the moment-matrix case) added to
    basis[i] + basis[j] lands in ``s_prev``.
    """
    supp = g.supp if g is not None else ((0,) * len(basis[0]),)
    edges = []
    for i, beta in enumerate(basis):
        for j in range(i + 1, len(basis)):
            gamma = basis[j]
            bg = tuple(b + c for b, c in zip(beta, gamma))
            for alpha in supp:
                if reduce_binary(tuple(a + v for a, v in zip(alpha, bg)), nb) in s_prev:
                    edges.append((i, j))
                    break
    return Graph.from_edges(len(basis), edges)


def extend_support(
    graphs: Sequence[Graph],
    polys: Sequence[Polynomial | None],
    bases: Sequence[Sequence[Exponent]],
    nb: int = 0,
) -> frozenset[Exponent]:
    """Union of products alpha+beta+gamma over edges and diagonals of each graph."""
    out: set[Exponent] = set()
    for graph, g, basis in zip(graphs, polys, bases):
        supp = g.supp if g is not None else ((0,) * len(basis[0]),)
        pairs = [(i, i) for i in range(len(basis))]
        pairs += list(graph.edges)
        for i, j in pairs:
            bg = tuple(b + c for b, c in zip(basis[i], basis[j]))
            for alpha in supp:
                out.add(reduce_binary(tuple(a + v for a, v in zip(alpha, bg)), nb))
    return frozenset(out)


def _blocks_support(
    blocks_per_key: dict[GroupKey, tuple[tuple[int, ...], ...]],
    polys: dict[GroupKey, Polynomial | None],
    bases: dict[GroupKey, tuple[Exponent, ...]],
    nb: int,
) -> frozenset[Exponent]:
    # support reachable inside the block structure (equals the graph formula
    # when blocks are the maximal cliques; larger after merging)
    out: set[Exponent] = set()
    for key, blocks in blocks_per_key.items():
        basis = bases[key]
        g = polys[key]
        supp = g.supp if g is not None else ((0,) * len(basis[0]),)
        for block in blocks:
            for a_idx in range(len(block)):
                for b_idx in range(a_idx, len(block)):
                    beta, gamma = basis[block[a_idx]], basis[block[b_idx]]
                    bg = tuple(b + c for b, c in zip(beta, gamma))
                    for alpha in supp:
                        out.add(
                            reduce_binary(
                                tuple(a + v for a, v in zip(alpha, bg)), nb
                            )
                        )
    return frozenset(out)


@dataclass(frozen=True)
class GroupBlocks:
    """Block structure for one variable clique (or the whole variable set).

    ``bases``/``blocks`` are keyed by ("m", 0) for the moment matrix,
    ("g", j) for inequality localizers, and ("h", j) for equality-sense
    blocks when the structure came from the term-sparsity iteration (the
    dense and purely correlative structures carry no ("h", .) keys and the
    full equality set applies instead).  Blocks are sorted index tuples
    into the corresponding basis.
    """

    clique: tuple[int, ...]
    ineqs: tuple[int, ...]
    eqs: tuple[int, ...]
    bases: dict[GroupKey, tuple[Exponent, ...]]
    blocks: dict[GroupKey, tuple[tuple[int, ...], ...]]
    support: frozenset[Exponent]
    stabilized: bool


@dataclass(frozen=True)
class BlockStructure:
    """Per-clique, per-constraint PSD block index sets at sparse order k."""

    groups: tuple[GroupBlocks, ...]
    k: int
    stabilized: bool
    decomposition: CliqueDecomposition | None

    def max_block_size(self) -> int:
        """Largest PSD block dimension (equality blocks impose no PSD cone)."""
        mb = 0
        for grp in self.groups:
            for key, blocks in grp.blocks.items():
                if key[0] == "h":
                    continue
                for block in blocks:
                    mb = max(mb, len(block))
        return mb

    def block_size_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for grp in self.groups:
            for key, blocks in grp.blocks.items():
                if key[0] == "h":
                    continue
                for block in blocks:
                    hist[len(block)] = hist.get(len(block), 0) + 1
        return dict(sorted(hist.items()))


def _group_skeleton(
    pop: PopInstance, d: int, decomposition: CliqueDecomposition | None
) -> list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]]:
    if decomposition is None:
        return [(tuple(range(pop.n)), tuple(range(len(pop.g))), tuple(range(len(pop.h))))]
    out = []
    for l, clique in enumerate(decomposition.cliques):
        out.append(
            (
                clique,
                tuple(decomposition.clique_ineqs(l)),
                tuple(decomposition.clique_eqs(l)),
            )
        )
    return out


def _group_bases(
    pop: PopInstance,
    d: int,
    clique: Sequence[int],
    ineqs: Sequence[int],
    eqs: Sequence[int],
    basis0: Sequence[Exponent] | None,
    per_clique: bool,
    with_eq: bool,
) -> dict[GroupKey, tuple[Exponent, ...]]:
    hd = half_degrees(pop)
    bases: dict[GroupKey, tuple[Exponent, ...]] = {}
    if per_clique:
        # a clique of variables absent from every polynomial contributes only
        # the trivial basis {1}; its moments would be unconstrained otherwise
        used = variables_used(pop)
        vs: Sequence[int] = tuple(v for v in clique if v in used)
    else:
        vs = clique
    if basis0 is not None:
        bases[MOMENT_KEY] = tuple(basis0)
    else:
        bases[MOMENT_KEY] = monomial_basis(pop.n, d, vs, pop.nb)
    for j in ineqs:
        bases[("g", j)] = monomial_basis(pop.n, d - hd.d_ineq[j], vs, pop.nb)
    if with_eq:
        for j in eqs:
            bases[("h", j)] = monomial_basis(pop.n, d - hd.d_eq[j], vs, pop.nb)
    return bases


def _group_polys(pop: PopInstance, bases) -> dict[GroupKey, Polynomial | None]:
    polys: dict[GroupKey, Polynomial | None] = {}
    for key in bases:
        kind, j = key
        if kind == "m":
            polys[key] = None
        elif kind == "g":
            polys[key] = pop.g[j]
        else:
            polys[key] = pop.h[j]
    return polys


def iterate_steps(
    pop: PopInstance,
    d: int,
    ts_mode: str,
    decomposition: CliqueDecomposition | None = None,
    basis0: Sequence[Exponent] | None = None,
    merge: bool = False,
    md: int = 3,
) -> Iterator[BlockStructure]:
    """Yield the block structure after each support-extension step k = 1, 2, ...

    The support carries over between steps, so consuming k items is the
    incremental "run one more step" pattern.  The iterator is infinite; once
    every group stabilizes the yielded structures repeat.
    """
    if ts_mode not in TS_MODES:
        raise ValueError(f"unknown ts_mode {ts_mode!r} (want one of {TS_MODES})")
    if basis0 is not None and decomposition is not None:
        raise ValueError("a custom basis only applies without a clique decomposition")
    skeleton = _group_skeleton(pop, d, decomposition)
    s_init = initial_support(pop, d)

    states = []
    for clique, ineqs, eqs in skeleton:
        bases = _group_bases(
            pop, d, clique, ineqs, eqs, basis0, decomposition is not None, with_eq=True
        )
        cset = set(clique)
        supp = frozenset(
            a for a in s_init if all(v == 0 or i in cset for i, v in enumerate(a))
        )
        states.append(
            {
                "clique": clique,
                "ineqs": ineqs,
                "eqs": eqs,
                "bases": bases,
                "polys": _group_polys(pop, bases),
                "support": supp,
                "stabilized": False,
                "blocks": None,
            }
        )

    k = 0
    while True:
        k += 1
        groups = []
        for st in states:
            if not st["stabilized"] or st["blocks"] is None:
                blocks_per_key: dict[GroupKey, tuple[tuple[int, ...], ...]] = {}
                for key in sorted(st["bases"]):
                    graph = tsp_graph(
                        st["support"], st["polys"][key], st["bases"][key], pop.nb
                    )
                    if ts_mode == "block":
                        ext = chordal_extension_maximal(graph)
                    else:
                        ext = chordal_extension_heuristic(graph, ts_mode)
                    blocks = [tuple(c) for c in ext.cliques]
                    if merge:
                        blocks = [tuple(c) for c in merge_cliques(blocks, md)]
                    blocks_per_key[key] = tuple(
                        sorted(blocks, key=lambda b: (len(b), b))
                    )
                # support grows with the products reachable inside the moment
                # blocks; feeding localizing-block products back as well makes
                # the hierarchy collapse to the dense value after one step
                new_support = st["support"] | _blocks_support(
                    {MOMENT_KEY: blocks_per_key[MOMENT_KEY]},
                    st["polys"],
                    st["bases"],
                    pop.nb,
                )
                st["stabilized"] = new_support == st["support"]
                st["support"] = new_support
                st["blocks"] = blocks_per_key
            groups.append(
                GroupBlocks(
                    clique=st["clique"],
                    ineqs=st["ineqs"],
                    eqs=st["eqs"],
                    bases=dict(st["bases"]),
                    blocks=dict(st["blocks"]),
                    support=st["support"],
                    stabilized=st["stabilized"],
                )
            )
        yield BlockStructure(
            groups=tuple(groups),
            k=k,
            stabilized=all(g.stabilized for g in groups),
            decomposition=decomposition,
        )


def iterate(
    pop: PopInstance,
    d: int,
    k_target: int,
    ts_mode: str,
    decomposition: CliqueDecomposition | None = None,
    basis0: Sequence[Exponent] | None = None,
    merge: bool = False,
    md: int = 3,
) -> BlockStructure:
    """Run the support-extension loop k_target times and return the result."""
    if k_target < 1:
        raise ValueError(f"k_target={k_target} must be >= 1")
    steps = iterate_steps(pop, d, ts_mode, decomposition, basis0, merge, md)
    result = None
    for _ in range(k_target):
        result = next(steps)
    steps.close()
    return result


def iterate_until_stable(
    pop: PopInstance,
    d: int,
    ts_mode: str,
    decomposition: CliqueDecomposition | None = None,
    basis0: Sequence[Exponent] | None = None,
    merge: bool = False,
    md: int = 3,
    max_steps: int = 100,
) -> BlockStructure:
    """Iterate until the support stabilizes (guaranteed finite)."""
    steps = iterate_steps(pop, d, ts_mode, decomposition, basis0, merge, md)
    for _ in range(max_steps):
        result = next(steps)
        if result.stabilized:
            steps.close()
            return result
    steps.close()
    raise RuntimeError(f"support did not stabilize within {max_steps} steps")


def full_blocks(
    pop: PopInstance,
    d: int,
    decomposition: CliqueDecomposition | None = None,
    basis0: Sequence[Exponent] | None = None,
) -> BlockStructure:
    """Single full-basis block per constraint: the dense / purely correlative case.

    Equality constraints carry no block keys here; assembly imposes the full
    degree-bounded set of moment equalities for them.
    """
    hd = half_degrees(pop)
    if d < hd.d_min:
        raise OrderTooLowError(
            f"relaxation order {d} is below the minimum feasible order {hd.d_min}"
        )
    if basis0 is not None and decomposition is not None:
        raise ValueError("a custom basis only applies without a clique decomposition")
    groups = []
    for clique, ineqs, eqs in _group_skeleton(pop, d, decomposition):
        bases = _group_bases(
            pop, d, clique, ineqs, eqs, basis0, decomposition is not None, with_eq=False
        )
        blocks = {key: (tuple(range(len(b))),) for key, b in bases.items()}
        groups.append(
            GroupBlocks(
                clique=clique,
                ineqs=ineqs,
                eqs=eqs,
                bases=bases,
                blocks=blocks,
                support=frozenset(),
                stabilized=True,
            )
        )
    return BlockStructure(
        groups=tuple(groups), k=0, stabilized=True, decomposition=decomposition
    )

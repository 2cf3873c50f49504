"""Assembly of block moment relaxations from sparsity structures.

Every PSD block is a moment or localizing (sub)matrix whose entries are
linear forms in a shared pool of moment variables; one moment id per
distinct (binary-reduced) exponent, so overlapping blocks and cliques are
consistent by construction.  Equality constraints become linear moment
equalities instead of localizing blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .correlative import CliqueDecomposition
from .poly import (
    Exponent,
    Polynomial,
    PopInstance,
    degree,
    grlex_key,
    reduce_binary,
)
from .termsparse import BlockStructure, full_blocks, monomial_basis

# a sparse linear combination of moment variables: ((moment_id, coeff), ...)
LinForm = tuple[tuple[int, float], ...]


class MomentIndex:
    """Bijection between binary-reduced exponents and contiguous moment ids."""

    def __init__(self, nb: int = 0):
        self.nb = nb
        self.ids: dict[Exponent, int] = {}
        self.exps: list[Exponent] = []

    def intern(self, alpha: Exponent) -> int:
        alpha = reduce_binary(alpha, self.nb)
        mid = self.ids.get(alpha)
        if mid is None:
            mid = len(self.exps)
            self.ids[alpha] = mid
            self.exps.append(alpha)
        return mid

    def __len__(self) -> int:
        return len(self.exps)


@dataclass
class PsdBlockSpec:
    """One PSD block: dimension and the linear form at each upper entry."""

    dim: int
    label: str
    entries: dict[tuple[int, int], LinForm]


@dataclass
class MomentSdp:
    """A block moment relaxation: min objective over PSD blocks,
    scalar inequalities, moment equalities, and y_0 = 1."""

    index: MomentIndex
    objective: LinForm
    blocks: list[PsdBlockSpec] = field(default_factory=list)
    scalar_ineqs: list[tuple[str, LinForm]] = field(default_factory=list)
    moment_eqs: list[LinForm] = field(default_factory=list)


def _form(index: MomentIndex, terms: Sequence[tuple[Exponent, float]]) -> LinForm:
    acc: dict[int, float] = {}
    for alpha, c in terms:
        mid = index.intern(alpha)
        acc[mid] = acc.get(mid, 0.0) + c
    return tuple((mid, c) for mid, c in sorted(acc.items()) if c != 0.0)


def _sum(alpha: Exponent, beta: Exponent) -> Exponent:
    return tuple(a + b for a, b in zip(alpha, beta))


def moment_block(
    basis: Sequence[Exponent],
    g: Polynomial | None,
    index: MomentIndex,
) -> dict[tuple[int, int], LinForm]:
    """Entry map of a moment (g is None) or localizing matrix on ``basis``.

    Binary variables are reduced through the index's nb setting.
    """
    entries: dict[tuple[int, int], LinForm] = {}
    n = len(basis[0])
    supp_coe = list(g.terms()) if g is not None else [((0,) * n, 1.0)]
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            bg = _sum(basis[i], basis[j])
            entries[(i, j)] = _form(
                index, [(_sum(alpha, bg), c) for alpha, c in supp_coe]
            )
    return entries


def _sub_block(
    basis: Sequence[Exponent],
    block: Sequence[int],
    g: Polynomial | None,
    index: MomentIndex,
    label: str,
    out: MomentSdp,
) -> None:
    sub_basis = [basis[i] for i in block]
    entries = moment_block(sub_basis, g, index)
    if len(sub_basis) == 1:
        # 1x1 PSD blocks are ordinary scalar inequalities
        out.scalar_ineqs.append((label, entries[(0, 0)]))
    else:
        out.blocks.append(PsdBlockSpec(len(sub_basis), label, entries))


def _equality_forms(
    pop: PopInstance,
    d: int,
    j: int,
    clique: Sequence[int] | None,
    index: MomentIndex,
) -> list[LinForm]:
    """Moment equalities L_y(h_j x^alpha) = 0 for deg(h_j x^alpha) <= 2d."""
    h = pop.h[j]
    budget = 2 * d - degree(h)
    vs = clique if clique is not None else range(pop.n)
    forms = []
    seen = set()
    for alpha in monomial_basis(pop.n, budget, vs, pop.nb):
        form = _form(index, [(_sum(kappa, alpha), c) for kappa, c in h.terms()])
        if form and form not in seen:
            seen.add(form)
            forms.append(form)
    return forms


def _equality_forms_from_blocks(
    h: Polynomial,
    basis: Sequence[Exponent],
    blocks: Sequence[Sequence[int]],
    index: MomentIndex,
) -> list[LinForm]:
    """Moment equalities L_y(h x^(beta+gamma)) = 0 over block entry pairs."""
    forms = []
    seen = set()
    for block in blocks:
        for a in range(len(block)):
            for b in range(a, len(block)):
                bg = _sum(basis[block[a]], basis[block[b]])
                form = _form(index, [(_sum(kappa, bg), c) for kappa, c in h.terms()])
                if form and form not in seen:
                    seen.add(form)
                    forms.append(form)
    return forms


def _assemble(
    pop: PopInstance,
    d: int,
    structure: BlockStructure,
    moment_one: bool = False,
) -> MomentSdp:
    index = MomentIndex(pop.nb)
    index.intern((0,) * pop.n)  # y_0 first
    msdp = MomentSdp(index=index, objective=())

    decomposition = structure.decomposition
    for l, grp in enumerate(structure.groups):
        where = f"clique {l}" if decomposition is not None else "global"
        for key in sorted(grp.bases):
            kind, j = key
            if kind == "h":
                continue  # equality blocks emit linear forms, handled below
            basis = grp.bases[key]
            if kind == "m":
                g, tag = None, "moment"
            else:
                g, tag = pop.g[j], f"ineq {j}"
            for b_idx, block in enumerate(grp.blocks[key]):
                _sub_block(
                    basis,
                    block,
                    g,
                    index,
                    f"{where} / {tag} / block {b_idx}",
                    msdp,
                )
        if moment_one:
            one_basis = [(0,) * pop.n]
            one_basis += [
                tuple(1 if i == v else 0 for i in range(pop.n)) for v in grp.clique
            ]
            one_basis.sort(key=grlex_key)
            entries = moment_block(one_basis, None, index)
            msdp.blocks.append(
                PsdBlockSpec(len(one_basis), f"{where} / first-order moment", entries)
            )
        for j in grp.eqs:
            key = ("h", j)
            if key in grp.blocks:
                msdp.moment_eqs.extend(
                    _equality_forms_from_blocks(
                        pop.h[j], grp.bases[key], grp.blocks[key], index
                    )
                )
            else:
                clique = grp.clique if decomposition is not None else None
                msdp.moment_eqs.extend(_equality_forms(pop, d, j, clique, index))

    # top-degree constraints kept scalar
    if decomposition is not None:
        for j in decomposition.j_prime:
            form = _form(index, list(pop.g[j].terms()))
            msdp.scalar_ineqs.append((f"scalar ineq {j}", form))
        for j in decomposition.eq_j_prime:
            form = _form(index, list(pop.h[j].terms()))
            if form:
                msdp.moment_eqs.append(form)

    msdp.objective = _form(index, list(pop.f.terms()))
    _reindex_grlex(msdp)
    return msdp


def _reindex_grlex(msdp: MomentSdp) -> None:
    """Renumber moment ids in graded-lex exponent order (id 0 = constant)."""
    order = sorted(range(len(msdp.index.exps)), key=lambda i: grlex_key(msdp.index.exps[i]))
    remap = {old: new for new, old in enumerate(order)}

    def rewrite(form: LinForm) -> LinForm:
        return tuple(sorted(((remap[mid], c) for mid, c in form)))

    for block in msdp.blocks:
        block.entries = {k: rewrite(v) for k, v in block.entries.items()}
    msdp.scalar_ineqs = [(lab, rewrite(f)) for lab, f in msdp.scalar_ineqs]
    msdp.moment_eqs = [rewrite(f) for f in msdp.moment_eqs]
    msdp.objective = rewrite(msdp.objective)
    new_exps = [msdp.index.exps[i] for i in order]
    msdp.index.exps = new_exps
    msdp.index.ids = {a: i for i, a in enumerate(new_exps)}


def assemble_dense(pop: PopInstance, d: int) -> MomentSdp:
    """The dense moment relaxation at order d."""
    return _assemble(pop, d, full_blocks(pop, d))


def assemble_cs(
    pop: PopInstance, d: int, decomposition: CliqueDecomposition
) -> MomentSdp:
    """Correlative-sparse relaxation: full moment blocks per variable clique."""
    return _assemble(pop, d, full_blocks(pop, d, decomposition))


def assemble_ts(pop: PopInstance, d: int, blocks: BlockStructure) -> MomentSdp:
    """Term-sparse relaxation from a global block structure."""
    if blocks.decomposition is not None:
        raise ValueError("block structure was built per clique; use assemble_cs_ts")
    return _assemble(pop, d, blocks)


def assemble_cs_ts(
    pop: PopInstance,
    d: int,
    decomposition: CliqueDecomposition,
    blocks: BlockStructure,
    moment_one: bool = False,
) -> MomentSdp:
    """Combined correlative and term sparsity; optionally add a full
    first-order moment block per clique."""
    if blocks.decomposition is None:
        raise ValueError("block structure lacks a clique decomposition")
    return _assemble(pop, d, blocks, moment_one=moment_one)


def structure_summary(msdp: MomentSdp) -> dict:
    """Block-size histogram and variable counts, for logs and reports."""
    hist: dict[int, int] = {}
    for block in msdp.blocks:
        hist[block.dim] = hist.get(block.dim, 0) + 1
    if msdp.scalar_ineqs:
        hist[1] = hist.get(1, 0) + len(msdp.scalar_ineqs)
    return {
        "psd_block_sizes": dict(sorted(hist.items())),
        "max_block_size": max(hist, default=0),
        "n_psd_blocks": len(msdp.blocks) + len(msdp.scalar_ineqs),
        "n_moments": len(msdp.index),
        "n_moment_eqs": len(msdp.moment_eqs),
    }

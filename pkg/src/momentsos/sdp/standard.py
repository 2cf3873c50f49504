"""Standard-form SDP data: PSD blocks affinely linked to free scalar variables.

The canonical problem is

    min  c . y
    s.t. X_b[i, j] = (linear form in y) + const   for every entry of block b
         E y = e
         X_b >= 0 (PSD)

which covers assembled moment relaxations (y are moments, y_0 = 1 is the
first equality row) as well as anything read back from an SDPA file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..relax import MomentSdp


@dataclass
class SdpBlock:
    """One PSD block; row k of ``coeffs``/``const`` is upper entry (I[k], J[k])."""

    dim: int
    rows_i: np.ndarray
    rows_j: np.ndarray
    coeffs: sp.csr_matrix  # (#entries, nvar)
    const: np.ndarray

    @staticmethod
    def dense_entry_order(dim: int) -> tuple[np.ndarray, np.ndarray]:
        idx = [(i, j) for i in range(dim) for j in range(i, dim)]
        return (
            np.array([i for i, _ in idx], dtype=np.int64),
            np.array([j for _, j in idx], dtype=np.int64),
        )


@dataclass
class SdpProblem:
    nvar: int
    blocks: list[SdpBlock]
    eq_coeffs: sp.csr_matrix  # (neq, nvar)
    eq_rhs: np.ndarray
    obj: np.ndarray
    infeasible_hint: bool = False
    unbounded_hint: bool = False

    @property
    def neq(self) -> int:
        return self.eq_coeffs.shape[0]

    def signature(self) -> tuple:
        """Canonical hashable structure, for round-trip and determinism tests."""
        blocks = []
        for b in self.blocks:
            entries = []
            coo = b.coeffs.tocoo()
            cells = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
            entries = tuple(cells)
            blocks.append(
                (
                    b.dim,
                    tuple(b.rows_i.tolist()),
                    tuple(b.rows_j.tolist()),
                    entries,
                    tuple(b.const.tolist()),
                )
            )
        eq = self.eq_coeffs.tocoo()
        eqs = tuple(sorted(zip(eq.row.tolist(), eq.col.tolist(), eq.data.tolist())))
        return (
            self.nvar,
            tuple(blocks),
            eqs,
            tuple(self.eq_rhs.tolist()),
            tuple(self.obj.tolist()),
        )


def _forms_to_csr(forms, nvar: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, form in enumerate(forms):
        for mid, c in form:
            rows.append(r)
            cols.append(mid)
            vals.append(c)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(forms), nvar))


def to_standard_form(msdp: MomentSdp, presolve: bool = True) -> SdpProblem:
    """Convert an assembled moment relaxation to canonical solver data.

    Every scalar inequality becomes a 1x1 block; y_0 = 1 is the first
    equality row.  Presolve drops variables whose only appearance is a
    single diagonal entry (their row and column constrain nothing) and
    removes dependent equality rows.
    """
    nvar = len(msdp.index)
    blocks: list[SdpBlock] = []
    for spec in msdp.blocks:
        ri, rj = SdpBlock.dense_entry_order(spec.dim)
        forms = [spec.entries[(i, j)] for i, j in zip(ri.tolist(), rj.tolist())]
        blocks.append(
            SdpBlock(
                spec.dim,
                ri,
                rj,
                _forms_to_csr(forms, nvar),
                np.zeros(len(forms)),
            )
        )
    for _, form in msdp.scalar_ineqs:
        blocks.append(
            SdpBlock(
                1,
                np.zeros(1, dtype=np.int64),
                np.zeros(1, dtype=np.int64),
                _forms_to_csr([form], nvar),
                np.zeros(1),
            )
        )

    eq_forms = [((0, 1.0),)] + list(msdp.moment_eqs)
    eq_rhs = np.zeros(len(eq_forms))
    eq_rhs[0] = 1.0

    obj = np.zeros(nvar)
    for mid, c in msdp.objective:
        obj[mid] = c

    problem = SdpProblem(
        nvar=nvar,
        blocks=blocks,
        eq_coeffs=_forms_to_csr(eq_forms, nvar),
        eq_rhs=eq_rhs,
        obj=obj,
    )
    if presolve:
        problem = presolve_problem(problem)
    return problem


def _drop_block_index(block: SdpBlock, drop: int, nvar: int) -> SdpBlock | None:
    keep = (block.rows_i != drop) & (block.rows_j != drop)
    if block.dim == 1 or not keep.any():
        return None
    shift = lambda a: np.where(a > drop, a - 1, a)
    return SdpBlock(
        block.dim - 1,
        shift(block.rows_i[keep]),
        shift(block.rows_j[keep]),
        block.coeffs[keep],
        block.const[keep],
    )


def presolve_problem(problem: SdpProblem) -> SdpProblem:
    """Eliminate inert variables and dependent equality rows.

    A variable with zero objective coefficient, no equality appearance, and
    a single block appearance on a diagonal entry leaves the optimal value
    unchanged when that row/column is deleted: the diagonal entry is free to
    grow, so the remaining principal submatrix carries all the constraint.
    """
    blocks = list(problem.blocks)
    eq = problem.eq_coeffs.tocsc()
    obj = problem.obj.copy()
    eq_rhs = problem.eq_rhs.copy()
    nvar = problem.nvar
    alive = np.ones(nvar, dtype=bool)

    changed = True
    while changed:
        changed = False
        ref_count = np.zeros(nvar, dtype=np.int64)
        only_ref: dict[int, tuple[int, int]] = {}
        for bi, b in enumerate(blocks):
            csc = b.coeffs.tocsc()
            counts = np.diff(csc.indptr)
            ref_count += counts
            for v in np.where(counts == 1)[0]:
                row = csc.indices[csc.indptr[v]]
                only_ref[v] = (bi, row)
        eq_counts = np.diff(eq.indptr)
        obj_used = obj != 0.0

        for v in range(nvar):
            if not alive[v]:
                continue
            if obj_used[v] or eq_counts[v] > 0:
                continue
            if ref_count[v] == 0:
                alive[v] = False
                changed = True
                continue
            if ref_count[v] == 1 and v in only_ref:
                bi, row = only_ref[v]
                b = blocks[bi]
                if b.rows_i[row] == b.rows_j[row]:
                    nb = _drop_block_index(b, int(b.rows_i[row]), nvar)
                    if nb is None:
                        blocks.pop(bi)
                    else:
                        blocks[bi] = nb
                    alive[v] = False
                    changed = True
                    break  # block list changed; rebuild reference counts

    keep_vars = np.where(alive)[0]
    if len(keep_vars) < nvar:
        remap = -np.ones(nvar, dtype=np.int64)
        remap[keep_vars] = np.arange(len(keep_vars))
        blocks = [
            SdpBlock(b.dim, b.rows_i, b.rows_j, b.coeffs[:, keep_vars].tocsr(), b.const)
            for b in blocks
        ]
        eq = eq[:, keep_vars]
        obj = obj[keep_vars]
        nvar = len(keep_vars)

    eq = eq.tocsr()
    eq, eq_rhs, infeasible = _independent_rows(eq, eq_rhs)
    eq, eq_rhs = _normalize_rows(eq, eq_rhs)
    return SdpProblem(
        nvar=nvar,
        blocks=blocks,
        eq_coeffs=eq,
        eq_rhs=eq_rhs,
        obj=obj,
        infeasible_hint=infeasible,
        unbounded_hint=problem.unbounded_hint,
    )


def _normalize_rows(eq: sp.csr_matrix, rhs: np.ndarray):
    """Scale each equality row to unit max coefficient (conditioning aid)."""
    if eq.shape[0] == 0:
        return eq, rhs
    dense = eq.toarray()
    scale = np.abs(dense).max(axis=1)
    scale[scale == 0] = 1.0
    return sp.csr_matrix(dense / scale[:, None]), rhs / scale


def _independent_rows(eq: sp.csr_matrix, rhs: np.ndarray):
    """Keep a maximal independent subset of equality rows; flag inconsistency."""
    import scipy.linalg as sla

    neq = eq.shape[0]
    if neq == 0:
        return eq, rhs, False
    dense = eq.toarray()
    # exact duplicate rows first (common after binary reduction)
    seen = set()
    keep = []
    for r in range(neq):
        nz = np.nonzero(dense[r])[0]
        key = (tuple(nz.tolist()), tuple(dense[r][nz].tolist()), float(rhs[r]))
        if key not in seen:
            seen.add(key)
            keep.append(r)
    dense = dense[keep]
    rhs = rhs[keep]

    infeasible = False
    if dense.shape[0] > 1:
        _, rmat, piv = sla.qr(dense.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(rmat))
        tol = max(dense.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
        rank = int((diag > tol).sum())
        if rank < dense.shape[0]:
            aug = np.hstack([dense, rhs[:, None]])
            rank_aug = np.linalg.matrix_rank(aug, tol=tol if tol > 0 else None)
            rank_e = np.linalg.matrix_rank(dense, tol=tol if tol > 0 else None)
            infeasible = rank_aug > rank_e
            chosen = sorted(piv[:rank].tolist())
            dense = dense[chosen]
            rhs = rhs[chosen]
    return sp.csr_matrix(dense), rhs, infeasible

"""Primal-dual interior-point solver for block SDPs with free scalar variables.

Solves the canonical problem of :mod:`.standard`,

    min  c . y   s.t.   X_b = P_b(y) + Q_b >= 0 (PSD),   E y = e,

by an infeasible-start Mehrotra predictor-corrector method with
Nesterov-Todd scaling.  The free variables never get split into cone
differences: each Newton step condenses the PSD multipliers analytically
and solves one quasi-definite system in (dy, dz).

All linear algebra is dense per block; the sparsity machinery upstream is
what keeps blocks small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .standard import SdpBlock, SdpProblem

STATUS_OPTIMAL = "optimal"
STATUS_NEAR = "near-optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_ITERATIONS = "iteration-limit"
STATUS_NUMERICAL = "numerical-failure"


@dataclass
class SolveResult:
    status: str
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int
    primal_residual: float
    dual_residual: float
    trace: list[dict] | None = None
    x_blocks: list[np.ndarray] | None = None

    @property
    def optimum(self) -> float:
        return self.primal_objective


class _Block:
    """Per-block solver state: coefficient stack and NT scaling."""

    def __init__(self, block: SdpBlock, nvar: int):
        self.dim = r = block.dim
        coo = block.coeffs.tocoo()
        self.ids = np.unique(coo.col) if coo.nnz else np.zeros(0, dtype=np.int64)
        local = {int(v): k for k, v in enumerate(self.ids)}
        self.fstack = np.zeros((len(self.ids), r, r))
        for row, var, val in zip(coo.row, coo.col, coo.data):
            i, j = int(block.rows_i[row]), int(block.rows_j[row])
            k = local[int(var)]
            self.fstack[k, i, j] += val
            if i != j:
                self.fstack[k, j, i] += val
        self.qmat = np.zeros((r, r))
        for row in range(len(block.const)):
            i, j = int(block.rows_i[row]), int(block.rows_j[row])
            self.qmat[i, j] = block.const[row]
            self.qmat[j, i] = block.const[row]

    def affine(self, y: np.ndarray) -> np.ndarray:
        """P(y) + Q."""
        if len(self.ids) == 0:
            return self.qmat.copy()
        return np.tensordot(y[self.ids], self.fstack, axes=1) + self.qmat

    def adjoint(self, s: np.ndarray, out: np.ndarray) -> None:
        """out[ids] += <F_a, S> for each coefficient matrix."""
        if len(self.ids):
            out[self.ids] += np.tensordot(self.fstack, s, axes=([1, 2], [0, 1]))


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def _max_step(m: np.ndarray, d: np.ndarray) -> float:
    """sup { a >= 0 : m + a d is PSD }, for PD m."""
    lo = sla.cholesky(m, lower=True)
    t = sla.solve_triangular(lo, d, lower=True)
    t = sla.solve_triangular(lo, t.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(t))
    lo_eig = lam[0]
    if lo_eig >= -1e-14:
        return np.inf
    return 1.0 / (-lo_eig)


def _classify_rays(blocks, e_mat, e_rhs, c, y, z, ss) -> str | None:
    """Approximate Farkas certificates from diverging iterates.

    A normalized dual ray (z, S) with vanishing homogeneous dual residual
    and positive objective certifies primal infeasibility; a normalized
    primal ray certifies unboundedness.  Both checks are heuristic (scaled
    tolerances), which matches how degenerate exits are labelled.
    """
    q = len(c)
    p = len(e_rhs)
    tol_ray = 1e-6
    # dual ray: P*(S) + E^T z = 0, e.z - <Q, S> > 0
    nu = max([1.0, np.abs(z).max() if p else 0.0] + [np.abs(s).max() for s in ss])
    if np.isfinite(nu) and nu > 1e4:
        res = np.zeros(q)
        for blk, s in zip(blocks, ss):
            blk.adjoint(s / nu, res)
        if p:
            res += e_mat.T @ (z / nu)
        val = (float(e_rhs @ z) if p else 0.0) / nu - sum(
            float(np.tensordot(s / nu, blk.qmat)) for blk, s in zip(blocks, ss)
        )
        if np.abs(res).max() <= tol_ray and val >= tol_ray:
            return STATUS_INFEASIBLE
    # primal ray: E ybar = 0, P(ybar) >= 0, c.ybar < 0
    ynorm = np.abs(y).max() if q else 0.0
    if np.isfinite(ynorm) and ynorm > 1e4:
        ybar = y / ynorm
        ok = (np.abs(e_mat @ ybar).max() <= tol_ray) if p else True
        if ok and float(c @ ybar) <= -tol_ray:
            for blk in blocks:
                hom = blk.affine(ybar) - blk.qmat
                if np.linalg.eigvalsh(hom)[0] < -tol_ray:
                    ok = False
                    break
            if ok:
                return STATUS_UNBOUNDED
    return None


def _solve_linear_only(problem: SdpProblem, tol: float) -> SolveResult:
    # no PSD blocks: either equality-determined or unbounded
    e_mat = problem.eq_coeffs.toarray()
    if e_mat.size == 0:
        status = STATUS_OPTIMAL if not problem.obj.any() else STATUS_UNBOUNDED
        return SolveResult(status, 0.0, 0.0, 0.0, 0, 0.0, 0.0)
    y, *_ = np.linalg.lstsq(e_mat, problem.eq_rhs, rcond=None)
    if np.linalg.norm(e_mat @ y - problem.eq_rhs, np.inf) > 1e-9 * (
        1 + np.abs(problem.eq_rhs).max()
    ):
        return SolveResult(STATUS_INFEASIBLE, 0.0, 0.0, 0.0, 0, np.inf, 0.0)
    # objective must be constant on the affine feasible set to be bounded
    z, *_ = np.linalg.lstsq(e_mat.T, problem.obj, rcond=None)
    if np.linalg.norm(e_mat.T @ z - problem.obj, np.inf) > 1e-9 * (
        1 + np.abs(problem.obj).max()
    ):
        return SolveResult(STATUS_UNBOUNDED, -np.inf, -np.inf, 0.0, 0, 0.0, 0.0)
    val = float(problem.obj @ y)
    return SolveResult(STATUS_OPTIMAL, val, val, 0.0, 0, 0.0, 0.0)


def solve_ipm(
    problem: SdpProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    trace: bool = False,
    verbose: bool = False,
) -> SolveResult:
    """Solve the SDP; returns status optimal when relative duality gap and
    primal/dual residuals all fall below ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if problem.infeasible_hint:
        return SolveResult(STATUS_INFEASIBLE, 0.0, 0.0, 0.0, 0, np.inf, 0.0)
    q = problem.nvar
    if not problem.blocks:
        return _solve_linear_only(problem, tol)

    blocks = [_Block(b, q) for b in problem.blocks]
    e_mat = problem.eq_coeffs.toarray() if problem.neq else np.zeros((0, q))
    e_rhs = problem.eq_rhs
    c = problem.obj
    p = e_mat.shape[0]

    # variables with an objective but no constraint anywhere are unbounded
    referenced = np.zeros(q, dtype=bool)
    for blk in blocks:
        referenced[blk.ids] = True
    if p:
        referenced[np.unique(problem.eq_coeffs.tocoo().col)] = True
    loose = (~referenced) & (c != 0)
    if loose.any():
        return SolveResult(STATUS_UNBOUNDED, -np.inf, -np.inf, 0.0, 0, 0.0, 0.0)

    ndim = sum(blk.dim for blk in blocks)
    data_scale = max(
        1.0,
        max((np.abs(blk.qmat).max() for blk in blocks), default=0.0),
        np.abs(e_rhs).max() if p else 0.0,
    )
    dual_scale = max(1.0, np.abs(c).max())
    xs = [np.eye(blk.dim) * data_scale for blk in blocks]
    ss = [np.eye(blk.dim) * dual_scale for blk in blocks]
    y = np.zeros(q)
    z = np.zeros(p)

    history: list[dict] = []
    status = STATUS_ITERATIONS
    iters_done = 0
    gamma = 0.99
    best: tuple | None = None
    stall = 0

    def residuals():
        rp_blocks = [blk.affine(y) - x for blk, x in zip(blocks, xs)]
        re = e_rhs - e_mat @ y
        rd = c.copy()
        for blk, s in zip(blocks, ss):
            tmp = np.zeros(q)
            blk.adjoint(s, tmp)
            rd -= tmp
        if p:
            rd -= e_mat.T @ z
        return rp_blocks, re, rd

    def metrics(rp_blocks, re, rd):
        pobj = float(c @ y)
        dobj = float(e_rhs @ z) - sum(
            float(np.tensordot(s, blk.qmat)) for blk, s in zip(blocks, ss)
        )
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        pres = max(
            max(
                (np.abs(rp).max() / (1 + np.abs(blk.qmat).max()) for blk, rp in zip(blocks, rp_blocks)),
                default=0.0,
            ),
            (np.abs(re).max() / (1 + np.abs(e_rhs).max()) if p else 0.0),
        )
        dres = np.abs(rd).max() / (1 + np.abs(c).max())
        return pobj, dobj, relgap, pres, dres

    for it in range(max_iter):
        iters_done = it
        rp_blocks, re, rd = residuals()
        pobj, dobj, relgap, pres, dres = metrics(rp_blocks, re, rd)
        mu = sum(float(np.tensordot(x, s)) for x, s in zip(xs, ss)) / ndim

        if trace:
            slack = (
                abs(sum(float(np.tensordot(s, rp)) for s, rp in zip(ss, rp_blocks)))
                + abs(float(z @ re) if p else 0.0)
                + abs(float(rd @ y))
            )
            history.append(
                {
                    "iter": it,
                    "pobj": pobj,
                    "dobj": dobj,
                    "mu": mu,
                    "pres": pres,
                    "dres": dres,
                    "slack": slack,
                }
            )
        if verbose:
            print(
                f"  it {it:3d}  pobj {pobj: .9e}  dobj {dobj: .9e}  "
                f"gap {relgap:.2e}  pres {pres:.2e}  dres {dres:.2e}  mu {mu:.2e}"
            )

        if relgap <= tol and pres <= tol and dres <= tol:
            status = STATUS_OPTIMAL
            break
        metric = max(relgap, pres, dres)
        if best is None or metric < 0.9999 * best[0]:
            best = (metric, pobj, dobj, relgap, pres, dres)
            stall = 0
        else:
            stall += 1
            if stall >= 6:
                break  # no progress; classify from the best iterate below
        # crude divergence heuristics
        if pres <= tol and pobj < -1e12 * data_scale:
            status = STATUS_UNBOUNDED
            break
        if dres <= tol and dobj > 1e12 * dual_scale and mu < tol:
            status = STATUS_INFEASIBLE
            break

        # Nesterov-Todd scaling per block
        try:
            scal = []
            for x, s in zip(xs, ss):
                if not (np.isfinite(x).all() and np.isfinite(s).all()):
                    raise np.linalg.LinAlgError("non-finite iterate")
                lx = sla.cholesky(x, lower=True)
                ls = sla.cholesky(s, lower=True)
                u, sig, vt = sla.svd(ls.T @ lx)
                rmat = lx @ vt.T * (sig**-0.5)
                lxinv = sla.solve_triangular(lx, np.eye(len(sig)), lower=True)
                rinv = (sig**0.5)[:, None] * (vt @ lxinv)
                winv = rinv.T @ rinv
                scal.append((rmat, rinv, winv, sig))
        except (np.linalg.LinAlgError, ValueError):
            status = STATUS_NUMERICAL
            break

        # Schur-like condensation H = sum_b P* (W^-1 P(.) W^-1)
        h_mat = np.zeros((q, q))
        with np.errstate(over="ignore", invalid="ignore"):
            for blk, (rmat, rinv, winv, sig) in zip(blocks, scal):
                if len(blk.ids) == 0:
                    continue
                g1 = np.matmul(winv, np.matmul(blk.fstack, winv))
                hb = np.tensordot(blk.fstack, g1, axes=([1, 2], [1, 2]))
                h_mat[np.ix_(blk.ids, blk.ids)] += hb

        kmat0 = np.zeros((q + p, q + p))
        kmat0[:q, :q] = h_mat
        if p:
            kmat0[:q, q:] = e_mat.T
            kmat0[q:, :q] = e_mat

        def factor(delta):
            if not np.isfinite(kmat0).all():
                raise np.linalg.LinAlgError("non-finite KKT matrix")
            # symmetric equilibration keeps the LU accurate when H spans
            # many orders of magnitude near convergence
            row_scale = np.abs(kmat0).max(axis=1)
            dvec = 1.0 / np.sqrt(np.maximum(row_scale, 1e-30))
            kmat = dvec[:, None] * kmat0 * dvec[None, :]
            idx = np.arange(q + p)
            kmat[idx[:q], idx[:q]] += delta
            if p:
                kmat[idx[q:], idx[q:]] -= delta
            return sla.lu_factor(kmat), dvec

        def kkt_solve(fac, t_blocks):
            # t_blocks hold the scaled complementarity targets T with
            # RC = R T R^T; working in scaled space avoids the mu^-1
            # amplification of forming W^-1 (RC - .) W^-1 directly
            lu, dvec = fac
            r1 = -rd.copy()
            for blk, (rmat, rinv, winv, sig), tm, rp in zip(
                blocks, scal, t_blocks, rp_blocks
            ):
                v = rinv.T @ tm @ rinv - winv @ rp @ winv
                blk.adjoint(v, r1)
            rhs = np.concatenate([r1, re])
            sol = dvec * sla.lu_solve(lu, dvec * rhs)
            # two refinement passes against the unregularized system
            for _ in range(2):
                sol += dvec * sla.lu_solve(lu, dvec * (rhs - kmat0 @ sol))
            dy = sol[:q]
            dz = -sol[q:]
            return dy, dz

        def expand(dy, t_blocks):
            dxs, dss = [], []
            for blk, (rmat, rinv, winv, sig), tm, rp in zip(
                blocks, scal, t_blocks, rp_blocks
            ):
                dx = rp + (blk.affine(dy) - blk.qmat)
                dx_scaled = rinv @ dx @ rinv.T
                ds = rinv.T @ (tm - dx_scaled) @ rinv
                dxs.append(_sym(dx))
                dss.append(_sym(ds))
            return dxs, dss

        try:
            # predictor: T = -lambda
            lu = factor(1e-10)
            t_aff = [-np.diag(sig) for (_, _, _, sig) in scal]
            dy_a, dz_a = kkt_solve(lu, t_aff)
            dxs_a, dss_a = expand(dy_a, t_aff)
            if not all(np.isfinite(d).all() for d in (dy_a, dz_a)):
                raise np.linalg.LinAlgError("non-finite predictor step")

            ap = min((_max_step(x, dx) for x, dx in zip(xs, dxs_a)), default=np.inf)
            ad = min((_max_step(s, ds) for s, ds in zip(ss, dss_a)), default=np.inf)
            ap, ad = min(1.0, ap), min(1.0, ad)
            mu_aff = sum(
                float(np.tensordot(x + ap * dx, s + ad * ds))
                for x, dx, s, ds in zip(xs, dxs_a, ss, dss_a)
            ) / ndim
            sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu) ** 3))

            # corrector with Mehrotra second-order term, in scaled space
            t_blocks = []
            for x, (rmat, rinv, winv, sig), dx_a, ds_a in zip(xs, scal, dxs_a, dss_a):
                dxa = rinv @ dx_a @ rinv.T
                dsa = rmat.T @ ds_a @ rmat
                cross = _sym(dxa @ dsa)
                rhsm = sigma * mu * np.eye(len(sig)) - np.diag(sig * sig) - cross
                t_blocks.append(2.0 * rhsm / (sig[:, None] + sig[None, :]))
            dy, dz = kkt_solve(lu, t_blocks)
            dxs, dss = expand(dy, t_blocks)
            if not all(np.isfinite(d).all() for d in (dy, dz)):
                raise np.linalg.LinAlgError("non-finite corrector step")
        except (np.linalg.LinAlgError, ValueError):
            # one refactorization retry with heavier regularization
            try:
                lu = factor(1e-8)
                t_aff = [-np.diag(sig) for (_, _, _, sig) in scal]
                dy, dz = kkt_solve(lu, t_aff)
                dxs, dss = expand(dy, t_aff)
                if not all(np.isfinite(d).all() for d in (dy, dz)):
                    raise np.linalg.LinAlgError("non-finite retry step")
            except (np.linalg.LinAlgError, ValueError):
                status = STATUS_NUMERICAL
                break

        ap = min((_max_step(x, dx) for x, dx in zip(xs, dxs)), default=np.inf)
        ad = min((_max_step(s, ds) for s, ds in zip(ss, dss)), default=np.inf)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if ap < 1e-10 and ad < 1e-10:
            status = STATUS_NUMERICAL
            break

        y = y + ap * dy
        z = z + ad * dz
        xs = [_sym(x + ap * dx) for x, dx in zip(xs, dxs)]
        ss = [_sym(s + ad * ds) for s, ds in zip(ss, dss)]
    else:
        iters_done = max_iter

    rp_blocks, re, rd = residuals()
    pobj, dobj, relgap, pres, dres = metrics(rp_blocks, re, rd)
    if best is not None and best[0] < max(relgap, pres, dres):
        _, pobj, dobj, relgap, pres, dres = best
    if status not in (STATUS_OPTIMAL, STATUS_UNBOUNDED, STATUS_INFEASIBLE):
        if relgap <= tol and pres <= tol and dres <= tol:
            status = STATUS_OPTIMAL
        elif max(relgap, pres, dres) <= max(1e-3, 100 * tol):
            # short of the requested tolerance but usable; degenerate moment
            # SDPs (no strictly feasible point) routinely floor out here
            status = STATUS_NEAR
        else:
            cert = _classify_rays(blocks, e_mat, e_rhs, c, y, z, ss)
            if cert is not None:
                status = cert
    return SolveResult(
        status=status,
        primal_objective=pobj,
        dual_objective=dobj,
        gap=relgap,
        iterations=iters_done,
        primal_residual=pres,
        dual_residual=dres,
        trace=history if trace else None,
        x_blocks=xs,
    )

"""SDPA sparse-format (.dat-s) writer and reader.

The exported problem is the linear-matrix-inequality form over the free
scalar variables: ``min c.x  s.t.  X = sum_i x_i F_i - F_0 >= 0`` with one
block per PSD block plus a diagonal block encoding every equality row as a
pair of opposite inequalities (the standard free-variable convention).
Values are printed with 17 significant digits so write -> read round-trips
float64 data exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .standard import SdpBlock, SdpProblem


class SdpaFormatError(ValueError):
    """Malformed .dat-s input."""


def write_sdpa(problem: SdpProblem, path) -> None:
    """Write the problem in SDPA sparse format (deterministic ordering)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sdpa_dumps(problem))


def sdpa_dumps(problem: SdpProblem) -> str:
    """Render the problem as .dat-s text."""
    neq = problem.neq
    sizes = [b.dim for b in problem.blocks]
    if neq:
        sizes.append(-2 * neq)

    # entries[v] collects (block_no, i, j, value) for variable v; key 0 is F0
    entries: dict[int, list[tuple[int, int, int, float]]] = {
        v: [] for v in range(problem.nvar + 1)
    }
    for bno, block in enumerate(problem.blocks, start=1):
        coo = block.coeffs.tocoo()
        for row, var, val in zip(coo.row, coo.col, coo.data):
            if val != 0.0:
                i = int(block.rows_i[row]) + 1
                j = int(block.rows_j[row]) + 1
                entries[var + 1].append((bno, i, j, float(val)))
        for row in range(len(block.const)):
            cv = float(block.const[row])
            if cv != 0.0:
                i = int(block.rows_i[row]) + 1
                j = int(block.rows_j[row]) + 1
                entries[0].append((bno, i, j, -cv))
    if neq:
        dblock = len(problem.blocks) + 1
        eq = problem.eq_coeffs.tocoo()
        for row, var, val in zip(eq.row, eq.col, eq.data):
            if val != 0.0:
                pos_p = 2 * int(row) + 1
                entries[var + 1].append((dblock, pos_p, pos_p, float(val)))
                entries[var + 1].append((dblock, pos_p + 1, pos_p + 1, -float(val)))
        for row, rv in enumerate(problem.eq_rhs):
            rv = float(rv)
            if rv != 0.0:
                pos_p = 2 * row + 1
                entries[0].append((dblock, pos_p, pos_p, rv))
                entries[0].append((dblock, pos_p + 1, pos_p + 1, -rv))

    lines = ['"exported block moment relaxation']
    lines.append(f"{problem.nvar}")
    lines.append(f"{len(sizes)}")
    lines.append(" ".join(str(s) for s in sizes))
    lines.append(" ".join(f"{v:.17g}" for v in problem.obj))
    for matno in range(problem.nvar + 1):
        for bno, i, j, val in sorted(entries[matno]):
            lines.append(f"{matno} {bno} {i} {j} {val:.17g}")
    return "\n".join(lines) + "\n"


def _split_blocks(sizes: list[int]):
    kinds = []
    for s in sizes:
        if s == 0:
            raise SdpaFormatError("zero block size")
        kinds.append(("psd", s) if s > 0 else ("diag", -s))
    return kinds


def read_sdpa(path) -> SdpProblem:
    """Parse a .dat-s file back into an SdpProblem (inverse of write_sdpa)."""
    with open(path, encoding="utf-8") as fh:
        return sdpa_loads(fh.read())


def sdpa_loads(text: str) -> SdpProblem:
    """Parse .dat-s text (inverse of sdpa_dumps on its image).

    Comment lines starting with '"' or '*' are tolerated at the top; braces
    and commas in the block-size line are tolerated.  Paired opposite
    diagonal entries are folded back into equality rows; unpaired ones
    become 1x1 blocks.
    """
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and lines[pos].lstrip()[:1] in ('"', "*"):
        pos += 1

    def next_line() -> str:
        nonlocal pos
        while pos < len(lines):
            ln = lines[pos].strip()
            pos += 1
            if ln:
                return ln
        raise SdpaFormatError(f"unexpected end of file at line {pos}")

    try:
        nvar = int(next_line().split()[0])
        nblocks = int(next_line().split()[0])
        size_line = next_line()
        for ch in "{}(),":
            size_line = size_line.replace(ch, " ")
        sizes = [int(tok) for tok in size_line.split()]
        if len(sizes) != nblocks:
            raise SdpaFormatError(
                f"line {pos}: expected {nblocks} block sizes, found {len(sizes)}"
            )
        obj = np.array([float(tok) for tok in next_line().replace(",", " ").split()])
        if obj.size != nvar:
            raise SdpaFormatError(
                f"line {pos}: objective vector has {obj.size} entries, expected {nvar}"
            )
    except (ValueError, IndexError) as exc:
        raise SdpaFormatError(f"line {pos}: {exc}") from exc

    kinds = _split_blocks(sizes)
    # raw[bno] maps (i, j) -> (coeff dict var->val, f0 value)
    raw: list[dict[tuple[int, int], tuple[dict[int, float], float]]] = [
        {} for _ in kinds
    ]
    for ln_no in range(pos, len(lines)):
        ln = lines[ln_no].strip()
        if not ln:
            continue
        toks = ln.split()
        if len(toks) != 5:
            raise SdpaFormatError(f"line {ln_no + 1}: expected 5 fields, got {len(toks)}")
        try:
            matno, bno, i, j, val = int(toks[0]), int(toks[1]), int(toks[2]), int(toks[3]), float(toks[4])
        except ValueError as exc:
            raise SdpaFormatError(f"line {ln_no + 1}: {exc}") from exc
        if not (0 <= matno <= nvar and 1 <= bno <= nblocks):
            raise SdpaFormatError(f"line {ln_no + 1}: matrix/block number out of range")
        kind, dim = kinds[bno - 1]
        if kind == "diag" and i != j:
            raise SdpaFormatError(f"line {ln_no + 1}: off-diagonal entry in diagonal block")
        if not (1 <= i <= j <= dim):
            raise SdpaFormatError(f"line {ln_no + 1}: entry ({i},{j}) outside block of size {dim}")
        cell = raw[bno - 1].setdefault((i - 1, j - 1), ({}, 0.0))
        if matno == 0:
            raw[bno - 1][(i - 1, j - 1)] = (cell[0], cell[1] + val)
        else:
            cell[0][matno - 1] = cell[0].get(matno - 1, 0.0) + val

    blocks: list[SdpBlock] = []
    eq_rows: list[dict[int, float]] = []
    eq_rhs: list[float] = []
    for (kind, dim), data in zip(kinds, raw):
        if kind == "psd":
            ri, rj = SdpBlock.dense_entry_order(dim)
            rows, cols, vals = [], [], []
            const = np.zeros(len(ri))
            cell_of = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(ri, rj))}
            for (i, j), (coeffs, f0) in data.items():
                k = cell_of[(i, j)]
                const[k] = -f0
                for var, val in coeffs.items():
                    rows.append(k)
                    cols.append(var)
                    vals.append(val)
            blocks.append(
                SdpBlock(
                    dim,
                    ri,
                    rj,
                    sp.csr_matrix((vals, (rows, cols)), shape=(len(ri), nvar)),
                    const,
                )
            )
        else:
            def cell(pos_i):
                coeffs, f0 = data.get((pos_i, pos_i), ({}, 0.0))
                return dict(coeffs), f0

            pos_i = 0
            while pos_i < dim:
                coeffs, f0 = cell(pos_i)
                if pos_i + 1 < dim:
                    coeffs2, f02 = cell(pos_i + 1)
                    neg = {v: -c for v, c in coeffs.items()}
                    if coeffs and coeffs2 == neg and f02 == -f0:
                        eq_rows.append(coeffs)
                        eq_rhs.append(f0)
                        pos_i += 2
                        continue
                rows = [0] * len(coeffs)
                blocks.append(
                    SdpBlock(
                        1,
                        np.zeros(1, dtype=np.int64),
                        np.zeros(1, dtype=np.int64),
                        sp.csr_matrix(
                            (list(coeffs.values()), (rows, list(coeffs.keys()))),
                            shape=(1, nvar),
                        ),
                        np.array([-f0]),
                    )
                )
                pos_i += 1

    rows, cols, vals = [], [], []
    for r, coeffs in enumerate(eq_rows):
        for var, val in coeffs.items():
            rows.append(r)
            cols.append(var)
            vals.append(val)
    eq = sp.csr_matrix((vals, (rows, cols)), shape=(len(eq_rows), nvar))
    return SdpProblem(
        nvar=nvar,
        blocks=blocks,
        eq_coeffs=eq,
        eq_rhs=np.array(eq_rhs),
        obj=obj,
    )

"""Multivariate polynomials as supports and coefficients, and POP instances.

A monomial is an exponent vector ``alpha`` (tuple of non-negative ints, one
entry per variable); a polynomial is a list of distinct exponent vectors
(``supp``) with matching real coefficients (``coe``).  All supports are kept
sorted in graded lexicographic order so every downstream structure is
reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Exponent = tuple[int, ...]


class PopFormatError(ValueError):
    """Raised when a problem file or raw term list is malformed."""


def grlex_key(alpha: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort key for graded lexicographic monomial order."""
    return (sum(alpha), tuple(alpha))


def total_degree(alpha: Sequence[int]) -> int:
    return sum(alpha)


def reduce_binary(alpha: Sequence[int], nb: int) -> Exponent:
    """Reduce the first ``nb`` entries mod 2 (x_i^2 = 1 for binary variables)."""
    if nb <= 0:
        return tuple(alpha)
    return tuple(a % 2 if i < nb else a for i, a in enumerate(alpha))


@dataclass(frozen=True)
class Polynomial:
    """A polynomial stored as parallel ``supp``/``coe`` arrays.

    Instances are assumed canonical: distinct exponents, no zero
    coefficients, supp sorted graded-lex.  Use :func:`canonicalize` to build
    one from raw terms.
    """

    n: int
    supp: tuple[Exponent, ...]
    coe: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.supp)

    def terms(self) -> Iterable[tuple[Exponent, float]]:
        return zip(self.supp, self.coe)

    def evaluate(self, x: Sequence[float]) -> float:
        if len(x) != self.n:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.n}")
        total = 0.0
        for alpha, c in zip(self.supp, self.coe):
            term = c
            for xi, ai in zip(x, alpha):
                if ai:
                    term *= xi**ai
            total += term
        return total


def canonicalize(n: int, terms: Iterable[tuple[Sequence[int], float]]) -> Polynomial:
    """Merge duplicate exponents, drop zero terms, sort supp graded-lex."""
    acc: dict[Exponent, float] = {}
    for alpha, c in terms:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != n:
            raise PopFormatError(
                f"exponent {alpha} has length {len(alpha)}, expected {n}"
            )
        if any(a < 0 for a in alpha):
            raise PopFormatError(f"negative exponent in {alpha}")
        acc[alpha] = acc.get(alpha, 0.0) + float(c)
    supp = sorted((a for a, c in acc.items() if c != 0.0), key=grlex_key)
    return Polynomial(n, tuple(supp), tuple(acc[a] for a in supp))


def degree(p: Polynomial) -> int:
    """Total degree; 0 for the empty or constant polynomial."""
    return max((total_degree(a) for a in p.supp), default=0)


def _reduce_poly(p: Polynomial, nb: int) -> Polynomial:
    if nb <= 0:
        return p
    return canonicalize(p.n, ((reduce_binary(a, nb), c) for a, c in p.terms()))


@dataclass(frozen=True)
class PopInstance:
    """A polynomial optimization problem: min f over g_j >= 0, h_j = 0.

    The first ``nb`` variables are binary (x_i^2 = 1); all stored supports
    are binary-reduced when nb > 0.
    """

    n: int
    f: Polynomial
    g: tuple[Polynomial, ...] = ()
    h: tuple[Polynomial, ...] = ()
    nb: int = 0

    def __post_init__(self):
        if not 0 <= self.nb <= self.n:
            raise PopFormatError(f"nb={self.nb} must lie in [0, n={self.n}]")
        for p in (self.f, *self.g, *self.h):
            if p.n != self.n:
                raise PopFormatError(
                    f"polynomial over {p.n} variables in a {self.n}-variable problem"
                )
        if self.nb > 0:
            object.__setattr__(self, "f", _reduce_poly(self.f, self.nb))
            object.__setattr__(
                self, "g", tuple(_reduce_poly(p, self.nb) for p in self.g)
            )
            object.__setattr__(
                self, "h", tuple(_reduce_poly(p, self.nb) for p in self.h)
            )

    @property
    def constraints(self) -> tuple[Polynomial, ...]:
        return self.g + self.h


@dataclass(frozen=True)
class HalfDegrees:
    """Per-constraint half-degrees d_j and the minimum relaxation order."""

    d_ineq: tuple[int, ...]
    d_eq: tuple[int, ...]
    d_min: int


def half_degrees(pop: PopInstance) -> HalfDegrees:
    """d_j = ceil(deg(g_j)/2) per constraint; d_min = max over f and all g, h."""
    d_ineq = tuple(-(-degree(p) // 2) for p in pop.g)
    d_eq = tuple(-(-degree(p) // 2) for p in pop.h)
    d_min = max((-(-degree(pop.f) // 2), *d_ineq, *d_eq), default=0)
    return HalfDegrees(d_ineq, d_eq, max(d_min, 0))


def support_of(pop: PopInstance) -> set[Exponent]:
    """Union of the supports of f and of every constraint polynomial."""
    out: set[Exponent] = set(pop.f.supp)
    for p in pop.constraints:
        out.update(p.supp)
    return out


def variables_used(pop: PopInstance) -> set[int]:
    """Indices of variables appearing with nonzero exponent anywhere."""
    used: set[int] = set()
    for alpha in support_of(pop):
        used.update(i for i, a in enumerate(alpha) if a)
    return used


# ---------------------------------------------------------------------------
# Problem file format (JSON)
# ---------------------------------------------------------------------------
#
# {"n": int, "nb": int, "format": "dense" | "index",
#  "objective": {"supp": [[...], ...], "coe": [...]},
#  "ineq": [poly, ...], "eq": [poly, ...]}
#
# "dense" supp rows are length-n exponent vectors; "index" rows list 1-based
# variable indices with repetition ([1, 2, 2] means x1*x2^2, [] means 1).


def _exponent_from_row(row, n: int, fmt: str, where: str) -> tuple[int, ...]:
    if not isinstance(row, list) or not all(isinstance(v, int) for v in row):
        raise PopFormatError(f"{where}: supp rows must be lists of integers")
    if fmt == "dense":
        if len(row) != n:
            raise PopFormatError(
                f"{where}: dense exponent row has length {len(row)}, expected {n}"
            )
        if any(v < 0 for v in row):
            raise PopFormatError(f"{where}: negative exponent {row}")
        return tuple(row)
    alpha = [0] * n
    for idx in row:
        if not 1 <= idx <= n:
            raise PopFormatError(
                f"{where}: variable index {idx} outside 1..{n}"
            )
        alpha[idx - 1] += 1
    return tuple(alpha)


def _poly_from_data(data, n: int, fmt: str, where: str) -> Polynomial:
    if not isinstance(data, dict) or "supp" not in data or "coe" not in data:
        raise PopFormatError(f"{where}: expected an object with 'supp' and 'coe'")
    supp, coe = data["supp"], data["coe"]
    if not isinstance(supp, list) or not isinstance(coe, list):
        raise PopFormatError(f"{where}: 'supp' and 'coe' must be arrays")
    if len(supp) != len(coe):
        raise PopFormatError(
            f"{where}: {len(supp)} supp rows but {len(coe)} coefficients"
        )
    terms = []
    for i, (row, c) in enumerate(zip(supp, coe)):
        if not isinstance(c, (int, float)) or isinstance(c, bool):
            raise PopFormatError(f"{where}.coe[{i}]: coefficient must be numeric")
        terms.append((_exponent_from_row(row, n, fmt, f"{where}.supp[{i}]"), c))
    return canonicalize(n, terms)


def pop_from_data(data: dict, numeq: int = 0) -> PopInstance:
    """Build a canonical PopInstance from decoded problem-file data.

    ``numeq`` > 0 moves that many trailing entries of "ineq" into the
    equality list (only valid when "eq" is absent or empty).
    """
    if not isinstance(data, dict):
        raise PopFormatError("problem file must contain a JSON object")
    if "n" not in data or not isinstance(data["n"], int) or data["n"] < 1:
        raise PopFormatError("'n' must be a positive integer")
    n = data["n"]
    nb = data.get("nb", 0)
    if not isinstance(nb, int) or not 0 <= nb <= n:
        raise PopFormatError(f"'nb' must be an integer in [0, {n}]")
    fmt = data.get("format", "dense")
    if fmt not in ("dense", "index"):
        raise PopFormatError(f"unknown supp format {fmt!r} (want 'dense' or 'index')")
    if "objective" not in data:
        raise PopFormatError("missing 'objective'")
    f = _poly_from_data(data["objective"], n, fmt, "objective")
    ineq = data.get("ineq", [])
    eq = data.get("eq", [])
    if not isinstance(ineq, list) or not isinstance(eq, list):
        raise PopFormatError("'ineq' and 'eq' must be arrays of polynomials")
    g = [_poly_from_data(p, n, fmt, f"ineq[{i}]") for i, p in enumerate(ineq)]
    h = [_poly_from_data(p, n, fmt, f"eq[{i}]") for i, p in enumerate(eq)]
    if numeq:
        if h:
            raise PopFormatError("numeq given but the file already has 'eq' entries")
        if numeq < 0 or numeq > len(g):
            raise PopFormatError(
                f"numeq={numeq} but only {len(g)} constraints are given"
            )
        g, h = g[: len(g) - numeq], g[len(g) - numeq :]
    return PopInstance(n, f, tuple(g), tuple(h), nb)


def parse_pop(text: str, numeq: int = 0) -> PopInstance:
    """Parse a UTF-8 JSON problem file into a canonical PopInstance."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PopFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return pop_from_data(data, numeq=numeq)


def load_pop(path, numeq: int = 0) -> PopInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_pop(fh.read(), numeq=numeq)


def _poly_to_data(p: Polynomial) -> dict:
    return {"supp": [list(a) for a in p.supp], "coe": list(p.coe)}


def serialize_pop(pop: PopInstance) -> str:
    """Serialize to the dense problem-file format (inverse of parse_pop)."""
    data = {
        "n": pop.n,
        "nb": pop.nb,
        "format": "dense",
        "objective": _poly_to_data(pop.f),
        "ineq": [_poly_to_data(p) for p in pop.g],
        "eq": [_poly_to_data(p) for p in pop.h],
    }
    return json.dumps(data, indent=1)

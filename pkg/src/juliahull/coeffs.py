"""Tables of the squared Jacobi coefficients for the equilibrium measure of
the real Julia set of z^2 - lambda.

With a_0 = 0 the squared coefficients obey two closed relations: adjacent
pairs sum to lambda, and the odd-even product at doubled index reproduces
the parent entry.  Running them forward gives the whole half-line table,
exactly in rational arithmetic and (via the same recursion) in float64 to
much larger depth.  Dyadic-limit values a_kappa are read off at the
integer representative kappa mod 2^M, with an empirical error bound taken
across coarser truncations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic import DyadicInt

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

__all__ = [
    "CoeffTable",
    "DyadicCoeff",
    "RegimeError",
    "TableCorruption",
    "PrecisionMismatch",
    "build_table",
    "cached_table",
    "a_at",
    "window_a_values",
    "check_relations",
    "verify_parity_bounds",
    "fn_lower_bound",
    "limit_periodicity_sup",
]

DEFAULT_EXACT_DEPTH = 12


class RegimeError(ValueError):
    """lambda is outside the regime the table construction assumes."""


class TableCorruption(RuntimeError):
    """A structural identity of the table failed; the build is corrupt."""


class PrecisionMismatch(ValueError):
    """A dyadic argument carries more digits than the table resolves."""


def _fill_sq(lam, out):
    # a^2 pair recursion: even entry divides the parent, odd completes to lam
    out[0] = 0.0
    out[1] = lam
    n = out.shape[0]
    for k in range((n - 1) // 2):
        i = 2 * k + 2
        out[i] = out[k + 1] / out[2 * k + 1]
        if i + 1 < n:
            out[i + 1] = lam - out[i]


if njit is not None:
    _fill_sq_jit = njit(cache=True)(_fill_sq)
else:  # pragma: no cover
    _fill_sq_jit = _fill_sq


def _exact_sq(lam: Fraction, rows: int) -> list:
    sq = [Fraction(0)] * rows
    if rows > 1:
        sq[1] = lam
    for k in range((rows - 1) // 2):
        i = 2 * k + 2
        sq[i] = sq[k + 1] / sq[2 * k + 1]
        if i + 1 < rows:
            sq[i + 1] = lam - sq[i]
    return sq


@dataclass
class CoeffTable:
    """Squared-coefficient table: float64 to depth M, exact to a smaller depth."""

    lam: float
    lam_exact: Fraction | None
    depth: int
    exact_depth: int | None
    a_sq_float: np.ndarray
    a_sq_exact: list | None

    @property
    def rows(self) -> int:
        return 1 << self.depth

    @property
    def is_exact(self) -> bool:
        return self.a_sq_exact is not None

    def a_sq(self, n: int) -> float:
        return float(self.a_sq_float[n])

    def a(self, n: int) -> float:
        return math.sqrt(self.a_sq_float[n])

    def with_fault(self, index: int = 100, bump: str = "1/7") -> "CoeffTable":
        """Diagnostic copy with one entry perturbed (fault injection)."""
        fl = self.a_sq_float.copy()
        fl[index] += float(Fraction(bump))
        ex = None
        if self.a_sq_exact is not None:
            ex = list(self.a_sq_exact)
            if index < len(ex):
                ex[index] += Fraction(bump)
        return CoeffTable(self.lam, self.lam_exact, self.depth,
                          self.exact_depth, fl, ex)


@dataclass(frozen=True)
class DyadicCoeff:
    """A coefficient value at a dyadic point, with an empirical error bound."""

    value: float
    error_bound: float
    representative: int


def build_table(lam, depth: int = 24, exact_depth: int | None = None,
                allow_small_lambda: bool = False) -> CoeffTable:
    """Build the coefficient table for n < 2^depth.

    ``lam`` may be a Fraction, int, or rational string (exact path), or a
    float (double precision throughout).  Exact rows are kept for
    n < 2^exact_depth; the default caps that at 2^12 because numerators
    grow linearly in bit size with the row index.
    """
    lam_exact: Fraction | None
    if isinstance(lam, float):
        lam_exact = None
        lam_f = lam
    else:
        lam_exact = Fraction(lam)
        lam_f = float(lam_exact)

    if lam_f <= 2.0:
        raise RegimeError(f"lambda = {lam_f} <= 2: the Julia set is not a real Cantor set")
    if lam_f <= 3.0 and not allow_small_lambda:
        raise RegimeError(
            f"lambda = {lam_f} <= 3 is outside the limit-periodic regime "
            "(pass allow_small_lambda to explore anyway)"
        )
    if depth < 1:
        raise ValueError("depth must be >= 1")

    if exact_depth is None:
        exact_depth = min(depth, DEFAULT_EXACT_DEPTH)
    exact_depth = min(exact_depth, depth)

    fl = np.empty(1 << depth, dtype=np.float64)
    _fill_sq_jit(lam_f, fl)

    ex = None
    if lam_exact is not None:
        ex = _exact_sq(lam_exact, 1 << exact_depth)

    return CoeffTable(lam=lam_f, lam_exact=lam_exact, depth=depth,
                      exact_depth=(exact_depth if ex is not None else None),
                      a_sq_float=fl, a_sq_exact=ex)


_CACHE: dict = {}


def cached_table(lam, depth: int = 24, exact_depth: int | None = None,
                 allow_small_lambda: bool = False) -> CoeffTable:
    """Memoized ``build_table``; tables are immutable by convention."""
    if isinstance(lam, float):
        key = ("f", lam, depth, exact_depth)
    else:
        key = ("q", str(Fraction(lam)), depth, exact_depth)
    if key not in _CACHE:
        _CACHE[key] = build_table(lam, depth, exact_depth, allow_small_lambda)
    return _CACHE[key]


def a_at(table: CoeffTable, d: DyadicInt) -> DyadicCoeff:
    """Coefficient at a dyadic point: the value at its integer representative.

    The error bound is the spread against the three next-coarser
    truncations; it is empirical, not a rigorous modulus of continuity.
    """
    if d.precision > table.depth:
        raise PrecisionMismatch(
            f"dyadic precision {d.precision} exceeds table depth {table.depth}"
        )
    k = d.to_representative()
    val = math.sqrt(table.a_sq_float[k])
    errs = [
        abs(math.sqrt(table.a_sq_float[k & ((1 << m) - 1)]) - val)
        for m in range(max(1, d.precision - 3), d.precision)
    ]
    return DyadicCoeff(value=val, error_bound=max(errs, default=0.0),
                       representative=k)


def window_a_values(table: CoeffTable, kappa: DyadicInt, offsets) -> np.ndarray:
    """Coefficients a_{kappa+n} for an array of integer offsets n.

    kappa is truncated to the table depth if necessary; offsets wrap mod
    2^precision, which is exactly dyadic addition on representatives.
    """
    p = min(kappa.precision, table.depth)
    k0 = kappa.truncate(p).to_representative()
    reps = (k0 + np.asarray(offsets, dtype=np.int64)) % (1 << p)
    return np.sqrt(table.a_sq_float[reps])


@dataclass(frozen=True)
class RelationsReport:
    rows_checked: int
    exact: bool
    sum_ok: bool
    product_ok: bool
    max_residual: float
    spot_a_sq: dict


def check_relations(table: CoeffTable, float_tol: float = 1e-12) -> RelationsReport:
    """Verify both pair relations on every table row.

    Exact tables are checked as rational identities (zero tolerance);
    float-only tables against ``float_tol``.
    """
    if table.is_exact:
        sq = table.a_sq_exact
        lam = table.lam_exact
        rows = len(sq)
        sum_ok = all(sq[2 * k] + sq[2 * k + 1] == lam for k in range(rows // 2))
        product_ok = all(
            sq[2 * k + 1] * sq[2 * k + 2] == sq[k + 1]
            for k in range((rows - 2) // 2)
        )
        spots = {n: sq[n] for n in (1, 2, 3, 4, 5, 6, 7) if n < rows}
        return RelationsReport(rows_checked=rows, exact=True, sum_ok=sum_ok,
                               product_ok=product_ok,
                               max_residual=0.0 if (sum_ok and product_ok) else math.inf,
                               spot_a_sq=spots)
    sq = table.a_sq_float
    lam = table.lam
    k = np.arange(sq.size // 2)
    r1 = np.abs(sq[2 * k] + sq[2 * k + 1] - lam).max()
    k2 = np.arange((sq.size - 2) // 2)
    r2 = np.abs(sq[2 * k2 + 1] * sq[2 * k2 + 2] - sq[k2 + 1]).max()
    resid = float(max(r1, r2))
    ok = resid < float_tol
    spots = {n: float(sq[n]) for n in (1, 2, 3, 4, 5, 6, 7) if n < sq.size}
    return RelationsReport(rows_checked=sq.size, exact=False, sum_ok=ok,
                           product_ok=ok, max_residual=resid, spot_a_sq=spots)


@dataclass(frozen=True)
class ParityReport:
    rows_checked: int
    max_even_sq: float
    argmax_even: int
    min_odd_sq: float
    argmin_odd: int
    max_sq: float


def verify_parity_bounds(table: CoeffTable) -> ParityReport:
    """Assert a^2 <= 1 at even index >= 2, a^2 >= lambda-1 at odd index.

    Raises TableCorruption on violation (these bounds are theorems for a
    correctly built table).  Returns the extremal entries.
    """
    if table.is_exact:
        sq = table.a_sq_exact
        lam = table.lam_exact
        one = Fraction(1)
    else:
        sq = table.a_sq_float
        lam = table.lam
        one = 1.0 + 1e-12
    rows = len(sq)
    evens = range(2, rows, 2)
    odds = range(1, rows, 2)
    max_even_n = max(evens, key=lambda n: sq[n])
    min_odd_n = min(odds, key=lambda n: sq[n])
    if sq[max_even_n] > one:
        raise TableCorruption(f"a^2_{max_even_n} = {sq[max_even_n]} > 1 at even index")
    if sq[min_odd_n] < lam - one:
        raise TableCorruption(f"a^2_{min_odd_n} = {sq[min_odd_n]} < lambda-1 at odd index")
    max_all = max(sq[1:rows], default=0)
    if max_all > lam:
        raise TableCorruption("a^2 > lambda somewhere in the table")
    return ParityReport(rows_checked=rows,
                        max_even_sq=float(sq[max_even_n]), argmax_even=max_even_n,
                        min_odd_sq=float(sq[min_odd_n]), argmin_odd=min_odd_n,
                        max_sq=float(max_all))


@dataclass(frozen=True)
class FnBoundReport:
    n_max_run: int
    samples: int
    window: int
    c3: float
    min_a_sq: float
    min_margin: float
    all_above: bool
    induction_min_margin: float
    induction_ok: bool


def fn_lower_bound(table: CoeffTable, n_max_run: int, samples: int,
                   seed: int = 0, window: int | None = None,
                   slack: float = 1e-9) -> FnBoundReport:
    """Sampled check of a^2 >= (lambda-1)/lambda^N on F_N windows.

    Also exercises the doubling induction a^2_{2^(j+1) k'} >= (lambda-1)/lambda^(j+1)
    for random odd k'.
    """
    from .dyadic import sample_f_window

    w = window if window is not None else min(table.depth, 24)
    rng = np.random.default_rng(seed)
    c3 = (table.lam - 1.0) / table.lam ** n_max_run
    reps = np.empty(samples, dtype=np.int64)
    for i in range(samples):
        reps[i] = sample_f_window(rng, n_max_run, w).to_representative()
    vals = table.a_sq_float[reps]
    min_a_sq = float(vals.min())
    min_margin = min_a_sq - c3

    # induction step on integers: odd k', then divide by a^2 at odd indices
    ind_margins = []
    for _ in range(min(samples, 200)):
        kp = int(rng.integers(0, 1 << (table.depth - n_max_run - 1))) | 1
        for j in range(1, n_max_run + 1):
            ind_margins.append(
                float(table.a_sq_float[(kp << j) % (1 << table.depth)])
                - (table.lam - 1.0) / table.lam ** j
            )
    ind_min = min(ind_margins)
    return FnBoundReport(n_max_run=n_max_run, samples=samples, window=w,
                         c3=c3, min_a_sq=min_a_sq, min_margin=float(min_margin),
                         all_above=bool(min_margin >= -slack),
                         induction_min_margin=ind_min,
                         induction_ok=bool(ind_min >= -slack))


def limit_periodicity_sup(table: CoeffTable, k: int, n: int) -> float:
    """sup over s of |a_{k + s 2^n} - a_k| across the float table."""
    step = 1 << n
    vals = np.sqrt(table.a_sq_float[k::step])
    return float(np.abs(vals - vals[0]).max())

"""Finite windows of the hull operators and their spectral matrix measures.

A window is an open-boundary symmetric tridiagonal matrix with zero
diagonal whose off-diagonal entries come from the coefficient table at
dyadic offsets of the hull point.  Spectral matrix measures are read off
a full tridiagonal eigendecomposition at the two distinguished sites -1
and 0; identity checks pair truncations at different hull points and are
probed in the middle quarter of the window, where boundary contamination
is exponentially small off the real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from . import coeffs as coeffs_mod
from . import ruelle
from .coeffs import CoeffTable
from .dyadic import DyadicInt, PrecisionExhausted, double, modified_shift
from .dynamics import MapParams

__all__ = [
    "TruncatedJacobi",
    "SpectralMeasureApprox",
    "ResolventSample",
    "build_truncation",
    "spectral_measure",
    "resolvent_entry",
    "check_V_identity",
    "check_renormalization",
    "reflection_check",
    "atom_probe",
    "implanted_atom_selftest",
    "jminus_measure",
    "jminus_renorm_check",
    "h0_trace_integral",
]

MIN_NEGATIVE_DIGITS = 24  # dyadic depth used for windows that cross index 0


@dataclass(frozen=True)
class TruncatedJacobi:
    """Zero-diagonal tridiagonal window of a hull operator on sites -N..N."""

    kappa: DyadicInt
    half_width: int
    offdiag: np.ndarray  # offdiag[i] couples sites -N+i and -N+i+1
    lam: float

    @property
    def n_sites(self) -> int:
        return 2 * self.half_width + 1

    def site_index(self, n: int) -> int:
        return n + self.half_width


def build_truncation(kappa: DyadicInt, half_width: int, table: CoeffTable) -> TruncatedJacobi:
    """Window of the hull operator at kappa with the given half-width."""
    usable = min(kappa.precision, table.depth)
    if (1 << usable) <= 2 * half_width:
        raise PrecisionExhausted(
            f"window of half-width {half_width} exceeds dyadic precision {usable}"
        )
    kap = kappa.truncate(usable)
    offsets = np.arange(-half_width + 1, half_width + 1)
    offd = coeffs_mod.window_a_values(table, kap, offsets)
    return TruncatedJacobi(kappa=kap, half_width=half_width,
                           offdiag=offd, lam=table.lam)


@dataclass(frozen=True)
class SpectralMeasureApprox:
    """Point-mass approximation of the 2x2 spectral measure at sites -1, 0."""

    xs: np.ndarray        # atom locations, ascending
    weights: np.ndarray   # shape (n_atoms, 2, 2), PSD rank-one blocks
    lam: float

    @property
    def n_atoms(self) -> int:
        return self.xs.size

    def total_weight(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def moment(self, m: int) -> np.ndarray:
        return np.einsum("x,xij->ij", self.xs ** m, self.weights)

    def trace_masses(self) -> np.ndarray:
        return self.weights[:, 0, 0] + self.weights[:, 1, 1]

    def ball_mass(self, center: float, radius: float) -> np.ndarray:
        sel = np.abs(self.xs - center) <= radius
        return self.weights[sel].sum(axis=0)

    def trace_pair(self, f) -> float:
        """Integral of a scalar function against the trace measure."""
        return float(np.sum(f(self.xs) * self.trace_masses()))


def _eigen_measure(diag: np.ndarray, offdiag: np.ndarray, rows: tuple):
    """Eigendecomposition of a tridiagonal matrix; weights from chosen rows."""
    xs, vecs = eigh_tridiagonal(diag, offdiag)
    comp = vecs[list(rows), :]          # (len(rows), n)
    w = np.einsum("ix,jx->xij", comp, comp)
    return xs, w


def spectral_measure(j: TruncatedJacobi) -> SpectralMeasureApprox:
    n = j.n_sites
    rows = (j.site_index(-1), j.site_index(0))
    xs, w = _eigen_measure(np.zeros(n), j.offdiag, rows)
    return SpectralMeasureApprox(xs=xs, weights=w, lam=j.lam)


def _resolvent_columns(offdiag: np.ndarray, diag: np.ndarray, z: complex,
                       col_sites) -> np.ndarray:
    """Columns of (J - z)^(-1) for unit vectors at the given site indices."""
    n = diag.size
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = offdiag
    ab[1, :] = diag - z
    ab[2, :-1] = offdiag
    rhs = np.zeros((n, len(col_sites)), dtype=complex)
    for c, s in enumerate(col_sites):
        rhs[s, c] = 1.0
    return solve_banded((1, 1), ab, rhs)


@dataclass(frozen=True)
class ResolventSample:
    z: complex
    m: np.ndarray  # 2x2 complex window of the resolvent at sites -1, 0

    def herglotz_defect(self) -> float:
        """How far (m - m*)/(2i) is from PSD; <= 0 means exactly Herglotz."""
        im = (self.m - self.m.conj().T) / 2j
        return float(-np.linalg.eigvalsh(im).min())


def resolvent_entry(j: TruncatedJacobi, z: complex,
                    eta_min: float = 1e-8) -> ResolventSample:
    params = MapParams(j.lam)
    if abs(z.imag) < eta_min and abs(z.real) <= params.xi:
        raise ValueError(
            f"z = {z} too close to the real axis inside [-xi, xi]"
        )
    rows = (j.site_index(-1), j.site_index(0))
    cols = _resolvent_columns(j.offdiag, np.zeros(j.n_sites), z, rows)
    m = np.array([[cols[rows[0], 0], cols[rows[0], 1]],
                  [cols[rows[1], 0], cols[rows[1], 1]]])
    return ResolventSample(z=z, m=m)


def _probe_indices(half_width: int) -> list:
    """Deterministic probe set within the middle quarter of the window."""
    quarter = half_width // 4
    raw = {0, 1, -1, 2, -2, quarter // 2, -(quarter // 2), quarter, -quarter}
    return sorted(i for i in raw if abs(i) <= quarter)


@dataclass(frozen=True)
class VIdentityReport:
    kappa_digits: str
    z: complex
    half_width: int
    residual: float
    n_probes: int


def check_V_identity(kappa: DyadicInt, z: complex, half_width: int,
                     table: CoeffTable, probes=None) -> VIdentityReport:
    """Even-site compression of the doubled-point resolvent against the
    rescaled resolvent at the original point.

    ``probes`` fixes the observed entries; when comparing residuals across
    window sizes, pass the probe set of the smallest window so the same
    entries are measured everywhere.
    """
    j2 = build_truncation(double(kappa), 2 * half_width, table)
    j1 = build_truncation(kappa, half_width, table)
    params = MapParams(table.lam)
    tz = z * z - table.lam
    half_tprime = z
    if probes is None:
        probes = _probe_indices(half_width)
    if max(abs(i) for i in probes) > half_width // 4:
        raise ValueError("probe set leaves the middle quarter of the window")

    cols2 = _resolvent_columns(j2.offdiag, np.zeros(j2.n_sites), z,
                               [j2.site_index(2 * p) for p in probes])
    cols1 = _resolvent_columns(j1.offdiag, np.zeros(j1.n_sites), tz,
                               [j1.site_index(p) for p in probes])
    resid = 0.0
    for cj, pj in enumerate(probes):
        for pi in probes:
            lhs = cols2[j2.site_index(2 * pi), cj]
            rhs = half_tprime * cols1[j1.site_index(pi), cj]
            resid = max(resid, abs(lhs - rhs))
    return VIdentityReport(kappa_digits=kappa.digit_string(), z=z,
                           half_width=half_width, residual=float(resid),
                           n_probes=len(probes))


@dataclass(frozen=True)
class RenormReport:
    kappa_digits: str
    half_width: int
    degree: int
    max_residual: float
    residuals: dict  # (m, p, q) -> residual


def check_renormalization(kappa: DyadicInt, degree: int, half_width: int,
                          table: CoeffTable) -> RenormReport:
    """Pairing form of the one-step renormalization of spectral measures:
    monomial matrix test functions against the measure at kappa versus the
    transfer-operator image against the measure at the shifted point."""
    wt = ruelle.weight(kappa, table)
    meas_k = spectral_measure(build_truncation(kappa, half_width, table))
    meas_s = spectral_measure(build_truncation(modified_shift(kappa),
                                               half_width, table))
    xs = meas_s.xs
    y = np.sqrt(xs + table.lam)
    p_plus = wt.eval_many(y)      # (n, 2, 2)
    p_minus = wt.eval_many(-y)
    w_s = meas_s.weights

    residuals = {}
    worst = 0.0
    for m in range(degree + 1):
        ym = y ** m
        sgn = (-1.0) ** m
        xm_k = meas_k.xs ** m
        for p in range(2):
            for q in range(2):
                lhs = float(np.sum(xm_k * meas_k.weights[:, q, p]))
                rhs = 0.5 * float(
                    np.einsum("j,ja,jab,jb->", ym, p_plus[:, :, p], w_s, p_plus[:, :, q])
                    + sgn * np.einsum("j,ja,jab,jb->", ym, p_minus[:, :, p], w_s, p_minus[:, :, q])
                )
                r = abs(lhs - rhs)
                residuals[(m, p, q)] = r
                worst = max(worst, r)
    return RenormReport(kappa_digits=kappa.digit_string(),
                        half_width=half_width, degree=degree,
                        max_residual=float(worst), residuals=residuals)


def reflection_check(kappa: DyadicInt, half_width: int, table: CoeffTable,
                     degree: int = 8) -> float:
    """Moment comparison of the index-reflected window against the
    sigma_1-conjugated measure; the window -N..N-1 is symmetric about the
    bond between sites -1 and 0."""
    usable = min(kappa.precision, table.depth)
    kap = kappa.truncate(usable)
    n_sites = 2 * half_width
    offsets = np.arange(-half_width + 1, half_width)
    offd = coeffs_mod.window_a_values(table, kap, offsets)

    rows = (half_width - 1, half_width)  # sites -1 and 0
    xs_a, w_a = _eigen_measure(np.zeros(n_sites), offd, rows)
    xs_b, w_b = _eigen_measure(np.zeros(n_sites), offd[::-1].copy(), rows)

    sigma1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    worst = 0.0
    for m in range(degree + 1):
        ma = np.einsum("x,xij->ij", xs_a ** m, w_a)
        mb = np.einsum("x,xij->ij", xs_b ** m, w_b)
        worst = max(worst, float(np.abs(mb - sigma1 @ ma @ sigma1).max()))
    return worst


@dataclass(frozen=True)
class AtomProbeReport:
    x: float
    etas: tuple
    values: tuple
    eta_min: float
    unreliable: tuple  # flags: eta below the level-spacing resolution
    decreasing: bool


def atom_probe(j: TruncatedJacobi, x: float, etas,
               median_spacing: float | None = None) -> AtomProbeReport:
    """eta * Im tr m(x + i eta) for a decreasing ladder of eta.

    A decreasing sequence is evidence against an atom at x at this
    resolution; etas below ten times the median level spacing are flagged
    as unresolvable but still reported.
    """
    if median_spacing is None:
        evs = eigh_tridiagonal(np.zeros(j.n_sites), j.offdiag,
                               eigvals_only=True)
        median_spacing = float(np.median(np.diff(evs)))
    eta_min = 10.0 * median_spacing
    etas = tuple(sorted(etas, reverse=True))
    vals = []
    for eta in etas:
        sample = resolvent_entry(j, complex(x, eta), eta_min=0.0)
        vals.append(eta * float(np.imag(np.trace(sample.m))))
    dec = all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))
    return AtomProbeReport(x=x, etas=etas, values=tuple(vals),
                           eta_min=eta_min,
                           unreliable=tuple(e < eta_min for e in etas),
                           decreasing=dec)


@dataclass(frozen=True)
class ImplantedAtomReport:
    implanted_mass: float
    atom_energy: float
    values: tuple
    plateau_value: float
    relative_error: float


def implanted_atom_selftest(kappa: DyadicInt, half_width: int, table: CoeffTable,
                            strength: float | None = None,
                            etas=(1e-2, 1e-3, 1e-4)) -> ImplantedAtomReport:
    """Control experiment: a rank-one diagonal spike at site 0 splits off a
    genuine eigenvalue, and the probe must plateau at its (-1, 0) mass."""
    j = build_truncation(kappa, half_width, table)
    params = MapParams(table.lam)
    theta = strength if strength is not None else 2.0 * params.xi
    diag = np.zeros(j.n_sites)
    diag[j.site_index(0)] = theta
    evs, vecs = eigh_tridiagonal(diag, j.offdiag)
    top = np.argmax(evs)
    x_star = float(evs[top])
    mass = float(vecs[j.site_index(-1), top] ** 2 + vecs[j.site_index(0), top] ** 2)

    vals = []
    rows = (j.site_index(-1), j.site_index(0))
    for eta in sorted(etas, reverse=True):
        cols = _resolvent_columns(j.offdiag, diag, complex(x_star, eta), rows)
        m = np.array([[cols[rows[0], 0], cols[rows[0], 1]],
                      [cols[rows[1], 0], cols[rows[1], 1]]])
        vals.append(eta * float(np.imag(np.trace(m))))
    plateau = vals[-1]
    return ImplantedAtomReport(implanted_mass=mass, atom_energy=x_star,
                               values=tuple(vals), plateau_value=plateau,
                               relative_error=abs(plateau - mass) / mass)


def jminus_measure(n_sites: int, table: CoeffTable):
    """Scalar spectral measure of the negative half-line block at the hull
    point 0, cyclic vector at site -1.  Returns (atom locations, masses)."""
    depth = min(table.depth, MIN_NEGATIVE_DIGITS)
    kap = DyadicInt(tuple([0] * depth))
    offsets = -np.arange(1, n_sites)
    offd = coeffs_mod.window_a_values(table, kap, offsets)
    xs, w = _eigen_measure(np.zeros(n_sites), offd, (0,))
    return xs, w[:, 0, 0]


def jminus_renorm_check(n_max: int, table: CoeffTable, grid_points: int = 200,
                        dyadic_depth: int | None = None) -> float:
    """Odd-index renormalization of the half-line orthogonal polynomials:
    p_{2n+1}(x) = (x / a_{-1}) p_n(T(x)) on a grid, n <= n_max."""
    depth = dyadic_depth if dyadic_depth is not None else min(table.depth,
                                                              MIN_NEGATIVE_DIGITS)
    kap = DyadicInt(tuple([0] * depth))
    count = 2 * n_max + 3
    a_neg = coeffs_mod.window_a_values(table, kap, -np.arange(1, count + 1))

    params = MapParams(table.lam)
    grid = np.linspace(-params.xi, params.xi, grid_points)

    def poly_values(xs, n_top):
        ps = [np.ones_like(xs)]
        ps.append(xs / a_neg[0])
        for n in range(1, n_top):
            ps.append((xs * ps[n] - a_neg[n - 1] * ps[n - 1]) / a_neg[n])
        return ps

    ps = poly_values(grid, 2 * n_max + 2)
    ps_t = poly_values(params.apply(grid), n_max + 1)
    worst = 0.0
    for n in range(n_max + 1):
        worst = max(worst, float(np.abs(ps[2 * n + 1]
                                        - grid / a_neg[0] * ps_t[n]).max()))
    return worst


def h0_trace_integral(kappa: DyadicInt, half_width: int, table: CoeffTable) -> float:
    """Pairing of h_0 with the spectral matrix measure at kappa."""
    meas = spectral_measure(build_truncation(kappa, half_width, table))
    return meas.trace_pair(lambda x: 1.0 / (x + table.lam))

"""The matrix transfer operator attached to the coefficient hull.

The 2x2 weight at a hull point depends only on the parity of its first
digit and on three neighbouring coefficients.  Acting on functions of the
form sum_k w_x^k(T(0)) A_k (constant PSD matrices against the pole basis)
the operator has a closed-form coefficient update, which is what makes
desk-scale iteration possible: the top coefficient picks up one weight
factor evaluated along the critical orbit, and everything else drains
into the k = 0 slot through the rank-one matrix Phi.

Two independent code paths are kept deliberately:

* ``iterate_h`` pushes coefficient lists through the closed form;
* ``f0_recurrence`` computes the scalar lower-edge coefficients directly
  from ordered weight products, never touching the h iteration.

Their agreement (the interpolation identity) is a genuine cross-check of
both implementations, so do not refactor them to share the update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coeffs as coeffs_mod
from . import dynamics
from .coeffs import CoeffTable
from .dyadic import DyadicInt, PrecisionExhausted, modified_shift, run_profile

__all__ = [
    "RuelleWeight",
    "MatrixPoleFunction",
    "FrakPProduct",
    "FSequence",
    "weight",
    "pole_basis_identity",
    "apply_closed_form",
    "apply_bruteforce",
    "iterate_h",
    "frakP",
    "f0_recurrence",
    "interpolation_residuals",
    "top_coefficient_residual",
    "monotone_step_margins",
    "positivity_certificate",
    "trace_sandwich",
    "mass_growth_probe",
    "min_eigenvalues",
]

_E0 = np.array([1.0, 0.0])
_E1 = np.array([0.0, 1.0])


@dataclass(frozen=True)
class RuelleWeight:
    """The 2x2 rational weight at one hull point.

    parity 0 (even first digit): rows built from (a_{k-1}, a_k) with the
    singular column 2/T'(x) on the left; parity 1 (odd): rows from
    (a_k, a_{k+1}) with 2/T'(x) on the right.
    """

    parity: int
    a_pair: tuple
    lam: float

    def eval(self, x: float) -> np.ndarray:
        """Weight matrix at x.  IEEE-safe for huge |x|: the 1/x entries
        underflow to the exact limit matrix."""
        p, q = self.a_pair
        inv = 1.0 / x
        if self.parity == 0:
            return np.array([[p * inv, 0.0], [q * inv, 1.0]])
        return np.array([[1.0, p * inv], [0.0, q * inv]])

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Weight matrices along an array of points, shape (n, 2, 2)."""
        xs = np.asarray(xs, dtype=np.float64)
        p, q = self.a_pair
        inv = 1.0 / xs
        out = np.zeros(xs.shape + (2, 2))
        if self.parity == 0:
            out[..., 0, 0] = p * inv
            out[..., 1, 0] = q * inv
            out[..., 1, 1] = 1.0
        else:
            out[..., 0, 0] = 1.0
            out[..., 0, 1] = p * inv
            out[..., 1, 1] = q * inv
        return out

    @property
    def psi(self) -> np.ndarray:
        return np.array(self.a_pair)

    @property
    def upsilon(self) -> np.ndarray:
        return _E0 if self.parity == 0 else _E1

    @property
    def phi(self) -> np.ndarray:
        """Rank-one matrix (z * weight(z)) at z = 0; equals psi upsilon^T."""
        return np.outer(self.psi, self.upsilon)


def weight(kappa: DyadicInt, table: CoeffTable) -> RuelleWeight:
    if kappa.precision < 2:
        raise PrecisionExhausted("weight needs at least two trusted digits")
    if kappa.is_odd:
        a = coeffs_mod.window_a_values(table, kappa, np.array([0, 1]))
    else:
        a = coeffs_mod.window_a_values(table, kappa, np.array([-1, 0]))
    return RuelleWeight(parity=int(kappa.digits[0]),
                        a_pair=(float(a[0]), float(a[1])), lam=table.lam)


@dataclass(frozen=True)
class MatrixPoleFunction:
    """h(x) = sum_k w_x^k(T(0)) A_k with constant symmetric 2x2 A_k."""

    coeffs: np.ndarray  # shape (degree + 1, 2, 2)
    lam: float

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def evaluate(self, xs, params: dynamics.MapParams | None = None,
                 profile: np.ndarray | None = None) -> np.ndarray:
        """Evaluate on an array of x; returns shape (len(xs), 2, 2)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        if profile is None:
            if params is None:
                params = dynamics.MapParams(self.lam)
            profile = dynamics.w_profile(params, xs, self.degree)
        return np.einsum("kx,kij->xij", profile[: self.degree + 1], self.coeffs)

    def evaluate_one(self, x: float) -> np.ndarray:
        return self.evaluate([x])[0]

    def coefficient_trace_sum(self) -> float:
        return float(np.trace(self.coeffs, axis1=1, axis2=2).sum())


def pole_basis_identity(lam: float) -> MatrixPoleFunction:
    """h_0: the identity matrix against the k = 0 basis slot."""
    return MatrixPoleFunction(coeffs=np.eye(2)[None, :, :].copy(), lam=lam)


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def apply_closed_form(w: RuelleWeight, h: MatrixPoleFunction,
                      orbit: dynamics.CriticalOrbit | None = None,
                      w0_vals: np.ndarray | None = None) -> MatrixPoleFunction:
    """One application of the matrix transfer operator in coefficient form.

    Degree rises by exactly one: slot k+1 receives the weight conjugation
    of slot k along the critical orbit, and slot 0 collects every input
    slot through the rank-one Phi, scaled by the w-values at x = 0.
    """
    n = h.degree
    params = dynamics.MapParams(h.lam)
    if orbit is None or len(orbit) < n + 2:
        orbit = dynamics.orbit_of_zero(params, n + 1)
    if w0_vals is None or w0_vals.size < n + 1:
        w0_vals = dynamics.w_profile(params, [0.0], n, orbit=orbit)[:, 0]
    t = orbit.values
    out = np.zeros((n + 2, 2, 2))
    phi = w.phi
    out[0] = phi @ np.tensordot(w0_vals[: n + 1], h.coeffs, axes=(0, 0)) @ phi.T
    for k in range(n + 1):
        pk = w.eval(t[k + 1])
        out[k + 1] = pk @ h.coeffs[k] @ pk.T
    return MatrixPoleFunction(coeffs=_sym(out), lam=h.lam)


def apply_bruteforce(w: RuelleWeight, h, x: float,
                     params: dynamics.MapParams) -> np.ndarray:
    """Direct two-preimage sum (1/2) sum p(y) h(y) p(y)^T; the independent
    oracle for the closed form.  ``h`` is a MatrixPoleFunction or any
    callable returning a 2x2 matrix."""
    if x < -params.lam:
        raise dynamics.DomainError(f"x = {x} < -lambda")
    y = math.sqrt(x + params.lam)
    if y == 0.0:
        raise dynamics.SingularWeight("singular weight at the critical point")
    hfun = h.evaluate_one if isinstance(h, MatrixPoleFunction) else h
    acc = np.zeros((2, 2))
    for s in (y, -y):
        pm = w.eval(s)
        acc += pm @ hfun(s) @ pm.T
    return 0.5 * acc


def apply_bruteforce_grid(w: RuelleWeight, h, xs: np.ndarray,
                          params: dynamics.MapParams) -> np.ndarray:
    """Vectorized ``apply_bruteforce`` over an array of x values."""
    xs = np.asarray(xs, dtype=np.float64)
    y = np.sqrt(xs + params.lam)
    p_plus = w.eval_many(y)
    p_minus = w.eval_many(-y)
    h_plus = h.evaluate(y, params=params)
    h_minus = h.evaluate(-y, params=params)
    return 0.5 * (np.einsum("xab,xbc,xdc->xad", p_plus, h_plus, p_plus)
                  + np.einsum("xab,xbc,xdc->xad", p_minus, h_minus, p_minus))


def iterate_h(kappa: DyadicInt, n: int, table: CoeffTable) -> list:
    """h_0 .. h_n along the modified-shift orbit of kappa.

    Needs precision >= n + 2 so every weight on the orbit still has two
    trusted digits.
    """
    if kappa.precision < n + 2:
        raise PrecisionExhausted(
            f"iterating to depth {n} needs precision >= {n + 2}, got {kappa.precision}"
        )
    params = dynamics.MapParams(table.lam)
    orbit = dynamics.orbit_of_zero(params, n + 1)
    w0 = dynamics.w_profile(params, [0.0], max(n - 1, 0), orbit=orbit)[:, 0]
    hs = [pole_basis_identity(table.lam)]
    cur = kappa
    for _ in range(n):
        wt = weight(cur, table)
        hs.append(apply_closed_form(wt, hs[-1], orbit=orbit, w0_vals=w0))
        cur = modified_shift(cur)
    return hs


@dataclass(frozen=True)
class FrakPProduct:
    """Ordered product of weights along the orbit, evaluated at one point."""

    n: int
    z: float
    matrix: np.ndarray


def frakP(kappa: DyadicInt, n: int, z: float, table: CoeffTable) -> FrakPProduct:
    """Product p_{s^{n-1} kappa}(T^{n-1}(z)) ... p_kappa(z), left to right."""
    if kappa.precision < n + 2:
        raise PrecisionExhausted(f"product of order {n} needs precision >= {n + 2}")
    mat = np.eye(2)
    cur = kappa
    zk = z
    for _ in range(n):
        wt = weight(cur, table)
        mat = wt.eval(zk) @ mat
        cur = modified_shift(cur)
        zk = zk * zk - table.lam
    return FrakPProduct(n=n, z=z, matrix=mat)


@dataclass(frozen=True)
class FSequence:
    """The scalar coefficients f_0^1 .. f_0^n; values[m-1] is f_0^m."""

    values: np.ndarray
    kappa: DyadicInt

    def minimum(self) -> float:
        return float(self.values.min())


def _shift_chain(kappa: DyadicInt, count: int) -> list:
    ks = [kappa]
    for _ in range(count - 1):
        ks.append(modified_shift(ks[-1]))
    return ks


def f0_recurrence(kappa: DyadicInt, n: int, table: CoeffTable) -> FSequence:
    """f_0^1 .. f_0^n from the scalar recurrence over weight products.

    This path never builds h matrices; it only multiplies weights along
    the critical orbit and accumulates the lower-triangular recurrence.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kappa.precision < n + 2:
        raise PrecisionExhausted(f"f-sequence to {n} needs precision >= {n + 2}")
    params = dynamics.MapParams(table.lam)
    orbit = dynamics.orbit_of_zero(params, n + 1)
    w0 = dynamics.w_profile(params, [0.0], n, orbit=orbit)[:, 0]
    t = orbit.values

    ks = _shift_chain(kappa, n)
    wts = [weight(k, table) for k in ks]

    # prods[i][j] = ordered product of j weights starting at shift i, at T(0)
    prods = [[np.eye(2)] for _ in range(n)]
    for i in range(n):
        for j in range(n - 1 - i):
            prods[i].append(wts[i + j].eval(t[j + 1]) @ prods[i][j])

    f = np.zeros(n + 1)
    f[1] = w0[0]
    for m in range(2, n + 1):
        ups = wts[m - 1].upsilon
        pm_t_ups = prods[0][m - 1].T @ ups
        total = w0[m - 1] * float(pm_t_ups @ pm_t_ups)
        for i in range(1, m):
            v = prods[i][m - 1 - i] @ wts[i - 1].psi
            total += w0[m - 1 - i] * float(v @ ups) ** 2 * f[i]
        f[m] = total
    return FSequence(values=f[1:], kappa=kappa)


def interpolation_residuals(kappa: DyadicInt, n: int, table: CoeffTable) -> np.ndarray:
    """|f_0^{m+1} - <h_m(0) Ups, Ups>| for m = 0..n, via the two code paths."""
    if kappa.precision < n + 3:
        raise PrecisionExhausted(f"need precision >= {n + 3}")
    params = dynamics.MapParams(table.lam)
    orbit = dynamics.orbit_of_zero(params, n + 1)
    w0 = dynamics.w_profile(params, [0.0], n, orbit=orbit)[:, 0]
    hs = iterate_h(kappa, n, table)
    fs = f0_recurrence(kappa, n + 1, table)
    ks = _shift_chain(kappa, n + 1)
    out = np.empty(n + 1)
    for m in range(n + 1):
        h0m = np.tensordot(w0[: m + 1], hs[m].coeffs, axes=(0, 0))
        ups = weight(ks[m], table).upsilon
        out[m] = abs(fs.values[m] - float(ups @ h0m @ ups))
    return out


def top_coefficient_residual(kappa: DyadicInt, n: int, table: CoeffTable) -> float:
    """Structural check: the top coefficient of h_n equals the squared
    ordered weight product at T(0)."""
    hs = iterate_h(kappa, n, table)
    pn = frakP(kappa, n, -table.lam, table).matrix
    return float(np.abs(hs[n].coeffs[n] - pn @ pn.T).max())


def monotone_step_margins(kappa: DyadicInt, n: int, table: CoeffTable) -> np.ndarray:
    """Margins f_0^m - L_{m,m-1} f_0^{m-1} for m = 2..n; all must be >= 0
    since every term of the recurrence is non-negative."""
    if kappa.precision < n + 2:
        raise PrecisionExhausted(f"need precision >= {n + 2}")
    params = dynamics.MapParams(table.lam)
    w0_0 = 1.0 / table.lam
    fs = f0_recurrence(kappa, n, table)
    ks = _shift_chain(kappa, n)
    wts = [weight(k, table) for k in ks]
    out = np.empty(n - 1)
    for m in range(2, n + 1):
        ell = w0_0 * float(wts[m - 2].psi @ wts[m - 1].upsilon) ** 2
        out[m - 2] = fs.values[m - 1] - ell * fs.values[m - 2]
    return out


def min_eigenvalues(mats: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of an array of symmetric 2x2 matrices."""
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 1]
    half = 0.5 * (a + c)
    return half - np.sqrt((0.5 * (a - c)) ** 2 + b * b)


def _max_eigenvalues(mats: np.ndarray) -> np.ndarray:
    a = mats[..., 0, 0]
    b = mats[..., 0, 1]
    c = mats[..., 1, 1]
    half = 0.5 * (a + c)
    return half + np.sqrt((0.5 * (a - c)) ** 2 + b * b)


@dataclass(frozen=True)
class PositivityReport:
    kappa_digits: str
    window_run: int
    n: int
    grid_points: int
    min_eigenvalue: float
    min_f0: float
    c3: float
    predicted_floor: float
    strictly_positive: bool
    above_prediction: bool


def positivity_certificate(kappa: DyadicInt, n: int, table: CoeffTable,
                           grid_points: int = 200,
                           window_run: int | None = None) -> PositivityReport:
    """Minimum eigenvalue of h_m over a grid and m <= n, against the
    equivalence-lemma floor C2 C3^2 / (4 (lam+xi)(lam+1)) with observed C2.
    """
    params = dynamics.MapParams(table.lam)
    prof = run_profile(kappa)
    nw = prof.max_run if window_run is None else window_run
    grid = np.linspace(-params.xi, params.xi, grid_points)
    profile = dynamics.w_profile(params, grid, n)
    hs = iterate_h(kappa, n, table)
    min_eig = math.inf
    for h in hs:
        vals = h.evaluate(grid, params=params, profile=profile)
        min_eig = min(min_eig, float(min_eigenvalues(vals).min()))
    c2 = f0_recurrence(kappa, n, table).minimum()
    c3 = (table.lam - 1.0) / table.lam ** nw
    floor = c2 * c3 ** 2 / (4.0 * (table.lam + params.xi) * (table.lam + 1.0))
    return PositivityReport(
        kappa_digits=kappa.digit_string(), window_run=nw, n=n,
        grid_points=grid_points, min_eigenvalue=min_eig, min_f0=c2, c3=c3,
        predicted_floor=floor, strictly_positive=bool(min_eig > 0.0),
        above_prediction=bool(min_eig >= floor))


@dataclass(frozen=True)
class SandwichReport:
    n: int
    sigma_h0_integral: float
    lower: float
    upper: float
    min_trace: float
    max_trace: float
    max_coeff_mass: float
    coeff_mass_bound: float
    trace_ok: bool
    mass_ok: bool


def trace_sandwich(kappa: DyadicInt, n: int, table: CoeffTable,
                   h0_sigma_integral: float, grid_points: int = 200) -> SandwichReport:
    """Two-sided trace bounds for h_m, m <= n, from the measured value of
    the h_0 pairing against the spectral matrix measure."""
    params = dynamics.MapParams(table.lam)
    lam, xi = table.lam, params.xi
    lower = (lam - xi) / (lam + xi) * h0_sigma_integral
    upper = (lam + xi) / (lam - xi) * h0_sigma_integral
    grid = np.linspace(-xi, xi, grid_points)
    profile = dynamics.w_profile(params, grid, n)
    hs = iterate_h(kappa, n, table)
    tmin, tmax, mass = math.inf, -math.inf, 0.0
    for h in hs:
        vals = h.evaluate(grid, params=params, profile=profile)
        tr = vals[:, 0, 0] + vals[:, 1, 1]
        tmin = min(tmin, float(tr.min()))
        tmax = max(tmax, float(tr.max()))
        mass = max(mass, h.coefficient_trace_sum())
    bound = (lam + xi) * h0_sigma_integral
    return SandwichReport(n=n, sigma_h0_integral=h0_sigma_integral,
                          lower=lower, upper=upper,
                          min_trace=tmin, max_trace=tmax,
                          max_coeff_mass=mass, coeff_mass_bound=bound,
                          trace_ok=bool(lower <= tmin and tmax <= upper),
                          mass_ok=bool(mass <= bound))


@dataclass(frozen=True)
class MassGrowthReport:
    t_series: np.ndarray
    ratio: float
    pullback_residuals: np.ndarray
    evenness_residuals: np.ndarray
    delta: float
    control_series: np.ndarray
    control_growth_min: float
    control_ok: bool
    drift_flagged: bool


def mass_growth_probe(kappa: DyadicInt, n_steps: int, table: CoeffTable,
                      trunc_half_width: int, delta_window: float,
                      x0: float | None = None, pull_degrees=(0, 1, 2),
                      grid_points: int = 200) -> MassGrowthReport:
    """Track the traced local mass t_m = tr(h_m Sigma-ball) along the orbit.

    Bounded t_m is the no-atom evidence; the synthetic control implants an
    even pair of atoms and must grow by at least (1 + c_-/c_+) per step,
    which is the growth mechanism that rules atoms out.
    """
    from . import hull  # deferred: hull imports this module for the weights

    params = dynamics.MapParams(table.lam)
    xi = params.xi
    if x0 is None:
        x0 = xi  # fixed point of T: the forward orbit never drifts

    ys = np.empty(n_steps + 1)
    ys[0] = x0
    drift = False
    for m in range(1, n_steps + 1):
        nxt = params.apply(ys[m - 1])
        if abs(nxt) > xi:
            # a few ulps past the fixed point is roundoff, not escape
            drift = drift or abs(nxt) > xi * (1.0 + 1e-12)
            nxt = math.copysign(xi, nxt)
        ys[m] = nxt

    hs = iterate_h(kappa, n_steps, table)
    grid = np.linspace(-xi, xi, grid_points)
    profile = dynamics.w_profile(params, grid, n_steps)
    c_minus, c_plus = math.inf, -math.inf
    for h in hs:
        vals = h.evaluate(grid, params=params, profile=profile)
        c_minus = min(c_minus, float(min_eigenvalues(vals).min()))
        c_plus = max(c_plus, float(_max_eigenvalues(vals).max()))
    delta = c_minus / c_plus

    ks = _shift_chain(kappa, n_steps + 1)
    measures = [
        hull.spectral_measure(hull.build_truncation(k, trunc_half_width, table))
        for k in ks
    ]

    t_series = np.empty(n_steps + 1)
    even_res = np.empty(n_steps + 1)
    for m in range(n_steps + 1):
        hm_y = hs[m].evaluate_one(ys[m])
        ball = measures[m].ball_mass(ys[m], delta_window)
        t_series[m] = float(np.sum(hm_y * ball))
        even_res[m] = abs(np.trace(ball)
                          - np.trace(measures[m].ball_mass(-ys[m], delta_window)))

    pull = np.empty(n_steps)
    for m in range(n_steps):
        xs_m, w_m = measures[m].xs, measures[m].weights
        xs_n, w_n = measures[m + 1].xs, measures[m + 1].weights
        th_m = np.einsum("xij,xij->x", hs[m].evaluate(xs_m, params=params), w_m)
        th_n = np.einsum("xij,xij->x", hs[m + 1].evaluate(xs_n, params=params), w_n)
        txs = params.apply(xs_m)
        worst = 0.0
        for d in pull_degrees:
            worst = max(worst, abs(float(np.sum(txs ** d * th_m))
                                   - float(np.sum(xs_n ** d * th_n))))
        pull[m] = worst

    # synthetic control: even atom pair at +/-y_m pushed through the pull-back
    control = np.empty(n_steps + 1)
    control[0] = float(np.trace(hs[0].evaluate_one(ys[0])))
    growth_min = math.inf
    for m in range(n_steps):
        tr_plus = float(np.trace(hs[m].evaluate_one(ys[m])))
        tr_minus = float(np.trace(hs[m].evaluate_one(-ys[m])))
        factor = 1.0 + tr_minus / tr_plus
        growth_min = min(growth_min, factor)
        control[m + 1] = control[m] * factor

    finite_t = t_series[t_series > 0]
    ratio = float(finite_t.max() / finite_t.min()) if finite_t.size else math.inf
    return MassGrowthReport(
        t_series=t_series, ratio=ratio, pullback_residuals=pull,
        evenness_residuals=even_res, delta=delta, control_series=control,
        control_growth_min=growth_min,
        control_ok=bool(growth_min >= 1.0 + delta - 1e-12),
        drift_flagged=drift)

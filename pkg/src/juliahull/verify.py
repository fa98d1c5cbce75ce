"""The umbrella certificate suite.

Each check witnesses one family of identities or bounds at configured
tolerances and returns a ``CheckResult``; ``run_all`` assembles them into
a machine-readable report.  Reports are byte-deterministic for a fixed
configuration: every sampled quantity is seeded from the config seed and
no wall-clock data enters the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, coeffs, dynamics, hull, ruelle
from .dyadic import from_integer, from_pattern, modified_shift, sample_f_window

__all__ = ["RunConfig", "CheckResult", "ConfigError", "run_all",
           "report_to_json", "DEFAULT_TOLERANCES", "ALL_CHECKS"]


class ConfigError(ValueError):
    """The run configuration is inconsistent or out of regime."""


DEFAULT_TOLERANCES = {
    "relations_float": 1e-12,
    "fn_slack": 1e-9,
    "w_agreement": 1e-10,
    "w_bounds_slack": 1e-12,
    "invariance_final": 1e-6,
    "v_identity": 1e-4,
    "renorm": 1e-5,
    "closed_vs_brute": 1e-9,
    "psd_floor": 1e-12,
    "interpolation": 1e-10,
    "pullback": 1e-5,
    "mass_ratio": 10.0,
    "atom_selftest_rel": 0.10,
    "reflection": 1e-8,
    "jminus": 1e-8,
    "nu_invariance": 1e-9,
    "herglotz": 1e-12,
}

MASS_GROWTH_STEPS = 10
MASS_GROWTH_DELTA = 0.05


@dataclass
class RunConfig:
    lam: str = "4"
    dyadic_digits: int = 32
    table_depth: int = 24
    exact_depth: int = 12
    truncation: int = 1024
    seed: int = 20260811
    tolerances: dict = field(default_factory=dict)
    allow_small_lambda: bool = False
    inject_fault: bool = False

    def lam_fraction(self) -> Fraction:
        try:
            return Fraction(self.lam)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse lambda {self.lam!r}: {exc}") from exc

    def validate(self) -> None:
        lam = self.lam_fraction()
        if lam <= 2:
            raise ConfigError(f"lambda = {lam} <= 2 is out of regime")
        if lam <= 3 and not self.allow_small_lambda:
            raise ConfigError(
                f"lambda = {lam} <= 3: pass --allow-small-lambda to explore"
            )
        if self.dyadic_digits < 4:
            raise ConfigError("dyadic_digits must be at least 4")
        if self.table_depth < 12 or self.table_depth > 26:
            raise ConfigError("table_depth outside the supported range [12, 26]")
        if self.truncation < 64:
            raise ConfigError("truncation half-width must be >= 64")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict


def _py(value):
    """Convert numpy scalars/arrays to plain Python for JSON."""
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_py(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_py(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _py(v) for k, v in value.items()}
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _result(name: str, passed: bool, **details) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), details=_py(details))


class _Env:
    """Shared tables for one run."""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        lam = config.lam_fraction()
        self.table = coeffs.cached_table(lam, depth=config.table_depth,
                                         exact_depth=config.exact_depth,
                                         allow_small_lambda=config.allow_small_lambda)
        if config.inject_fault:
            self.table = self.table.with_fault(100)
        self.params = dynamics.MapParams(self.table.lam)

    def kappa(self, n: int, digits: int | None = None):
        return from_integer(n, digits or self.config.dyadic_digits)


def check_coeff_relations(env: _Env) -> CheckResult:
    """Exact pair relations on every table row, plus the frozen spot values."""
    cfg = env.config
    rep = coeffs.check_relations(env.table, float_tol=cfg.tol("relations_float"))
    spots_ok = True
    if rep.exact and env.table.lam_exact == 4:
        sq = env.table.a_sq_exact
        spots_ok = sq[4] == Fraction(1, 3) and sq[7] == Fraction(35, 11)
    passed = rep.sum_ok and rep.product_ok and spots_ok
    return _result("coeff_exact_relations", passed,
                   rows=rep.rows_checked, exact=rep.exact,
                   max_residual=rep.max_residual,
                   spot_a_sq={str(k): str(v) for k, v in rep.spot_a_sq.items()},
                   spots_ok=spots_ok)


def check_parity_bounds(env: _Env) -> CheckResult:
    """Even entries at most 1, odd entries at least lambda - 1, exactly."""
    out = {}
    passed = True
    second = Fraction(7, 2)
    tables = [env.table]
    if env.table.lam_exact != second:
        tables.append(coeffs.cached_table(second, depth=env.config.exact_depth,
                                          exact_depth=env.config.exact_depth))
    for t in tables:
        label = str(t.lam_exact if t.is_exact else t.lam)
        try:
            r = coeffs.verify_parity_bounds(t)
            out[label] = {"max_even_sq": r.max_even_sq,
                          "argmax_even": r.argmax_even,
                          "min_odd_sq": r.min_odd_sq,
                          "argmin_odd": r.argmin_odd}
        except coeffs.TableCorruption as exc:
            out[label] = {"error": str(exc)}
            passed = False
    return _result("parity_bounds", passed, tables=out)


def check_fn_lower_bound(env: _Env) -> CheckResult:
    """Sampled F_N windows stay above (lambda-1)/lambda^N."""
    cfg = env.config
    reports = {}
    passed = True
    for n in (1, 2, 3):
        r = coeffs.fn_lower_bound(env.table, n, samples=1000,
                                  seed=cfg.seed + n, slack=cfg.tol("fn_slack"))
        reports[n] = {"c3": r.c3, "min_a_sq": r.min_a_sq,
                      "min_margin": r.min_margin,
                      "induction_min_margin": r.induction_min_margin}
        passed = passed and r.all_above and r.induction_ok
    return _result("fn_lower_bound", passed, samples=1000, per_n=reports)


def check_w_bounds(env: _Env) -> CheckResult:
    """Two-sided bounds for the pole-basis weights plus the preimage-sum
    agreement of the two evaluation routes, over the full grid."""
    cfg = env.config
    p = env.params
    n_max = 12
    grid = np.linspace(-p.xi, p.xi, 200)
    prof = dynamics.w_profile(p, grid, n_max)
    lo = 1.0 / (p.lam + p.xi)
    hi = 1.0 / (p.lam - p.xi)
    slack = cfg.tol("w_bounds_slack")
    bounds_ok = bool((prof >= lo - slack).all() and (prof <= hi + slack).all())

    agree = 0.0
    for n in range(n_max + 1):
        sums = dynamics.w_preimage_sum_grid(p, grid, n)
        agree = max(agree, float(np.abs(prof[n] - sums).max()))
    passed = bounds_ok and agree < cfg.tol("w_agreement")
    return _result("w_bounds", passed, lower=lo, upper=hi,
                   profile_min=float(prof.min()), profile_max=float(prof.max()),
                   bounds_ok=bounds_ok, max_route_disagreement=agree)


def check_measure_invariance(env: _Env) -> CheckResult:
    """Pull-back invariance of the balanced measure at increasing quadrature
    depth.  The 2^d-node rule is exact for polynomials beyond tiny depth, so
    residuals sit at (often exactly) zero and the depth trend is asserted
    non-strictly."""
    cfg = env.config
    p = env.params
    resids = {}
    passed = True
    for name, f in (("x^2", lambda x: x ** 2), ("x^4", lambda x: x ** 4)):
        vals = [dynamics.invariance_residual(p, f, d) for d in (8, 12, 16)]
        resids[name] = vals
        passed = passed and vals[0] >= vals[1] >= vals[2]
        passed = passed and vals[2] < cfg.tol("invariance_final")
    return _result("measure_invariance", passed, depths=[8, 12, 16],
                   residuals=resids)


def check_v_identity(env: _Env) -> CheckResult:
    """Resolvent compression identity at two window sizes over one fixed
    probe set; the large-window residual must not exceed the small one."""
    cfg = env.config
    z = 1 + 1j
    n_small = max(cfg.truncation // 4, 64)
    n_large = cfg.truncation
    probes = hull._probe_indices(n_small)
    out = {}
    passed = True
    for k in (0, 1):
        kap = env.kappa(k)
        r_small = hull.check_V_identity(kap, z, n_small, env.table, probes=probes)
        r_large = hull.check_V_identity(kap, z, n_large, env.table, probes=probes)
        ok = (r_large.residual <= r_small.residual
              and r_small.residual < cfg.tol("v_identity")
              and r_large.residual < cfg.tol("v_identity"))
        out[k] = {"small_N": n_small, "large_N": n_large,
                  "residual_small": r_small.residual,
                  "residual_large": r_large.residual, "ok": ok}
        passed = passed and ok
    return _result("v_identity", passed, z={"re": 1.0, "im": 1.0}, per_kappa=out)


def check_renorm_pairing(env: _Env) -> CheckResult:
    """One-step measure renormalization in pairing form, monomials deg <= 8."""
    cfg = env.config
    out = {}
    passed = True
    for k in (0, 1, 6, -1):
        rep = hull.check_renormalization(env.kappa(k), 8, cfg.truncation, env.table)
        out[k] = rep.max_residual
        passed = passed and rep.max_residual < cfg.tol("renorm")
    return _result("renorm_pairing", passed, degree=8, half_width=cfg.truncation,
                   max_residual_per_kappa=out,
                   tolerance=cfg.tol("renorm"))


def check_closed_vs_brute(env: _Env) -> CheckResult:
    """Coefficient-form transfer operator against the preimage-sum oracle."""
    cfg = env.config
    p = env.params
    rng = np.random.default_rng(cfg.seed + 8)
    grid = np.linspace(-p.xi, p.xi, 100)
    worst = 0.0
    min_coeff_eig = math.inf
    for _ in range(10):
        kap = sample_f_window(rng, 3, 20)
        hs = ruelle.iterate_h(kap, 15, env.table)
        cur = kap
        for n in range(1, 16):
            wt = ruelle.weight(cur, env.table)
            brute = ruelle.apply_bruteforce_grid(wt, hs[n - 1], grid, p)
            closed = hs[n].evaluate(grid, params=p)
            worst = max(worst, float(np.abs(closed - brute).max()))
            min_coeff_eig = min(min_coeff_eig,
                                float(ruelle.min_eigenvalues(hs[n].coeffs).min()))
            cur = modified_shift(cur)
    passed = worst < cfg.tol("closed_vs_brute") and min_coeff_eig > -cfg.tol("psd_floor")
    return _result("ruelle_closed_vs_brute", passed, max_deviation=worst,
                   min_coefficient_eigenvalue=min_coeff_eig,
                   kappas=10, iterations=15, grid_points=100)


def check_trace_sandwich(env: _Env) -> CheckResult:
    """Two-sided trace bounds for the iterated test functions, constants
    measured from the spectral matrix measure."""
    cfg = env.config
    out = {}
    passed = True
    half = 2 * cfg.truncation
    for label, kap in (("0", env.kappa(0, 34)), ("1", env.kappa(1, 34)),
                       ("(01)*", from_pattern("(01)*", 34))):
        j_int = hull.h0_trace_integral(kap, half, env.table)
        rep = ruelle.trace_sandwich(kap, 30, env.table, j_int)
        out[label] = {"h0_integral": j_int, "lower": rep.lower,
                      "min_trace": rep.min_trace, "max_trace": rep.max_trace,
                      "upper": rep.upper, "coeff_mass": rep.max_coeff_mass,
                      "coeff_mass_bound": rep.coeff_mass_bound,
                      "ok": rep.trace_ok and rep.mass_ok}
        passed = passed and rep.trace_ok and rep.mass_ok
    return _result("trace_sandwich", passed, n=30, half_width=half, per_kappa=out)


def check_interpolation(env: _Env) -> CheckResult:
    """Agreement of the two independent f-coefficient code paths."""
    cfg = env.config
    rng = np.random.default_rng(cfg.seed + 10)
    worst = 0.0
    f1_exact = True
    for kap in (env.kappa(0), env.kappa(1), from_pattern("(01)*", 32),
                sample_f_window(rng, 3, 32)):
        res = ruelle.interpolation_residuals(kap, 25, env.table)
        worst = max(worst, float(res.max()))
        fs = ruelle.f0_recurrence(kap, 1, env.table)
        f1_exact = f1_exact and fs.values[0] == 1.0 / env.table.lam
    passed = worst < cfg.tol("interpolation") and f1_exact
    return _result("interpolation", passed, n=25, max_residual=worst,
                   f1_exact=f1_exact)


def check_positivity(env: _Env) -> CheckResult:
    """Strict positivity of the iterated test functions on F_1/F_2 windows,
    against the equivalence-lemma floor with observed constants."""
    cfg = env.config
    rng = np.random.default_rng(cfg.seed + 11)
    n_iter = 20
    digits = 24 + n_iter + 2
    out = []
    passed = True
    for i in range(20):
        nw = 1 if i < 10 else 2
        kap = sample_f_window(rng, nw, digits)
        rep = ruelle.positivity_certificate(kap, n_iter, env.table,
                                            window_run=nw)
        out.append({"window_run": nw, "min_eig": rep.min_eigenvalue,
                    "floor": rep.predicted_floor,
                    "ok": rep.strictly_positive and rep.above_prediction})
        passed = passed and rep.strictly_positive and rep.above_prediction
    return _result("positivity", passed, n=n_iter, samples=out)


def check_atom_probes(env: _Env) -> CheckResult:
    """Resolvent atom probes at sampled near-spectrum points plus the
    implanted-atom control."""
    cfg = env.config
    p = env.params
    half = 4 * cfg.truncation
    j = hull.build_truncation(env.kappa(0), half, env.table)
    from scipy.linalg import eigh_tridiagonal
    evs = eigh_tridiagonal(np.zeros(j.n_sites), j.offdiag, eigvals_only=True)
    spacing = float(np.median(np.diff(evs)))

    rng = np.random.default_rng(cfg.seed + 12)
    tree = dynamics.preimage_tree(p, p.xi, 12)
    points = rng.choice(tree.leaves, size=10, replace=False)
    etas = (1e-1, 1e-2, 1e-3)
    probes = []
    passed = True
    for x in points:
        rep = hull.atom_probe(j, float(x), etas, median_spacing=spacing)
        probes.append({"x": float(x), "values": list(rep.values),
                       "decreasing": rep.decreasing})
        passed = passed and rep.decreasing

    self_test = hull.implanted_atom_selftest(env.kappa(0), cfg.truncation,
                                             env.table)
    st_ok = self_test.relative_error < cfg.tol("atom_selftest_rel")
    passed = passed and st_ok
    return _result("atom_probes", passed, half_width=half,
                   median_spacing=spacing, etas=list(etas), probes=probes,
                   selftest={"mass": self_test.implanted_mass,
                             "plateau": self_test.plateau_value,
                             "relative_error": self_test.relative_error,
                             "ok": st_ok})


def check_mass_growth(env: _Env) -> CheckResult:
    """Bounded traced local mass along the orbit, the per-step pull-back
    identity, and the synthetic-atom growth control."""
    cfg = env.config
    n_steps = MASS_GROWTH_STEPS
    kap = from_pattern("(01)*", 24 + n_steps + 3)
    rep = ruelle.mass_growth_probe(kap, n_steps, env.table, 4 * cfg.truncation,
                                   MASS_GROWTH_DELTA)
    pull_ok = bool((rep.pullback_residuals[:9] < cfg.tol("pullback")).all())
    ratio_ok = rep.ratio < cfg.tol("mass_ratio")
    passed = pull_ok and ratio_ok and rep.control_ok and not rep.drift_flagged
    return _result("mass_growth", passed, steps=n_steps,
                   delta_window=MASS_GROWTH_DELTA,
                   t_series=list(rep.t_series), ratio=rep.ratio,
                   pullback_residuals=list(rep.pullback_residuals),
                   evenness_residuals=list(rep.evenness_residuals),
                   growth_delta=rep.delta,
                   control_growth_min=rep.control_growth_min,
                   control_ok=rep.control_ok, drift_flagged=rep.drift_flagged)


def check_reflection(env: _Env) -> CheckResult:
    """Index reflection conjugates the spectral measure by sigma_1."""
    cfg = env.config
    rng = np.random.default_rng(cfg.seed + 14)
    worst = 0.0
    for kap in (env.kappa(0), sample_f_window(rng, 4, 32)):
        worst = max(worst, hull.reflection_check(kap, cfg.truncation, env.table))
    passed = worst < cfg.tol("reflection")
    return _result("reflection", passed, max_residual=worst,
                   tolerance=cfg.tol("reflection"))


def check_half_line_block(env: _Env) -> CheckResult:
    """Half-line block checks: the odd-index polynomial renormalization and
    the adjoint eigen-equation of its spectral measure."""
    cfg = env.config
    p = env.params
    jr = hull.jminus_renorm_check(10, env.table)
    xs, ws = hull.jminus_measure(4096, env.table)
    am1 = coeffs.a_at(env.table,
                      from_integer(-1, min(env.table.depth, 24))).value
    nu_res = {}
    for name, f in (("1", lambda x: np.ones_like(x)), ("x", lambda x: x),
                    ("x^2", lambda x: x ** 2)):
        nu_res[name] = dynamics.nu_invariance_check(p, xs, ws, am1, f)
    passed = (jr < cfg.tol("jminus")
              and max(nu_res.values()) < cfg.tol("nu_invariance"))
    return _result("half_line_block", passed, jminus_residual=jr,
                   nu_residuals=nu_res, a_minus1=am1)


def check_herglotz(env: _Env) -> CheckResult:
    """Matrix Herglotz property of resolvent samples off the real axis."""
    cfg = env.config
    j = hull.build_truncation(env.kappa(0), cfg.truncation, env.table)
    worst = -math.inf
    for z in (0.3 + 0.1j, 1 + 1j, -2 + 0.01j, 0.0 + 1e-4j):
        worst = max(worst, hull.resolvent_entry(j, z).herglotz_defect())
    passed = worst < cfg.tol("herglotz")
    return _result("herglotz", passed, max_defect=worst)


ALL_CHECKS = [
    check_coeff_relations,
    check_parity_bounds,
    check_fn_lower_bound,
    check_w_bounds,
    check_measure_invariance,
    check_v_identity,
    check_renorm_pairing,
    check_closed_vs_brute,
    check_trace_sandwich,
    check_interpolation,
    check_positivity,
    check_atom_probes,
    check_mass_growth,
    check_reflection,
    check_half_line_block,
    check_herglotz,
]


def run_all(config: RunConfig, names=None, progress=None) -> dict:
    """Run the suite and return the report dict (no wall-clock data)."""
    env = _Env(config)
    results = []
    for fn in ALL_CHECKS:
        name = fn.__name__.removeprefix("check_")
        if names is not None and name not in names:
            continue
        if progress is not None:
            progress(name)
        try:
            results.append(fn(env))
        except Exception as exc:  # a crash is a failed check, not a crashed run
            results.append(_result(name, False, error=f"{type(exc).__name__}: {exc}"))
    report = {
        "header": {
            "artifact": "juliahull",
            "version": __version__,
            "lambda": config.lam,
            "dyadic_digits": config.dyadic_digits,
            "table_depth": config.table_depth,
            "exact_depth": config.exact_depth,
            "truncation": config.truncation,
            "seed": config.seed,
            "tolerances": {k: config.tol(k) for k in sorted(DEFAULT_TOLERANCES)},
        },
        "checks": [{"name": r.name, "pass": r.passed, "details": r.details}
                   for r in results],
        "pass": all(r.passed for r in results),
    }
    return report


def report_to_json(report: dict) -> str:
    import json

    return json.dumps(report, sort_keys=True, indent=2) + "\n"

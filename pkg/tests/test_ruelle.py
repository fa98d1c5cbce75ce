import math

import numpy as np
import pytest

from juliahull import dynamics, hull, ruelle
from juliahull.dyadic import (
    PrecisionExhausted,
    from_integer,
    from_pattern,
    modified_shift,
    sample_f_window,
)


def test_weight_examples(table24):
    w0 = ruelle.weight(from_integer(0, 24), table24)
    assert w0.parity == 0
    assert w0.psi[1] == 0.0  # a_0 = 0
    assert abs(w0.psi[0] ** 2 - 3.1529276) < 1e-5  # a_{-1}^2
    assert list(w0.upsilon) == [1.0, 0.0]

    w1 = ruelle.weight(from_integer(1, 24), table24)
    assert w1.parity == 1
    assert list(w1.psi) == [2.0, 1.0]
    assert list(w1.upsilon) == [0.0, 1.0]

    for w in (w0, w1):
        assert np.linalg.matrix_rank(w.phi) == 1
        assert np.array_equal(w.phi, np.outer(w.psi, w.upsilon))


def test_weight_matrix_shapes(table24):
    w1 = ruelle.weight(from_integer(1, 24), table24)
    m = w1.eval(2.0)
    assert m[0, 0] == 1.0 and m[1, 0] == 0.0
    assert m[0, 1] == 1.0 and m[1, 1] == 0.5
    # the singular column vanishes in the huge-argument limit
    lim = w1.eval(float("inf"))
    assert np.array_equal(lim, np.array([[1.0, 0.0], [0.0, 0.0]]))
    w0 = ruelle.weight(from_integer(0, 24), table24)
    lim = w0.eval(float("inf"))
    assert np.array_equal(lim, np.array([[0.0, 0.0], [0.0, 1.0]]))


def test_h1_structure(table24):
    w1 = ruelle.weight(from_integer(1, 24), table24)
    h0 = ruelle.pole_basis_identity(4.0)
    h1 = ruelle.apply_closed_form(w1, h0)
    assert h1.degree == 1
    assert np.abs(h1.coeffs[0] - 0.25 * np.outer(w1.psi, w1.psi)).max() < 1e-15
    p = w1.eval(-4.0)
    assert np.abs(h1.coeffs[1] - p @ p.T).max() < 1e-15


def test_apply_linearity_zero(table24):
    w1 = ruelle.weight(from_integer(1, 24), table24)
    zero = ruelle.MatrixPoleFunction(np.zeros((3, 2, 2)), 4.0)
    out = ruelle.apply_closed_form(w1, zero)
    assert np.abs(out.coeffs).max() == 0.0


def test_degree_law(table24):
    hs = ruelle.iterate_h(from_integer(1, 20), 10, table24)
    for n, h in enumerate(hs):
        assert h.degree == n


def test_closed_vs_bruteforce(table24, params):
    rng = np.random.default_rng(23)
    grid = np.linspace(-params.xi, params.xi, 50)
    for _ in range(2):
        kap = sample_f_window(rng, 3, 20)
        hs = ruelle.iterate_h(kap, 15, table24)
        cur = kap
        worst = 0.0
        for n in range(1, 16):
            wt = ruelle.weight(cur, table24)
            brute = ruelle.apply_bruteforce_grid(wt, hs[n - 1], grid, params)
            closed = hs[n].evaluate(grid, params=params)
            worst = max(worst, float(np.abs(closed - brute).max()))
            cur = modified_shift(cur)
        assert worst < 1e-9


def test_bruteforce_scalar_matches_grid(table24, params):
    wt = ruelle.weight(from_integer(1, 24), table24)
    h1 = ruelle.iterate_h(from_integer(1, 20), 1, table24)[1]
    x = 0.37
    one = ruelle.apply_bruteforce(wt, h1, x, params)
    grid = ruelle.apply_bruteforce_grid(wt, h1, np.array([x]), params)[0]
    assert np.abs(one - grid).max() < 1e-14


def test_psd_preserved(table24, params):
    rng = np.random.default_rng(29)
    kap = sample_f_window(rng, 2, 20)
    hs = ruelle.iterate_h(kap, 15, table24)
    for h in hs:
        assert ruelle.min_eigenvalues(h.coeffs).min() > -1e-12
    # and pointwise on a grid
    grid = np.linspace(-params.xi, params.xi, 50)
    vals = hs[-1].evaluate(grid, params=params)
    assert ruelle.min_eigenvalues(vals).min() > -1e-12


def test_precision_accounting(table24):
    with pytest.raises(PrecisionExhausted):
        ruelle.iterate_h(from_integer(1, 10), 9, table24)
    with pytest.raises(PrecisionExhausted):
        ruelle.f0_recurrence(from_integer(1, 10), 9, table24)


def test_frakP_basics(table24):
    kap = from_integer(6, 20)
    assert np.array_equal(ruelle.frakP(kap, 0, -4.0, table24).matrix, np.eye(2))
    p1 = ruelle.frakP(kap, 1, -4.0, table24).matrix
    wt = ruelle.weight(kap, table24)
    assert np.abs(p1 - wt.eval(-4.0)).max() == 0.0


def test_top_coefficient_matches_product(table24):
    for k, n in ((1, 12), (6, 10)):
        assert ruelle.top_coefficient_residual(from_integer(k, 20), n,
                                               table24) < 1e-10


def test_f0_first_value_exact(table24):
    fs = ruelle.f0_recurrence(from_integer(1, 10), 1, table24)
    assert fs.values[0] == 0.25


def test_interpolation_identity(table24):
    for kap in (from_integer(0, 32), from_integer(1, 32),
                from_pattern("(01)*", 32)):
        res = ruelle.interpolation_residuals(kap, 25, table24)
        assert res.max() < 1e-10


def test_f_values_positive_and_monotone_step(table24):
    kap = from_pattern("(01)*", 32)
    fs = ruelle.f0_recurrence(kap, 25, table24)
    assert (fs.values > 0).all()
    margins = ruelle.monotone_step_margins(kap, 25, table24)
    assert margins.min() > -1e-12


def test_positivity_certificate(table24):
    rep = ruelle.positivity_certificate(from_pattern("(01)*", 40), 12, table24)
    assert rep.window_run == 1
    assert rep.strictly_positive and rep.above_prediction
    assert rep.c3 == 0.75
    rep2 = ruelle.positivity_certificate(from_pattern("(0011)*", 40), 12,
                                         table24)
    assert rep2.window_run == 2
    assert rep2.strictly_positive and rep2.above_prediction
    assert rep2.predicted_floor < rep.predicted_floor


def test_trace_sandwich_small(table24):
    kap = from_integer(0, 32)
    j_int = hull.h0_trace_integral(kap, 512, table24)
    rep = ruelle.trace_sandwich(kap, 12, table24, j_int)
    assert rep.trace_ok and rep.mass_ok
    assert rep.lower < rep.min_trace <= rep.max_trace < rep.upper


def test_mass_growth_small(table24):
    kap = from_pattern("(01)*", 33)
    rep = ruelle.mass_growth_probe(kap, 6, table24, 256, 0.05)
    assert rep.ratio < 10.0
    assert rep.pullback_residuals.max() < 1e-5
    assert rep.control_ok
    assert not rep.drift_flagged
    assert rep.evenness_residuals.max() < 1e-8
    # control grows geometrically while the genuine series stays bounded
    assert rep.control_series[-1] / rep.control_series[0] > (1 + rep.delta) ** 6

import math

import numpy as np
import pytest

from juliahull import dynamics
from juliahull.dynamics import (
    DomainError,
    MapParams,
    SingularWeight,
    balanced_quadrature,
    invariance_residual,
    orbit_of_zero,
    preimage_tree,
    scalar_ruelle,
    w_eval,
    w_preimage_sum,
    w_preimage_sum_grid,
    w_profile,
)

ONES = lambda y: np.ones_like(np.asarray(y, dtype=float))


def test_map_params():
    p = MapParams(4.0)
    assert abs(p.xi - 0.5 * (1 + math.sqrt(17))) < 1e-15
    assert p.xi ** 2 - p.xi - 4.0 < 1e-12
    assert p.apply(0.0) == -4.0
    with pytest.raises(DomainError):
        MapParams(1.5)


def test_orbit_examples(params):
    orb = orbit_of_zero(params, 3)
    assert list(orb.values) == [0.0, -4.0, 12.0, 140.0]
    assert orb.values[2] > params.xi


def test_orbit_monotone_and_log_scale(params):
    orb = orbit_of_zero(params, 60)
    vals = orb.values
    assert all(vals[k + 1] > vals[k] for k in range(2, 12))
    # beyond float range the log representation keeps going
    assert np.isinf(vals[20:]).all()
    assert np.isfinite(orb.log_abs[1:]).all()
    assert np.all(np.diff(orb.log_abs[2:]) > 0)


def test_preimage_examples(params):
    tree = preimage_tree(params, 0.0, 1)
    assert sorted(tree.leaves) == [-2.0, 2.0]
    for d in (3, 7):
        assert preimage_tree(params, 1.0, d).leaves.size == 2 ** d
    assert preimage_tree(params, 1.0, 10).forward_residual() < 1e-9
    with pytest.raises(DomainError):
        preimage_tree(params, -4.5, 2)


def test_preimage_leaves_trapped(params):
    tree = preimage_tree(params, params.xi, 12)
    assert np.abs(tree.leaves).max() <= params.xi + 1e-12
    # symmetric multiset
    assert abs(tree.leaves.sum()) < 1e-12


def test_quadrature_normalization(params):
    for d in (4, 10):
        nodes, weights = balanced_quadrature(params, d)
        assert abs(weights.sum() - 1.0) < 1e-15
        assert abs(np.sum(weights * ONES(nodes)) - 1.0) < 1e-15
    assert abs(np.mean(balanced_quadrature(params, 16)[0])) < 1e-8


def test_invariance_residuals(params):
    for f in (lambda x: x ** 2, lambda x: x ** 4):
        r = [invariance_residual(params, f, d) for d in (8, 12, 16)]
        assert r[0] >= r[1] >= r[2]
        assert r[2] < 1e-6


def test_invariance_nontrivial_function(params):
    # a rational integrand shows genuine decay before hitting the floor
    f = lambda x: 1.0 / (x + 3.0)
    assert invariance_residual(params, f, 4) > invariance_residual(params, f, 6)


def test_scalar_ruelle(params):
    assert scalar_ruelle(params, lambda y: 1.0, 0, 0.7) == 2.0
    assert scalar_ruelle(params, lambda y: 1.0, 1, 0.7) == 0.0
    assert scalar_ruelle(params, lambda y: 1.0, 2, 0.0) == 0.125
    with pytest.raises(SingularWeight):
        scalar_ruelle(params, lambda y: 1.0, 1, -4.0)
    with pytest.raises(DomainError):
        scalar_ruelle(params, lambda y: 1.0, 0, -4.5)


def test_w_spot_values(params):
    assert w_eval(params, 0.0, 0).value == 0.25
    assert abs(w_eval(params, 0.0, 1).value - 1.0 / 3.0) < 1e-15


def test_w_bounds_and_agreement(params):
    xs = np.linspace(-params.xi, params.xi, 60)
    prof = w_profile(params, xs, 12)
    lo, hi = 1.0 / (4 + params.xi), 1.0 / (4 - params.xi)
    assert prof.min() >= lo - 1e-12 and prof.max() <= hi + 1e-12
    for n in (0, 3, 8, 12):
        sums = w_preimage_sum_grid(params, xs, n)
        assert np.abs(prof[n] - sums).max() < 1e-10
    assert abs(w_preimage_sum(params, 1.0, 6)
               - w_eval(params, 1.0, 6).value) < 1e-12


def test_w_survives_orbit_overflow(params):
    # at n = 40 the orbit is far beyond float range; values stay bounded
    prof = w_profile(params, np.linspace(-params.xi, params.xi, 20), 40)
    assert np.isfinite(prof).all()
    lo, hi = 1.0 / (4 + params.xi), 1.0 / (4 - params.xi)
    assert prof.min() >= lo - 1e-12 and prof.max() <= hi + 1e-12


def test_w_outside_domain_flagged(params):
    wv = w_eval(params, 3.5, 2)
    assert not wv.x_in_domain
    assert w_eval(params, 1.0, 2).x_in_domain


def test_w_value_within_bounds_property(params):
    wv = w_eval(params, 0.5, 5)
    assert wv.within_bounds

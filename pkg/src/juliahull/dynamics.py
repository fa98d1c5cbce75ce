"""The quadratic map T(z) = z^2 - lambda on the real line.

Covers the critical orbit (in sign/log form, since it grows like
lambda^(2^n)), preimage trees and the balanced quadrature they induce,
the scalar transfer operators with weights 1/T'(y)^j, and the two-sided
bounded weight functions w_x^n evaluated at T(0) that form the pole basis
for the matrix transfer operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "MapParams",
    "CriticalOrbit",
    "PreimageTree",
    "WValue",
    "DomainError",
    "SingularWeight",
    "orbit_of_zero",
    "preimage_tree",
    "balanced_quadrature",
    "quadrature_mean",
    "invariance_residual",
    "scalar_ruelle",
    "w_profile",
    "w_eval",
    "w_preimage_sum",
    "nu_invariance_check",
]

_LOG_HUGE = 350.0  # beyond e^350 the -lambda correction is below float eps


class DomainError(ValueError):
    """The argument has no real preimages (x < -lambda)."""


class SingularWeight(ValueError):
    """A transfer-operator weight 1/T'(y)^j hit the critical point y = 0."""


@dataclass(frozen=True)
class MapParams:
    """Parameters of T(z) = z^2 - lambda, lambda > 2."""

    lam: float

    def __post_init__(self):
        if not self.lam > 2.0:
            raise DomainError(f"lambda = {self.lam} must be > 2")

    @cached_property
    def xi(self) -> float:
        """Positive fixed point of T; the Julia set lies in [-xi, xi]."""
        return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * self.lam))

    def apply(self, z):
        return z * z - self.lam

    def derivative(self, z):
        return 2.0 * z


@dataclass(frozen=True)
class CriticalOrbit:
    """T^k(0) for k = 0..n as (sign, log|.|) pairs; never overflows."""

    signs: np.ndarray
    log_abs: np.ndarray

    def __len__(self):
        return self.signs.size

    @cached_property
    def values(self) -> np.ndarray:
        """Float view; entries beyond float range saturate to +/-inf."""
        out = np.where(self.log_abs < 709.0,
                       np.exp(np.minimum(self.log_abs, 709.0)), np.inf)
        return self.signs * out


def orbit_of_zero(params: MapParams, n: int) -> CriticalOrbit:
    """The critical orbit 0, -lambda, lambda^2 - lambda, ... up to T^n(0)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    signs = np.zeros(n + 1, dtype=np.int8)
    logs = np.full(n + 1, -np.inf)
    s, ell = 0, -math.inf
    for k in range(1, n + 1):
        if k == 1:
            s, ell = -1, math.log(params.lam)
        elif ell < _LOG_HUGE:
            t = s * math.exp(ell)
            t2 = t * t - params.lam
            s, ell = (1 if t2 > 0 else -1), math.log(abs(t2))
        else:
            s, ell = 1, 2.0 * ell
        signs[k], logs[k] = s, ell
    return CriticalOrbit(signs=signs, log_abs=logs)


@dataclass(frozen=True)
class PreimageTree:
    """Complete binary tree of T-preimages of a root point.

    Leaves are stored so that positions 2i, 2i+1 hold the -/+ square-root
    children of node i of the previous level; the leaf multiset is exactly
    symmetric under y -> -y.
    """

    root: float
    depth: int
    leaves: np.ndarray
    lam: float

    @property
    def weight(self) -> float:
        return 0.5 ** self.depth

    def forward_residual(self) -> float:
        """Re-apply T depth times to every leaf and compare to the root."""
        y = self.leaves.copy()
        for _ in range(self.depth):
            y = y * y - self.lam
        return float(np.abs(y - self.root).max())


def _preimage_levels(params: MapParams, roots: np.ndarray, depth: int) -> np.ndarray:
    """Vectorized level-wise preimage expansion; roots may be an array."""
    lv = np.asarray(roots, dtype=np.float64)
    for _ in range(depth):
        arg = lv + params.lam
        if np.any(arg < 0):
            raise DomainError("point below -lambda has no real preimages")
        y = np.sqrt(arg)
        nxt = np.empty(2 * lv.size)
        nxt[0::2] = -y
        nxt[1::2] = y
        lv = nxt
    return lv


def preimage_tree(params: MapParams, x: float, depth: int) -> PreimageTree:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if x < -params.lam:
        raise DomainError(f"x = {x} < -lambda = {-params.lam}")
    leaves = _preimage_levels(params, np.array([x]), depth)
    return PreimageTree(root=x, depth=depth, leaves=leaves, lam=params.lam)


def balanced_quadrature(params: MapParams, depth: int, root: float | None = None):
    """Nodes and uniform weights approximating the balanced measure.

    The root defaults to xi, a point of the Julia set, so all nodes stay
    inside the trapping interval [-xi, xi].
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x0 = params.xi if root is None else root
    tree = preimage_tree(params, x0, depth)
    return tree.leaves, np.full(tree.leaves.size, tree.weight)


def quadrature_mean(params: MapParams, f, depth: int, root: float | None = None) -> float:
    nodes, _ = balanced_quadrature(params, depth, root)
    return float(np.mean(f(nodes)))


def invariance_residual(params: MapParams, f, depth: int) -> float:
    """| integral of f - (1/2) integral of (L_0 f) | at one quadrature depth."""
    nodes, _ = balanced_quadrature(params, depth)
    lhs = float(np.mean(f(nodes)))
    y = np.sqrt(nodes + params.lam)
    rhs = 0.5 * float(np.mean(f(y) + f(-y)))
    return abs(lhs - rhs)


def scalar_ruelle(params: MapParams, f, j: int, x: float) -> float:
    """Transfer-operator sum over the two preimages with weight 1/T'(y)^j."""
    if j not in (0, 1, 2):
        raise ValueError("j must be 0, 1 or 2")
    if x < -params.lam:
        raise DomainError(f"x = {x} < -lambda")
    y = math.sqrt(x + params.lam)
    if j >= 1 and y == 0.0:
        raise SingularWeight("preimage at the critical point y = 0")
    if j == 0:
        return f(y) + f(-y)
    if j == 1:
        return (f(y) - f(-y)) / (2.0 * y)
    return (f(y) + f(-y)) / (4.0 * y * y)


def w_profile(params: MapParams, xs, n_max: int,
              orbit: CriticalOrbit | None = None) -> np.ndarray:
    """w_x^k(T(0)) for k = 0..n_max on an array of x values.

    Uses the multiplicative one-step ratio in a form that stays finite when
    the critical orbit saturates to inf, so no log-space bookkeeping leaks
    out of the orbit object.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if orbit is None or len(orbit) < n_max + 1:
        orbit = orbit_of_zero(params, n_max)
    t = orbit.values
    out = np.empty((n_max + 1, xs.size))
    out[0] = 1.0 / (xs + params.lam)
    for k in range(1, n_max + 1):
        tk = t[k]
        num = xs / tk - 1.0
        den = ((xs + params.lam) / tk) / tk - 1.0
        out[k] = out[k - 1] * (num / den)
    return out


@dataclass(frozen=True)
class WValue:
    x: float
    n: int
    value: float
    lower: float
    upper: float
    x_in_domain: bool

    @property
    def within_bounds(self) -> bool:
        return self.lower <= self.value <= self.upper


def w_eval(params: MapParams, x: float, n: int) -> WValue:
    """Product-formula value of w_x^n(T(0)) with its two-sided bounds."""
    val = float(w_profile(params, [x], n)[n, 0])
    return WValue(x=x, n=n, value=val,
                  lower=1.0 / (params.lam + params.xi),
                  upper=1.0 / (params.lam - params.xi),
                  x_in_domain=bool(abs(x) <= params.xi))


def w_preimage_sum(params: MapParams, x: float, n: int) -> float:
    """Independent evaluation of w_x^n(T(0)): mean of 1/(y + lambda) over
    the depth-n preimages of x."""
    tree = preimage_tree(params, x, n)
    return float(np.mean(1.0 / (tree.leaves + params.lam)))


def w_preimage_sum_grid(params: MapParams, xs, n: int) -> np.ndarray:
    """Vectorized ``w_preimage_sum`` over an array of x values."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    lv = xs[:, None]
    for _ in range(n):
        arg = lv + params.lam
        if np.any(arg < 0):
            raise DomainError("point below -lambda has no real preimages")
        y = np.sqrt(arg)
        nxt = np.empty((lv.shape[0], 2 * lv.shape[1]))
        nxt[:, 0::2] = -y
        nxt[:, 1::2] = y
        lv = nxt
    return np.mean(1.0 / (lv + params.lam), axis=1)


def nu_invariance_check(params: MapParams, atom_x: np.ndarray, atom_w: np.ndarray,
                        a_minus1: float, f) -> float:
    """Residual of the adjoint eigen-equation for the half-line measure nu.

    Checks | integral of (L_2 f) d nu  -  rho * integral of f d nu | with
    rho = 1 / (2 a_{-1}^2), where nu is supplied as a list of point masses.
    """
    total = float(np.sum(atom_w))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"nu is not normalized: total mass {total}")
    y = np.sqrt(atom_x + params.lam)
    lhs = float(np.sum(atom_w * (f(y) + f(-y)) / (4.0 * (atom_x + params.lam))))
    rho = 1.0 / (2.0 * a_minus1 ** 2)
    rhs = rho * float(np.sum(atom_w * f(atom_x)))
    return abs(lhs - rhs)

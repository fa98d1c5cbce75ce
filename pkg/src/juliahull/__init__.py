"""Numerics for the hull of limit-periodic Jacobi matrices generated by the
real Julia set of z^2 - lambda.

Submodules:
    dyadic    -- truncated 2-adic integers, shifts, run-length classification
    coeffs    -- exact and float tables of the squared Jacobi coefficients
    dynamics  -- the quadratic map: orbits, preimage trees, scalar transfer
                 operators, the pole-basis weight functions
    hull      -- finite Jacobi windows, spectral matrix measures, resolvents,
                 conjugation/renormalization/reflection checks, atom probes
    ruelle    -- the matrix transfer operator on the pole basis, coefficient
                 iteration, scalar recurrences, positivity certificates
    verify    -- the umbrella certificate suite driven by the CLI
"""

__version__ = "0.1.0"

from . import coeffs, dyadic, dynamics, hull, ruelle  # noqa: F401

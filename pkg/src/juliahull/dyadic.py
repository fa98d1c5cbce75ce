"""Truncated dyadic (2-adic) integers and their symbolic dynamics.

A dyadic integer is an infinite little-endian binary digit sequence.  We
carry a finite number of trusted digits and account for precision
explicitly: each shift consumes one digit, and operations raise
``PrecisionExhausted`` rather than silently recycling untrusted digits.
Membership in the bounded-run classes F_N is therefore always reported
relative to a finite window, never as an absolute claim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DyadicInt",
    "RunProfile",
    "PrecisionExhausted",
    "from_integer",
    "from_digit_string",
    "from_pattern",
    "parse_kappa",
    "shift",
    "modified_shift",
    "negate",
    "add_integer",
    "double",
    "kappa_map",
    "run_profile",
    "sample_f_window",
]


class PrecisionExhausted(Exception):
    """An operation required more trusted digits than are available."""


@dataclass(frozen=True)
class DyadicInt:
    """A dyadic integer trusted to its first ``precision`` binary digits.

    ``digits`` is little-endian: ``digits[k]`` is the coefficient of 2^k.
    """

    digits: tuple

    def __post_init__(self):
        if len(self.digits) < 1:
            raise ValueError("a DyadicInt needs at least one digit")
        if any(b not in (0, 1) for b in self.digits):
            raise ValueError("digits must be 0 or 1")

    @property
    def precision(self) -> int:
        return len(self.digits)

    @property
    def is_odd(self) -> bool:
        return self.digits[0] == 1

    def to_representative(self) -> int:
        """The unique integer in [0, 2^precision) with these digits."""
        k = 0
        for b in reversed(self.digits):
            k = 2 * k + b
        return k

    def truncate(self, m: int) -> "DyadicInt":
        """Keep the first m digits (m <= precision)."""
        if not 1 <= m <= self.precision:
            raise PrecisionExhausted(
                f"cannot keep {m} of {self.precision} trusted digits"
            )
        return DyadicInt(self.digits[:m])

    def digit_string(self) -> str:
        return "".join(str(b) for b in self.digits)

    def __str__(self):
        return f"{self.digit_string()} (M={self.precision})"


@dataclass(frozen=True)
class RunProfile:
    """Longest runs of equal digits within an examined window."""

    max_zero_run: int
    max_one_run: int
    window: int

    @property
    def max_run(self) -> int:
        return max(self.max_zero_run, self.max_one_run)

    def within(self, n: int) -> bool:
        """True iff the window is consistent with membership in F_n."""
        return self.max_run <= n


def from_integer(n: int, precision: int = 64) -> DyadicInt:
    """Digits of n mod 2^precision; negatives enter via two's complement."""
    if precision < 1:
        raise ValueError("precision must be >= 1")
    k = n % (1 << precision)
    return DyadicInt(tuple((k >> i) & 1 for i in range(precision)))


def from_digit_string(s: str) -> DyadicInt:
    """Parse a little-endian digit string such as '0110'."""
    if not re.fullmatch(r"[01]+", s):
        raise ValueError(f"not a binary digit string: {s!r}")
    return DyadicInt(tuple(int(c) for c in s))


def from_pattern(text: str, precision: int = 64) -> DyadicInt:
    """Parse 'prefix(block)*': prefix digits, then block repeated.

    Example: '1(10)*' is 1 + 2 + 8 + 32 + ... (digits 1,1,0,1,0,...).
    """
    m = re.fullmatch(r"([01]*)\(([01]+)\)\*", text)
    if m is None:
        raise ValueError(f"not an eventually-periodic digit pattern: {text!r}")
    prefix, block = m.group(1), m.group(2)
    if precision < len(prefix) + 1:
        raise ValueError("precision too small for the pattern prefix")
    digits = [int(c) for c in prefix]
    i = 0
    while len(digits) < precision:
        digits.append(int(block[i % len(block)]))
        i += 1
    return DyadicInt(tuple(digits[:precision]))


def parse_kappa(text: str, precision: int = 64) -> DyadicInt:
    """Parse CLI input: decimal integer, digit string, or '(block)*' pattern.

    Strings consisting solely of 0/1 characters and at least two characters
    long are read as little-endian digit strings.
    """
    text = text.strip()
    if "(" in text:
        return from_pattern(text, precision)
    if re.fullmatch(r"[01]{2,}", text):
        return from_digit_string(text)
    return from_integer(int(text, 10), precision)


def shift(d: DyadicInt) -> DyadicInt:
    """Drop the least significant digit.  Consumes one digit of precision."""
    if d.precision < 2:
        raise PrecisionExhausted("shift: precision exhausted")
    return DyadicInt(d.digits[1:])


def _increment(bits: tuple) -> tuple:
    out = []
    carry = 1
    for b in bits:
        s = b + carry
        out.append(s & 1)
        carry = s >> 1
    return tuple(out)


def modified_shift(d: DyadicInt) -> DyadicInt:
    """The shift for even input, 1 + shift for odd input."""
    if d.precision < 2:
        raise PrecisionExhausted("modified_shift: precision exhausted")
    tail = d.digits[1:]
    if d.digits[0] == 0:
        return DyadicInt(tail)
    return DyadicInt(_increment(tail))


def negate(d: DyadicInt) -> DyadicInt:
    """Two's complement: complement every digit, then add one."""
    return DyadicInt(_increment(tuple(1 - b for b in d.digits)))


def add_integer(d: DyadicInt, n: int) -> DyadicInt:
    """d + n on representatives mod 2^precision."""
    return from_integer(d.to_representative() + n, d.precision)


def double(d: DyadicInt) -> DyadicInt:
    """2*d; gains one trusted digit (the new zero in position 0)."""
    return DyadicInt((0,) + d.digits)


def kappa_map(d: DyadicInt, n_terms: int) -> DyadicInt:
    """Digit n of the result is digit 0 of the n-th modified shift of d."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if d.precision < n_terms + 1:
        raise PrecisionExhausted(
            f"kappa_map needs precision >= {n_terms + 1}, got {d.precision}"
        )
    bits = []
    cur = d
    for n in range(n_terms):
        bits.append(cur.digits[0])
        if n < n_terms - 1:
            cur = modified_shift(cur)
    return DyadicInt(tuple(bits))


def run_profile(d: DyadicInt, window: int | None = None) -> RunProfile:
    """Longest runs of zeros and of ones among the first ``window`` digits."""
    w = d.precision if window is None else window
    if w > d.precision:
        raise PrecisionExhausted(f"window {w} exceeds precision {d.precision}")
    bits = d.digits[:w]
    best = {0: 0, 1: 0}
    i = 0
    while i < w:
        j = i
        while j < w and bits[j] == bits[i]:
            j += 1
        best[bits[i]] = max(best[bits[i]], j - i)
        i = j
    return RunProfile(max_zero_run=best[0], max_one_run=best[1], window=w)


def sample_f_window(rng: np.random.Generator, n_max_run: int, precision: int) -> DyadicInt:
    """Random digit string whose runs within the window are all <= n_max_run."""
    if n_max_run < 1:
        raise ValueError("n_max_run must be >= 1")
    bits = [int(rng.integers(0, 2))]
    run = 1
    for _ in range(precision - 1):
        if run >= n_max_run:
            b = 1 - bits[-1]
        else:
            b = int(rng.integers(0, 2))
        run = run + 1 if b == bits[-1] else 1
        bits.append(b)
    return DyadicInt(tuple(bits))

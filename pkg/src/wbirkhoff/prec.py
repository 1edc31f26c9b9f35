"""Extended-precision scalar support.

All averaging computations run on mpmath reals/complexes ("ExtReal" /
"ExtComplex") whose precision is counted in decimal digits.  Functions in
this package take an explicit ``precision`` (decimal digits) and do their
work inside a ``working(precision)`` block; values returned from such a
block keep the mantissa they were created with.

Conventions used throughout:

* inputs given as int / str / Fraction are converted exactly at the working
  precision (floats are accepted and treated as the exact dyadic they are);
* summation uses ``mpmath.fsum``, which accumulates exactly and rounds once,
  so results do not depend on summation order or chunking.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from fractions import Fraction

from mpmath import mp, mpc, mpf

ExtReal = mpf
ExtComplex = mpc

#: extra decimal digits carried internally on top of a requested precision
GUARD_DIGITS = 10

#: minimum precision accepted by averaging runs
MIN_PRECISION = 30

ENV_PRECISION = "WBIRKHOFF_PRECISION"


def default_precision() -> int:
    """Default working precision in decimal digits (env-overridable)."""
    raw = os.environ.get(ENV_PRECISION)
    if raw is None:
        return 50
    return max(MIN_PRECISION, int(raw))


@contextmanager
def working(dps: int):
    """Context manager setting the mpmath working precision in digits."""
    with mp.workdps(int(dps)):
        yield mp


def to_real(value, dps: int | None = None) -> mpf:
    """Convert a number-like value to an ExtReal at the given precision.

    Strings are parsed as exact decimal literals, Fractions are divided at
    working precision, ints and floats convert exactly.
    """
    with mp.workdps(dps or mp.dps):
        if isinstance(value, Fraction):
            return mpf(value.numerator) / value.denominator
        if isinstance(value, str):
            return mpf(value.strip())
        return mpf(value)


def fsum(terms) -> mpf:
    """Exact-accumulation sum of real terms, rounded once."""
    return mp.fsum(terms)


def fsum_c(terms) -> mpc:
    """Exact-accumulation sum of complex terms, rounded once."""
    return mp.fsum(terms)


def nearest_int(x: mpf) -> int:
    """Nearest integer to x (ties round half away from zero)."""
    return int(mp.nint(x))


def dist_to_z(x: mpf) -> mpf:
    """Distance from x to the nearest integer."""
    return abs(x - mp.nint(x))


def digits_of(n: int) -> int:
    """Decimal digits needed to write n, used to size precision guards."""
    return len(str(abs(int(n)))) if n else 1

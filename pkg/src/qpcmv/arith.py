"""Exact and extended-precision real helpers.

Torus coordinates and frequencies are carried either as exact
``fractions.Fraction`` values or as mpmath floats.  Every finite binary
float (Python float or mpf) is itself a rational number, so conversion to
``Fraction`` is lossless; conversion the other way rounds to the current
mpmath working precision.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction

from mpmath import mp

from .errors import DomainError

DEFAULT_PRECISION_BITS = 256


@contextmanager
def working_precision(bits: int):
    """Temporarily set the mpmath binary working precision."""
    with mp.workprec(bits):
        yield


def mpf_to_fraction(x) -> Fraction:
    """Lossless conversion of a finite mpf to an exact rational."""
    # read the raw mantissa tuple; mp.mpf(x) would re-round to the current
    # working precision and silently discard bits
    sign, man, exp, _ = x._mpf_ if hasattr(x, "_mpf_") else mp.mpf(x)._mpf_
    man = int(man)
    exp = int(exp)
    if man == 0 and exp != 0:
        raise DomainError("non-finite value cannot become a Fraction")
    num = -man if sign else man
    if exp >= 0:
        return Fraction(num << exp, 1)
    return Fraction(num, 1 << (-exp))


def as_fraction(x) -> Fraction:
    """Exact conversion from int/float/str/Fraction/mpf.

    Strings accept both decimal ("0.3") and ratio ("3/10") forms and are
    parsed exactly.  Floats convert via their binary expansion, which is
    exact but usually not the decimal the user typed; prefer strings for
    decimal inputs.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if isinstance(x, mp.mpf):
        return mpf_to_fraction(x)
    return Fraction(x)


def fraction_to_mpf(x: Fraction, bits: int = DEFAULT_PRECISION_BITS):
    with mp.workprec(bits):
        return mp.mpf(x.numerator) / x.denominator


def floor_int(x) -> int:
    """Floor of a real-like value as a Python int."""
    if isinstance(x, Fraction):
        return x.numerator // x.denominator
    if isinstance(x, int):
        return x
    if isinstance(x, mp.mpf):
        return int(mp.floor(x))
    return math.floor(x)


def mod1(x):
    """Reduce to [0, 1), preserving the arithmetic type."""
    return x - floor_int(x)


def dist_to_int(x):
    """Distance from x to the nearest integer, in [0, 1/2]."""
    f = mod1(x)
    other = 1 - f
    return f if f <= other else other


def signed_frac(x):
    """Representative of x mod 1 in (-1/2, 1/2]."""
    f = mod1(x)
    if 2 * f > 1:
        return f - 1
    return f

"""Continued-fraction analysis of rotation frequencies.

A :class:`Frequency` stores a number in (0, 1) as an exact rational
together with its continued-fraction expansion and convergents.  When the
stored rational only approximates an irrational target (e.g. the golden
mean rounded to 256 bits), ``precision_bits`` records how many bits are
trusted and the expansion stops before fabricating quotients the input
cannot support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from mpmath import mp

from .arith import (
    DEFAULT_PRECISION_BITS,
    as_fraction,
    dist_to_int,
    mpf_to_fraction,
)
from .errors import DomainError, PrecisionError

# Quotients are dropped once the convergent error 1/(q_k q_{k+1}) falls
# below the trust radius of the input, with this many guard bits.
_CF_GUARD_BITS = 8

# badly_approximable_score keeps at least this many significant bits in
# q * <q a> before it will return a value.
_SCORE_GUARD_BITS = 32

DEFAULT_BADLY_APPROXIMABLE_THRESHOLD = 0.01


@dataclass(frozen=True)
class Frequency:
    """A frequency in (0, 1) with its continued-fraction data.

    ``convergents[k]`` is the coprime pair (p_{k+1}, q_{k+1}) matching
    ``partial_quotients[k]``; the 0th convergent (0, 1) is implicit.
    ``precision_bits is None`` means the rational value is exact (it *is*
    the number, not an approximation of one).
    """

    value: Fraction
    partial_quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    truncated: bool
    precision_limited: bool
    precision_bits: Optional[int] = None
    designated_denominators: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (0 < self.value < 1):
            raise DomainError(f"frequency must lie in (0,1), got {self.value}")

    @property
    def is_exact(self) -> bool:
        return self.precision_bits is None

    def convergent_denominators(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.convergents)


def _expand(value: Fraction, terms: int, precision_bits: Optional[int]):
    """Euclidean continued-fraction loop with a precision floor."""
    quotients: list[int] = []
    convergents: list[tuple[int, int]] = []
    p_prev, q_prev = 1, 0  # (p_0, q_0) seeds: previous pair is (0, 1)
    p_cur, q_cur = 0, 1
    truncated = False
    limited = False
    x = value
    limit = None
    if precision_bits is not None:
        limit = 1 << max(precision_bits - _CF_GUARD_BITS, 1)
    while len(quotients) < terms:
        if x == 0:
            truncated = True
            break
        inv = 1 / x
        a = inv.numerator // inv.denominator
        p_next = a * p_cur + p_prev
        q_next = a * q_cur + q_prev
        if limit is not None and q_cur * q_next > limit:
            # |value - p_cur/q_cur| < 1/(q_cur q_next) is already below the
            # trust radius of the input; further quotients would be noise.
            limited = True
            break
        quotients.append(a)
        convergents.append((p_next, q_next))
        p_prev, q_prev = p_cur, q_cur
        p_cur, q_cur = p_next, q_next
        x = inv - a
    return tuple(quotients), tuple(convergents), truncated, limited


def continued_fraction(
    a,
    terms: int,
    precision_bits: Optional[int] = None,
) -> Frequency:
    """Expand ``a`` in (0,1) to at most ``terms`` partial quotients.

    Rational input exhausts the expansion early and sets the truncation
    flag; inexact input (``precision_bits`` given) stops at the precision
    floor instead and sets ``precision_limited``.
    """
    if terms < 1:
        raise DomainError("terms must be >= 1")
    if isinstance(a, float) and precision_bits is None:
        precision_bits = 53
    if isinstance(a, mp.mpf) and precision_bits is None:
        precision_bits = mp.prec
    value = as_fraction(a)
    if not (0 < value < 1):
        raise DomainError(f"expected a in (0,1), got {value}")
    quotients, convergents, truncated, limited = _expand(
        value, terms, precision_bits
    )
    return Frequency(
        value=value,
        partial_quotients=quotients,
        convergents=convergents,
        truncated=truncated,
        precision_limited=limited,
        precision_bits=precision_bits,
    )


def golden_mean(bits: int = DEFAULT_PRECISION_BITS, terms: int = 64) -> Frequency:
    """(sqrt(5)-1)/2 rounded to ``bits`` bits, with its expansion."""
    with mp.workprec(bits):
        g = (mp.sqrt(5) - 1) / 2
    return continued_fraction(mpf_to_fraction(g), terms, precision_bits=bits)


def distance_to_integers(x):
    """min over integers m of |x - m|; exact for Fraction input."""
    return dist_to_int(as_fraction(x) if isinstance(x, str) else x)


@dataclass(frozen=True)
class ScoreScan:
    """Result of a finite scan of q * <q a> for 1 <= q <= Q.

    The verdict is a finite-scan report, not a proof: the frequency is
    *reported* badly approximable when the scanned minimum exceeds the
    threshold.
    """

    min_score: Fraction
    argmin_q: int
    per_convergent: tuple[tuple[int, Fraction], ...]
    q_max: int
    threshold: float
    reported_badly_approximable: bool

    def min_score_float(self) -> float:
        return float(self.min_score)


def badly_approximable_score(
    freq: Frequency,
    q_max: int,
    threshold: float = DEFAULT_BADLY_APPROXIMABLE_THRESHOLD,
) -> ScoreScan:
    """Brute-force min of q * <q a> over 1 <= q <= q_max, exactly.

    The minimum over the full range provably occurs at a convergent
    denominator (best-approximation property); this is re-checked and a
    violation raises, since it would mean the expansion is wrong.
    """
    if q_max < 2:
        raise DomainError("q_max must be >= 2")
    if freq.precision_bits is not None:
        need = 2 * q_max.bit_length() + _SCORE_GUARD_BITS
        if need > freq.precision_bits:
            raise PrecisionError(
                f"scanning q <= {q_max} needs ~{need} bits, frequency only "
                f"trusted to {freq.precision_bits}"
            )
    num = freq.value.numerator
    den = freq.value.denominator
    acc = 0
    best_num: Optional[int] = None
    best_q = 0
    for q in range(1, q_max + 1):
        acc += num
        if acc >= den:
            acc -= den * (acc // den)
        d = acc if 2 * acc <= den else den - acc
        s = q * d
        if best_num is None or s < best_num:
            best_num = s
            best_q = q
            if s == 0:
                break
    min_score = Fraction(best_num, den)
    allowed = {1} | {q for _, q in freq.convergents}
    if best_q not in allowed:
        raise RuntimeError(
            f"score minimum at q={best_q} is not a convergent denominator; "
            "continued-fraction data is inconsistent"
        )
    per = tuple(
        (q, q * dist_to_int(q * freq.value))
        for _, q in freq.convergents
        if q <= q_max
    )
    return ScoreScan(
        min_score=min_score,
        argmin_q=best_q,
        per_convergent=per,
        q_max=q_max,
        threshold=threshold,
        reported_badly_approximable=min_score > Fraction(threshold),
    )


def liouville_frequency(
    base: int,
    depth: int,
    terms: int = 32,
    max_bits: int = 1_000_000,
) -> Frequency:
    """a = sum_{n=1..depth} base^(-n!) with repetition denominators base^(n!).

    The value is exact, so q_n * <a q_n> along the returned denominators is
    computed exactly; it decreases to 0 (the final denominator clears the
    sum entirely).
    """
    if base < 2:
        raise DomainError("base must be >= 2")
    if depth < 2:
        raise DomainError("depth must be >= 2")
    top = math.factorial(depth)
    bits_needed = top * max(base.bit_length() - 1, 1) + base.bit_length()
    if bits_needed > max_bits:
        raise PrecisionError(
            f"base={base}, depth={depth} needs ~{bits_needed} bits "
            f"(budget {max_bits})"
        )
    value = Fraction(0)
    dens = []
    for n in range(1, depth + 1):
        q = base ** math.factorial(n)
        value += Fraction(1, q)
        dens.append(q)
    quotients, convergents, truncated, limited = _expand(value, terms, None)
    return Frequency(
        value=value,
        partial_quotients=quotients,
        convergents=convergents,
        truncated=truncated,
        precision_limited=limited,
        precision_bits=None,
        designated_denominators=tuple(dens),
    )


def parse_frequency(text: str, bits: int = DEFAULT_PRECISION_BITS,
                    terms: int = 48) -> Frequency:
    """CLI-facing parser: 'golden', 'liouville:BASE,DEPTH', 'p/q' or decimal."""
    text = text.strip()
    if text == "golden":
        return golden_mean(bits=bits, terms=terms)
    if text.startswith("liouville:"):
        spec = text.split(":", 1)[1]
        base_s, depth_s = spec.split(",")
        return liouville_frequency(int(base_s), int(depth_s), terms=terms)
    return continued_fraction(Fraction(text), terms=terms, precision_bits=None)

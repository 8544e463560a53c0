from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from qpcmv.arith import as_fraction, dist_to_int, mpf_to_fraction
from qpcmv.dynamics import (
    RepetitionCertificate,
    Rotation,
    SkewShift,
    TorusPoint,
    ap_max_dist,
    block_displacement,
    find_even_repetition,
    iterate,
    skew_repetition_times,
)
from qpcmv.errors import DomainError
from qpcmv.frequency import golden_mean, liouville_frequency

GOLDEN = golden_mean()

fractions_01 = st.fractions(min_value=0, max_value=1).filter(lambda f: f < 1)


def skew(a):
    return SkewShift(as_fraction(a))


def test_skew_one_step_matches_definition():
    # single application: (w1, w2) -> (w1 + 2a, w1 + w2)
    a = Fraction(1, 7)
    T = skew(a)
    w = TorusPoint.exact(Fraction(2, 5), Fraction(3, 5))
    got = iterate(T, w, 1)
    assert got.coords == (
        (Fraction(2, 5) + 2 * a) % 1,
        (Fraction(2, 5) + Fraction(3, 5)) % 1,
    )


def test_iterate_identity():
    T = skew(Fraction(1, 10))
    w = TorusPoint.exact("0.2", "0.3")
    assert iterate(T, w, 0) == w
    R = Rotation([Fraction(2, 7), Fraction(1, 3)])
    w2 = TorusPoint.exact("0.9", "0.1")
    assert iterate(R, w2, 0) == w2


def test_skew_closed_form_vs_repeated_application():
    T = skew("0.1")
    w = TorusPoint.exact("0.2", "0.3")
    stepped = w
    for _ in range(7):
        stepped = iterate(T, stepped, 1)
    assert iterate(T, w, 7) == stepped


@given(
    a=fractions_01,
    w1=fractions_01,
    w2=fractions_01,
    m=st.integers(min_value=-50, max_value=50),
    n=st.integers(min_value=-50, max_value=50),
)
@settings(max_examples=150, deadline=None)
def test_group_property_exact(a, w1, w2, m, n):
    T = skew(a)
    w = TorusPoint([w1, w2])
    assert iterate(T, iterate(T, w, m), n) == iterate(T, w, m + n)
    R = Rotation([a])
    v = TorusPoint([w1])
    assert iterate(R, iterate(R, v, m), n) == iterate(R, v, m + n)


def test_block_displacement_zero_q():
    T = skew("0.37")
    w = TorusPoint.exact("0.11", "0.91")
    assert block_displacement(T, w, 3, 0).coords == (0, 0)


def test_block_displacement_worked_example():
    # a=0.1, w1=0.2, n=1, q=2: (0.4, 0.4+0.4+0.4-0.2) = (0.4, 0.0)
    T = skew("0.1")
    w = TorusPoint.exact("0.2", "0.3")
    d = block_displacement(T, w, 1, 2)
    assert d.coords == (Fraction(2, 5), 0)
    p = iterate(T, w, 3)
    p0 = iterate(T, w, 1)
    direct = TorusPoint([x - y for x, y in zip(p.coords, p0.coords)])
    assert d == direct


@given(
    a=fractions_01,
    w1=fractions_01,
    w2=fractions_01,
    n=st.integers(min_value=-30, max_value=30),
    q=st.integers(min_value=0, max_value=40),
)
@settings(max_examples=150, deadline=None)
def test_block_displacement_matches_iterates(a, w1, w2, n, q):
    T = skew(a)
    w = TorusPoint([w1, w2])
    d = block_displacement(T, w, n, q)
    p1 = iterate(T, w, n + q)
    p0 = iterate(T, w, n)
    direct = TorusPoint([x - y for x, y in zip(p1.coords, p0.coords)])
    assert d == direct


def test_block_displacement_extended_precision():
    # at 256 bits the closed formula and iterate subtraction agree far
    # below 1e-25 even for large n, q
    with mp.workprec(256):
        a = mpf_to_fraction(mp.sqrt(2) - 1)
        w = TorusPoint([mpf_to_fraction(mp.sqrt(3) - 1), Fraction(1, 7)])
    T = SkewShift(a)
    d = block_displacement(T, w, 10**6 + 1, 99 * 2)
    p1 = iterate(T, w, 10**6 + 1 + 198)
    p0 = iterate(T, w, 10**6 + 1)
    direct = TorusPoint([x - y for x, y in zip(p1.coords, p0.coords)])
    assert d.dist(direct) == 0  # exact in rational arithmetic


def test_find_even_repetition_golden():
    rot = Rotation([GOLDEN.value])
    w = TorusPoint([Fraction(0)])
    cert = find_even_repetition(rot, w, Fraction(1, 100), 4, 200)
    assert cert.q == 144
    assert cert.validated == "full-scan"
    assert float(cert.max_deviation) == pytest.approx(0.0031056, abs=2e-6)
    assert cert.max_deviation < Fraction(32, 10**4)


def test_find_even_repetition_half():
    rot = Rotation([Fraction(1, 2)])
    w = TorusPoint.exact("0.3")
    cert = find_even_repetition(rot, w, Fraction(1, 10**6), 4, 50)
    assert cert.q == 2
    assert cert.max_deviation == 0


def test_skew_badly_approximable_finds_nothing():
    # golden-mean skew-shift: no even repetition time up to 100 for small
    # epsilon (brute-force confirmed by the scan fallback inside)
    T = SkewShift(GOLDEN.value)
    w = TorusPoint.exact("0.3", "0.7")
    assert find_even_repetition(T, w, Fraction(1, 20), 4, 100) is None


def test_rotation_deviation_independent_of_position():
    rot = Rotation([GOLDEN.value])
    w = TorusPoint.exact("0.123")
    q = 34
    ds = {
        iterate(rot, w, n).dist(iterate(rot, w, n + q)) for n in range(50)
    }
    assert len(ds) == 1


def test_rotation_shortcut_equals_orbit_scan():
    rot = Rotation([GOLDEN.value])
    w = TorusPoint.exact("0.4")
    for q in (2, 8, 144):
        shortcut = dist_to_int(q * GOLDEN.value)
        scanned = max(
            iterate(rot, w, n).dist(iterate(rot, w, n + q))
            for n in range(4 * q + 1)
        )
        assert shortcut == scanned


@given(num=st.integers(min_value=1, max_value=499))
@settings(max_examples=60, deadline=None)
def test_even_search_reduces_to_doubled_frequency(num):
    # even repetition for rotation by a at time q equals plain repetition
    # for rotation by 2a at time q/2 (window scaled to match)
    a = Fraction(num, 500)
    if a == Fraction(1, 2):
        a = Fraction(1, 3)
    rot_a = Rotation([a])
    rot_2a = Rotation([(2 * a) % 1])
    w = TorusPoint([Fraction(0)])
    eps = Fraction(1, 25)
    even = find_even_repetition(rot_a, w, eps, 2, 100, parity="even")
    plain = find_even_repetition(rot_2a, w, eps, 4, 50, parity="any")
    if even is None:
        assert plain is None
    else:
        assert plain is not None
        assert even.q == 2 * plain.q


@given(
    c=fractions_01,
    d=fractions_01,
    n_max=st.integers(min_value=0, max_value=400),
)
@settings(max_examples=150, deadline=None)
def test_ap_max_matches_brute_force(c, d, n_max):
    m = ap_max_dist(c, d, n_max)
    brute = max(dist_to_int(c + n * d) for n in range(n_max + 1))
    if m.exact:
        assert m.lower == brute
        assert dist_to_int(c + m.argmax * d) == brute
    else:
        assert m.lower <= brute <= m.upper


def test_skew_repetition_times_liouville():
    freq = liouville_frequency(2, 4)
    w = TorusPoint.exact("0.3", "0.7")
    res = skew_repetition_times(freq, w, Fraction(1, 10), 1)
    assert res.m_range == 11
    assert len(res.certificates) >= 1
    for cert in res.certificates:
        assert cert.q % 2 == 0
        assert 1 <= cert.m <= 11
        assert cert.deviation_upper < 5 * Fraction(1, 10)
        assert cert.validated in ("full-scan", "spot-scan")
    # the deepest level repeats exactly up to the w1 term
    top = res.certificates[-1]
    assert top.base_q == 2**24


def test_skew_repetition_times_zero_w1():
    freq = liouville_frequency(2, 3)
    w = TorusPoint([Fraction(0), Fraction(2, 7)])
    res = skew_repetition_times(freq, w, Fraction(1, 10), 1)
    assert all(c.m == 1 for c in res.certificates)


def test_skew_rational_frequency_periodicity():
    # rational a = p/q0 in lowest terms: at multiples of 2 q0 every a-term
    # of the displacement is an integer, leaving only the w1 contribution
    a = Fraction(3, 4)
    T = skew(a)
    w = TorusPoint.exact("0.05", "0.6")
    for mult in (1, 2, 3):
        q = 2 * 4 * mult
        expected = dist_to_int(q * w.coords[0])
        measured = max(
            iterate(T, w, n).dist(iterate(T, w, n + q)) for n in range(2 * q)
        )
        assert measured == expected


def test_group_property_extended_precision():
    from mpmath import mp

    from qpcmv.arith import working_precision

    with working_precision(160):
        T = SkewShift(mp.sqrt(2) - 1)
        w = TorusPoint([mp.mpf(1) / 7, mp.mpf(2) / 11])
        a = iterate(T, iterate(T, w, 23), -50)
        b = iterate(T, w, -27)
        assert float(a.dist(b)) < 1e-40


def test_rotation_rationality_flags():
    assert Rotation([Fraction(1, 3)]).rationality_flags() == (True,)
    assert Rotation([GOLDEN.value]).rationality_flags() == (False,)
    assert Rotation([Fraction(2, 7), GOLDEN.value]).rationality_flags() == (
        True,
        False,
    )


def test_certificate_rejects_odd_or_failing():
    with pytest.raises(DomainError):
        RepetitionCertificate(
            q=3, epsilon=Fraction(1), window_factor=Fraction(1), window=1,
            threshold=Fraction(1, 2), max_deviation=Fraction(0),
            deviation_upper=Fraction(0), argmax=0, exact=True,
        )
    with pytest.raises(DomainError):
        RepetitionCertificate(
            q=2, epsilon=Fraction(1, 10), window_factor=Fraction(1), window=1,
            threshold=Fraction(1, 10), max_deviation=Fraction(1, 2),
            deviation_upper=Fraction(1, 2), argmax=0, exact=True,
        )

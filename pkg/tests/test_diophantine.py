import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotfourier.diophantine import (
    Convergent,
    PrecisionExhausted,
    continued_fraction,
    convergents,
    f_map,
    is_square,
    mod_inverse,
    square_convergents,
    witness_candidate,
    xi_transform,
)
from rotfourier.numkit import BigReal, parse_real


def _golden(bits=256):
    with mpmath.workprec(bits + 32):
        return BigReal.of((1 + mpmath.sqrt(5)) / 2, bits)


def test_golden_ratio_all_ones():
    assert continued_fraction(_golden(), 40) == [1] * 40


def test_exact_rational():
    assert continued_fraction(parse_real("0.25", 128), 5) == [0, 4]


def test_pi_expansion():
    with mpmath.workprec(300):
        pi = BigReal.of(+mpmath.pi, 256)
    # classical expansion [3; 7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14]
    assert continued_fraction(pi, 13) == [3, 7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14]
    fr = [c.as_fraction() for c in convergents(pi, 5)]
    assert Fraction(22, 7) in fr and Fraction(333, 106) in fr and Fraction(355, 113) in fr


def test_golden_convergents_are_fibonacci_ratios():
    fib = [1, 1]
    while len(fib) < 30:
        fib.append(fib[-1] + fib[-2])
    convs = convergents(_golden(), 25)
    assert [(c.numerator, c.denominator) for c in convs] == [(fib[i + 1], fib[i]) for i in range(25)]


def test_precision_exhausted():
    with pytest.raises(PrecisionExhausted):
        continued_fraction(parse_real("pi-3", 64), 200)


@given(st.floats(0.001, 0.999), st.integers(64, 512))
def test_convergent_bound(x, bits):
    v = BigReal.of(mpmath.mpf(x) * mpmath.sqrt(2) / 2, bits)
    try:
        convs = convergents(v, 12)
    except PrecisionExhausted as exc:
        convs = convergents(v, max(exc.found, 1)) if exc.found else []
    with mpmath.workprec(bits):
        for c in convs:
            assert abs(v.value - mpmath.mpf(c.numerator) / c.denominator) < mpmath.mpf(1) / c.denominator**2


def test_xi_identity():
    for t in [0.1 * k for k in range(1, 10)]:
        theta = BigReal.of(t, 200)
        xi = xi_transform(theta)
        assert 0 < xi.value < 1
        with mpmath.workprec(200):
            assert abs(f_map(xi.value) - mpmath.sqrt(1 - theta.value)) < mpmath.mpf(2) ** -190


def test_xi_half():
    with mpmath.workprec(200):
        assert abs(xi_transform(BigReal.of("0.5", 200)).value - (mpmath.sqrt(2) - 1)) < mpmath.mpf(2) ** -190


def test_witness_3_5():
    w = witness_candidate(3, 5)
    assert (w["m"], w["k"], w["n"]) == (30, 16, 34)
    assert (w["p_raw"], w["q_raw"], w["d"]) == (256, 1156, 4)
    assert (w["p"], w["q"]) == (64, 289)
    assert w["q"] - w["p"] == 225 == 15**2


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_witness_gcd_always_square(r, s):
    if r >= s or math.gcd(r, s) != 1:
        return
    w = witness_candidate(r, s)
    assert w["m"] ** 2 + w["k"] ** 2 == w["n"] ** 2
    assert is_square(w["d"]) and is_square(w["p"]) and is_square(w["q"]) and is_square(w["q"] - w["p"])


def test_mod_inverse_examples():
    assert mod_inverse(4, 9) == 7
    assert mod_inverse(1, 7) == 1
    assert mod_inverse(1, 1) == 1
    with pytest.raises(ValueError):
        mod_inverse(6, 9)


@given(st.integers(2, 10**9), st.integers(1, 10**9))
def test_mod_inverse_brute(q, u):
    if math.gcd(u, q) != 1:
        return
    p0 = mod_inverse(u, q)
    assert 1 <= p0 <= q - 1 and (u * p0) % q == 1


def test_convergent_validation():
    with pytest.raises(ValueError):
        Convergent(2, 4)
    with pytest.raises(ValueError):
        Convergent(1, 0)


def test_square_convergent_input_validation():
    th = parse_real("pi-3")
    for kwargs in ({"count": 0}, {"count": 1, "exponent": 1.5}):
        with pytest.raises(ValueError):
            square_convergents(th, **kwargs)
    with pytest.raises(ValueError):
        square_convergents(BigReal.of(1.5, 128), 1)


def test_pi_minus_3_has_no_cubic_records_at_default_precision():
    # best achievable exponent for pi - 3 is far below 3 at 256 bits
    assert square_convergents(parse_real("pi-3"), 4, 3.0) == []


def test_partial_result_raises_with_count():
    th = parse_real("sq-liouville-cubic", 4096)
    with pytest.raises(PrecisionExhausted) as info:
        square_convergents(th, 4, 3.0)
    assert info.value.found == 3


def test_records_are_square_and_accurate():
    th = parse_real("sq-liouville", 8192)
    recs = square_convergents(th, 4, 2.0)
    assert [r.q for r in recs] == sorted(r.q for r in recs)
    for r in recs:
        assert r.p_root**2 == r.p and r.qp_root**2 == r.q - r.p
        assert Fraction(r.k**2, r.n**2) == Fraction(r.p, r.q)
        assert r.theta_above and not r.complement
        with mpmath.workprec(8192):
            err = th.value - mpmath.mpf(r.p) / r.q
            assert 0 < err < mpmath.mpf(r.q) ** -2
            assert err == r.err.value


def test_complement_records():
    # 1 - sq-liouville has all its good square convergents above it
    with mpmath.workprec(8192):
        th = BigReal(1 - parse_real("sq-liouville", 8192).value, 8192)
    recs = square_convergents(th, 2, 2.0)
    assert recs and all(r.complement for r in recs)

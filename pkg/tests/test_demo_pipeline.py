"""The end-to-end properties of the pi - 3 criteria, on constructed angles.

``sq-liouville`` has square convergents with theta - p/q = 1/(beta q)^2 for
beta = 6, 9, 12, 15 (exponent just above 2); ``sq-liouville-cubic`` has four
with error q^-3 / 4.
"""
import time

import mpmath
import pytest

from rotfourier import bounds
from rotfourier.cli import VerifyConfig, run_verify
from rotfourier.diophantine import is_square, square_convergents
from rotfourier.frame import make_frame
from rotfourier.numkit import parse_real

from test_acceptance import _check_report


@pytest.fixture(scope="module")
def liouville():
    theta = parse_real("sq-liouville", 8192)
    return theta, [make_frame(theta, sc) for sc in square_convergents(theta, 4, 2.0)]


def test_cubic_constant_has_four_exponent_three_records():
    theta = parse_real("sq-liouville-cubic", 24576)
    recs = square_convergents(theta, 4, 3.0)
    assert len(recs) == 4
    with mpmath.workprec(24576):
        for r in recs:
            assert is_square(r.p) and is_square(r.q) and is_square(r.q - r.p)
            assert is_square(r.gcd_witness)
            assert abs(theta.value - mpmath.mpf(r.p) / r.q) < mpmath.mpf(r.q) ** -3
    assert square_convergents(theta, 4, 3.0) == recs


def test_report_on_liouville_constant():
    t0 = time.perf_counter()
    report = run_verify(VerifyConfig(theta_expr="sq-liouville", precision_bits=8192, exponent=2.0))
    assert time.perf_counter() - t0 < 300
    _check_report(report)
    assert all(report.meta["monotone_decrease"].values())
    assert [round(r["beta"], 3) for r in report.rows] == [6.0, 9.0, 12.0, 15.0]


def test_trace_matches_inverse_beta_squared(liouville):
    _, frames = liouville
    for f in frames:
        with mpmath.workprec(f.theta.precision_bits):
            tr = bounds.trace_e(f).value
            assert 0 < tr < 1
            assert abs(tr * f.beta_big.value ** 2 - 1) < mpmath.mpf(10) ** -20


def test_c_q_against_independent_theta(liouville):
    _, frames = liouville
    for f in frames:
        # theta3 - 1 is tiny: carry enough bits to resolve it
        bits = int(f.gp.alpha * f.gp.beta**2 * 2.3) + 128
        with mpmath.workprec(bits):
            beta = f.beta_big.value
            alpha = mpmath.sqrt(beta**2 / 4 - 1)
            nome = mpmath.exp(-mpmath.pi * alpha * beta**2 / 2)
            oracle = 3 * (mpmath.jtheta(3, 0, nome) - 1)
            assert abs(bounds.c_q(f) / oracle - 1) < 1e-15
            if f.q >= 25:
                assert bounds.c_q(f) < 1e-6


def test_numeric_centrality_below_analytic(liouville):
    _, frames = liouville
    for f in frames:
        rep = bounds.centrality_bounds(f)
        assert rep.eps1_numeric <= rep.eps1_analytic
        assert rep.eps2_numeric <= rep.eps2_analytic
        # the closed-form constants dominate the direct sums they replace
        assert rep.direct["A1"] <= rep.A1_bound
        assert rep.direct["B1"] <= rep.B1_bound
        assert rep.direct["A2"] <= rep.A2_bound


def test_perturbation_below_independent_envelope(liouville):
    _, frames = liouville
    for f in frames:
        for which in ("X", "Y"):
            # both are upper bounds; they may differ by their tail terms
            assert bounds.perturbed_minus_b_l1(f, which) <= bounds.perturbation_envelope(f, which) * (1 + 1e-12)

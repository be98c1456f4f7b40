import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotfourier import bounds
from rotfourier.diophantine import square_convergents
from rotfourier.frame import H_closed, make_frame, psi_extrema
from rotfourier.nctorus import tp_adjoint, tp_flip, tp_l1, tp_max_diff
from rotfourier.numkit import parse_real


@pytest.fixture(scope="module")
def frames():
    theta = parse_real("sq-liouville", 8192)
    return [make_frame(theta, sc) for sc in square_convergents(theta, 4, 2.0)]


def _decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def test_b_basic_structure(frames):
    for f in frames:
        b = bounds.build_b(f)
        c00 = b.get((0, 0))
        assert c00.real > 0 and abs(c00.imag) < 1e-15
        assert c00.real == pytest.approx(math.sqrt(2 * f.gp.alpha) * H_closed(0, 0, f.gp).value.real, rel=1e-13)
        assert tp_max_diff(tp_adjoint(b), b) < 1e-12
        assert tp_max_diff(tp_flip(b), b) < 1e-12


def test_b_row_distance_below_c_q(frames):
    for f in frames:
        delta = bounds.b_minus_psi0_bound(f)
        sup0 = psi_extrema(0, f.gp).sup_bound
        cq = bounds.c_q(f)
        assert 0 < delta <= cq * sup0 < 5 * cq


def test_c_q_properties(frames):
    vals = [bounds.c_q(f) for f in frames]
    assert all(v > 0 for v in vals) and _decreasing(vals)
    for f, v in zip(frames, vals):
        with mpmath.workprec(96):
            lead = 6 * mpmath.exp(-mpmath.pi * f.gp.alpha * f.gp.beta**2 / 2)
            assert 0.9 <= v / lead <= 1.1


def test_window(frames):
    for f in frames:
        w = bounds.spectral_window(f, bounds.build_b(f))
        assert 0 < w.lo <= w.hi < 5 + float(w.delta)
        e0 = psi_extrema(0, f.gp)
        bare = bounds.spectral_window(f, delta=mpmath.mpf(0))
        assert (bare.lo, bare.hi) == (e0.inf_bound, e0.sup_bound)
        assert 1 < bare.lo <= bare.hi < 5


def test_window_refuses_large_delta(frames):
    with pytest.raises(bounds.WindowError):
        bounds.spectral_window(frames[0], delta=mpmath.mpf(3))


def test_perturbed_at_zero_shift_is_b(frames):
    f = frames[0]
    b = bounds.build_b(f)
    for which in ("X", "Y"):
        assert tp_max_diff(bounds.build_perturbed(f, which, a=0.0), b) == 0


def test_perturbed_float_poly_matches_mp_difference(frames):
    # the first frame has a of order 1e-2, so binary64 resolves X - b there
    f = frames[0]
    b = bounds.build_b(f)
    for which in ("X", "Y"):
        x = bounds.build_perturbed(f, which)
        keys = set(x.coeffs) | set(b.coeffs)
        l1 = sum(abs(x.get(k) - b.get(k)) for k in keys)
        assert l1 <= float(bounds.perturbed_minus_b_l1(f, which)) * (1 + 1e-6) + 1e-12


def test_perturbation_decays(frames):
    for which in ("X", "Y"):
        vals = [bounds.perturbed_minus_b_l1(f, which) for f in frames]
        assert _decreasing(vals)
        env = [bounds.perturbation_envelope(f, which) for f in frames]
        assert _decreasing(env)


def test_cutdown_reports(frames):
    totals = {"U1": [], "U2": []}
    for f in frames:
        w = bounds.spectral_window(f)
        for which in totals:
            rep = bounds.cutdown_bound(f, which, window=w)
            assert rep.total == rep.recomputed_total()
            totals[which].append(rep.total)
        u2 = bounds.cutdown_bound(f, "U2", window=w)
        assert u2.perturbed_minus_b_l1 == bounds.perturbed_minus_b_l1(f, "Y")
    for vals in totals.values():
        assert _decreasing(vals) and vals[-1] / vals[0] < 0.1
    with pytest.raises(ValueError):
        bounds.cutdown_bound(frames[0], "U3")


def test_dd_inner_self_adjoint(frames):
    for f in frames[:2]:
        d = bounds.dd_inner_coeffs(f)
        assert tp_max_diff(tp_adjoint(d), d) < 1e-12
        assert all(m % f.q == 0 and n % f.q == 0 for m, n in d.coeffs)


def test_dd_inner_l1_against_direct_sum(frames):
    f = frames[0]
    gp = f.gp
    d = bounds.dd_inner_coeffs(f)
    ms = range(-25, 26)
    ns = range(-220, 221)
    direct = math.fsum(
        abs(H_closed(m / gp.beta, n / gp.beta, gp).scaled()) for m in ms for n in ns
    ) * math.sqrt(2 * gp.alpha) / gp.beta**2
    assert tp_l1(d) == pytest.approx(direct, rel=1e-9)


def test_centrality(frames):
    reps = [bounds.centrality_bounds(f) for f in frames]
    for r in reps:
        assert r.eps1_numeric <= r.eps1_analytic + 1e-9
        assert r.eps2_numeric <= r.eps2_analytic + 1e-9
        assert r.direct["A1"] < r.A1_bound
    assert _decreasing([r.eps1_numeric for r in reps])
    assert _decreasing([r.eps2_numeric for r in reps])


def test_b2_consistency(frames):
    for f in frames:
        B2, approx, ok = bounds.b2_consistency(f.gp)
        assert ok, (B2, approx)


def test_e_approx_bound(frames):
    vals = []
    for f in frames:
        w = bounds.spectral_window(f)
        v = bounds.e_approx_error_bound(w)
        assert v == pytest.approx(w.hi * (w.lo**-0.5 + 2**-0.5) * w.invhalf_minus_invsqrt2)
        vals.append(v)
    assert _decreasing(vals)


def test_trace(frames):
    for f in frames:
        P = f.theta.precision_bits
        with mpmath.workprec(P):
            tr = bounds.trace_e(f).value
            assert 0 < tr < 1
            assert abs(tr - f.a.value**2 * f.q**2) < f.q**2 * mpmath.mpf(2) ** -(P - 8)
            assert abs(tr - 1 / f.beta_big.value**2) < f.q**2 * mpmath.mpf(2) ** -(P - 8)


def test_omega_examples():
    assert bounds.omega(3, -5, 7, 2, 0, 1) == 1
    assert bounds.omega(3, -5, 7, 2, 0, 1, mode="brute") == 1
    # n1 p0 + n3 = 1 + 1 = 2, not a multiple of 5
    assert bounds.omega(1, 0, 1, 0, 1, 5) == 0
    assert abs(bounds.omega(1, 0, 1, 0, 1, 5, mode="brute")) < 1e-12
    assert bounds.omega(1, 2, 4, 2, 1, 5) == 5


@given(st.integers(1, 40), st.lists(st.integers(-500, 500), min_size=4, max_size=4), st.integers(0, 10**6))
def test_omega_brute_equals_formula(q, ns, p0):
    p0 %= q
    assert abs(bounds.omega(*ns, p0, q, mode="brute") - bounds.omega(*ns, p0, q)) < 1e-10


def test_lemma_a1_examples():
    lhs, rhs = bounds.lemma_a1_check(1, 0, sharp=True)
    assert lhs < rhs == pytest.approx(1 / (2 * math.pi) + 2 / math.sqrt(2 * math.pi * math.e))
    for a, b in ((0.3, 2.5), (5, -1)):
        lhs, rhs = bounds.lemma_a1_check(a, b)
        assert lhs < rhs
    with pytest.raises(ValueError):
        bounds.lemma_a1_check(-1, 0)
    with pytest.raises(ValueError):
        bounds.lemma_a1_check(1, 0.5, sharp=True)


@given(st.floats(0.05, 20), st.floats(-10, 10))
def test_lemma_a1_random(a, b):
    lhs, rhs = bounds.lemma_a1_check(a, b)
    with mpmath.workprec(80):
        oracle = mpmath.nsum(lambda n: n * mpmath.exp(-mpmath.pi * a * (n + b) ** 2), [1, mpmath.inf])
    assert lhs >= float(oracle) * (1 - 1e-12)
    assert lhs < rhs

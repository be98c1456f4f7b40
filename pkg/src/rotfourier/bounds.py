"""Quantitative estimates attached to a frame.

Notation: e(x) = exp(2 pi i x); b, X, Y live in the algebra of W1, W2 with
W1 W2 = e(beta^2) W2 W1 and are stored as ``TwistedPoly`` with twist beta^2.
Coefficients of b with respect to the ordered monomials W1^m W2^n are

    sqrt(2 alpha) H(m beta, n beta)
        = e(-beta^2 m n/2) exp(-pi alpha beta^2 m^2/2) exp(-pi beta^2 n^2/(2 alpha)) Gamma(n, m),

so row m of b is exp(-pi alpha beta^2 m^2/2) W1^m rho_m(W2) with
rho_m(t) = psi_m(t - beta^2 m).  Quantities that can leave the binary64 range
(C_q, 1/q factors, differences of size a) are returned as mpmath numbers.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal

import mpmath
import numpy as np
from mpmath import mp, mpf

from . import theta as th
from .frame import (
    FrameParams,
    GaussParams,
    H_closed,
    H_closed_mp,
    H_envelope_const,
    psi_coefficients,
    psi_extrema,
)
from .numkit import ROUNDING_INFLATION, BigReal, gaussian_tail_bound, tail_index
from .nctorus import PRUNE_FLOOR, TwistedPoly, e_turns, tp_adjoint, tp_max_diff

SQRT2 = math.sqrt(2)
# working precision for quantities that are only small, not cancellation-prone
_SMALL_PREC = 96


class WindowError(ArithmeticError):
    """The spectral window of b does not stay away from zero."""


def _mp_beta_alpha(frame: FrameParams, prec: int = _SMALL_PREC):
    with mp.workprec(prec):
        beta = +frame.beta_big.value
        alpha = mpmath.sqrt(beta * beta / 4 - 1)
        return beta, alpha


def _gauss_tail_mp(c, N: int, shift=0) -> mpf:
    """mp version of ``gaussian_tail_bound`` (no underflow)."""
    d = N + 1 - abs(shift)
    return 2 * mpmath.exp(-mp.pi * c * d * d) / (1 - mpmath.exp(-2 * mp.pi * c * d)) * ROUNDING_INFLATION


def _first_row_thetas(gp: GaussParams, m: int, tol: float = 1e-17) -> tuple[float, float]:
    """theta2, theta3 at (pi beta^2 m / 2, 2 i alpha), real."""
    z = math.pi * gp.half_beta2_phase(m)
    return (
        th.theta("theta2", z, 2j * gp.alpha, tol).real,
        th.theta("theta3", z, 2j * gp.alpha, tol).real,
    )


# b

def b_coefficients(gp: GaussParams, M: int, N: int) -> dict[tuple[int, int], complex]:
    """Ordered-monomial coefficients sqrt(2 alpha) H(m beta, n beta) for |m|<=M, |n|<=N."""
    ns = np.arange(-N, N + 1)
    B = math.pi * gp.beta**2 * ns / (2 * gp.alpha)
    _, m3, _ = th.theta_iaxis("theta3", B, gp.t_alpha)
    _, m2, _ = th.theta_iaxis("theta2", B, gp.t_alpha)
    decay_n = np.exp(-math.pi * gp.beta**2 * ns * ns / gp.t_alpha)
    out = {}
    for m in range(-M, M + 1):
        row_log = -math.pi * gp.alpha * gp.beta**2 * m * m / 2
        if row_log < -745:
            continue
        t2, t3 = _first_row_thetas(gp, m)
        gam = math.exp(math.pi * gp.alpha / 2) * (t2 * m3 + t3 * m2)
        for n, g, dn in zip(ns, gam, decay_n):
            ph = -gp.half_beta2_phase(m * int(n))
            out[(m, int(n))] = cmath.exp(2j * math.pi * ph) * math.exp(row_log) * dn * g
    return out


def _b_box(gp: GaussParams, tol: float) -> tuple[int, int, float]:
    """Box radii and the l1 mass of b outside the box."""
    K = math.sqrt(2 * gp.alpha) * H_envelope_const(gp)
    cm = gp.alpha * gp.beta**2 / 2
    cn = gp.beta**2 / gp.t_alpha
    M = tail_index(cm, tol / (10 * K * 3))
    N = tail_index(cn, tol / (10 * K * 3))
    Sm = 1 + gaussian_tail_bound(cm, 0)
    Sn = 1 + gaussian_tail_bound(cn, 0)
    tail = K * (gaussian_tail_bound(cm, M) * Sn + Sm * gaussian_tail_bound(cn, N))
    return M, N, tail


def build_b(frame: FrameParams, tol: float = 1e-12) -> TwistedPoly:
    gp = frame.gp
    M, N, tail = _b_box(gp, tol)
    ordered = b_coefficients(gp, M, N)
    twist = _beta2_twist(frame)
    lattice = {(m, n): c * _e(twist, m * n) for (m, n), c in ordered.items()}
    return TwistedPoly(twist, lattice, pruned_mass=tail)


def _beta2_twist(frame: FrameParams):
    with mp.workprec(frame.beta_big.precision_bits):
        return frame.beta_big.value ** 2


def _e(phi, k: int) -> complex:
    return e_turns(phi, k)


def build_perturbed(frame: FrameParams, which: Literal["X", "Y"], tol: float = 1e-12, a: float | None = None) -> TwistedPoly:
    """X = sqrt(2a) sum H(m beta + a, n beta) W1^m W2^n, or Y with the shift on n.

    Binary64 coefficients; differences X - b are resolved by
    :func:`perturbed_minus_b_l1` instead.
    """
    if which not in ("X", "Y"):
        raise ValueError("which must be 'X' or 'Y'")
    gp = frame.gp
    shift = float(frame.a.value) if a is None else a
    M, N, tail = _b_box(gp, tol)
    twist = _beta2_twist(frame)
    c = math.sqrt(2 * gp.alpha)
    coeffs = {}
    for m in range(-M, M + 1):
        if -math.pi * gp.alpha * gp.beta**2 * m * m / 2 < -745:
            continue
        for n in range(-N, N + 1):
            if shift == 0:
                # identical arguments: reuse the exact b path
                continue
            s, t = m * gp.beta, n * gp.beta
            if which == "X":
                s += shift
            else:
                t += shift
            coeffs[(m, n)] = c * H_closed(s, t, gp).scaled() * _e(twist, m * n)
    if shift == 0:
        return build_b(frame, tol)
    return TwistedPoly(twist, coeffs, pruned_mass=2 * tail)


def perturbed_minus_b_l1(frame: FrameParams, which: Literal["X", "Y"], rel_tol: float = 1e-6) -> mpf:
    """Certified upper bound for sum |coefficients of X - b| (or Y - b).

    Differences inside a box are evaluated in mpmath with enough bits to
    resolve a shift of size a; outside the box each difference is bounded by
    the sum of the two H envelopes, and the box is large enough that this
    tail stays below ``rel_tol * a``.
    """
    gp = frame.gp
    a_mp = frame.a.value
    prec = max(64, -int(mpmath.log(a_mp, 2))) + 64
    K = math.sqrt(2 * gp.alpha) * H_envelope_const(gp)
    with mp.workprec(prec):
        beta = +frame.beta_big.value
        a = +a_mp
        target = mpf(rel_tol) * a / (4 * K)
        log_target = float(mpmath.log(target))
        cm = gp.alpha * gp.beta**2 / 2
        cn = gp.beta**2 / gp.t_alpha
        M = max(1, int(math.sqrt(max(0.0, -log_target) / (math.pi * cm))) + 1)
        N = max(1, int(math.sqrt(max(0.0, -log_target) / (math.pi * cn))) + 1)
        sh = float(a / beta)
        cs, ts = (sh, 0.0) if which == "X" else (0.0, sh)
        # everything outside the box, for both H terms of each difference
        Sm = 1 + _gauss_tail_mp(cm, 0, cs) + 1
        Sn = 1 + _gauss_tail_mp(cn, 0, ts) + 1
        tail = 2 * K * (_gauss_tail_mp(cm, M, cs) * Sn + Sm * _gauss_tail_mp(cn, N, ts))
        c = mpmath.sqrt(2 * mpf(gp.alpha))
        total = mpf(0)
        for m in range(-M, M + 1):
            for n in range(-N, N + 1):
                s, t = m * beta, n * beta
                s2, t2 = (s + a, t) if which == "X" else (s, t + a)
                d = H_closed_mp(s2, t2, gp, beta, prec) - H_closed_mp(s, t, gp, beta, prec)
                total += abs(d)
        return +(c * total * ROUNDING_INFLATION + tail)


# C_q and the spectral window

def c_q(frame: FrameParams) -> mpf:
    """3 [theta3(0, i alpha beta^2 / 2) - 1] = 6 sum_{n>=1} exp(-pi alpha beta^2 n^2 / 2)."""
    beta, alpha = _mp_beta_alpha(frame)
    with mp.workprec(_SMALL_PREC):
        c = alpha * beta * beta / 2
        total = mpf(0)
        n = 1
        while True:
            term = mpmath.exp(-mp.pi * c * n * n)
            total += term
            if n > 1 and term < total * mpf(2) ** -80:
                break
            n += 1
        return 6 * (total + _gauss_tail_mp(c, n) / 2)


def psi_uniform_sup(gp: GaussParams) -> float:
    """A bound for sup |psi_m| valid for every m."""
    G = math.exp(math.pi * gp.alpha / 2) * 2 * th.theta("theta3", 0, 2j * gp.alpha).real * (1 + gp.t_alpha**-0.5)
    return ROUNDING_INFLATION * G * (1 + gaussian_tail_bound(gp.beta**2 / gp.t_alpha, 0))


@dataclass(frozen=True)
class Window:
    lo: float
    hi: float
    delta: mpf  # bound on ||b - psi_0(W2)||
    inf_psi0: float
    sup_psi0: float

    @property
    def b_norm(self) -> float:
        return self.hi

    @property
    def b_inv_norm(self) -> float:
        return 1 / self.lo

    @property
    def b_invhalf_norm(self) -> float:
        return self.lo**-0.5

    def sup_over(self, f) -> float:
        # f(lambda) - f(2) is monotone in lambda, so the max sits at an endpoint
        return max(abs(f(self.lo) - f(2.0)), abs(f(self.hi) - f(2.0)))

    @property
    def half_minus_sqrt2(self) -> float:
        return self.sup_over(math.sqrt)

    @property
    def invhalf_minus_invsqrt2(self) -> float:
        return self.sup_over(lambda x: x**-0.5)

    @property
    def minus_2(self) -> float:
        return self.sup_over(lambda x: x)


def b_minus_psi0_bound(frame: FrameParams) -> mpf:
    """sum_{m != 0} exp(-pi alpha beta^2 m^2/2) sup|psi_m|."""
    gp = frame.gp
    beta, alpha = _mp_beta_alpha(frame)
    with mp.workprec(_SMALL_PREC):
        c = alpha * beta * beta / 2
        total = mpf(0)
        m = 1
        while True:
            w = mpmath.exp(-mp.pi * c * m * m)
            sups = psi_extrema(m, gp).sup_bound + psi_extrema(-m, gp).sup_bound
            total += w * sups
            if w < mpf(2) ** -80 * total or m >= 64:
                break
            m += 1
        return total + psi_uniform_sup(gp) * _gauss_tail_mp(c, m)


def spectral_window(frame: FrameParams, b: TwistedPoly | None = None, *, delta: mpf | None = None) -> Window:
    if b is not None:
        err = tp_max_diff(tp_adjoint(b), b)
        if err > 1e-10:
            raise WindowError(f"b is not self-adjoint (coefficient mismatch {err:.2e})")
    ext = psi_extrema(0, frame.gp)
    if delta is None:
        delta = b_minus_psi0_bound(frame)
    d = float(delta)
    if not d < ext.inf_bound:
        raise WindowError("Delta >= inf psi_0: q too small to certify invertibility of b")
    return Window(ext.inf_bound - d, ext.sup_bound + d, delta, ext.inf_bound, ext.sup_bound)


# cut-down estimate

@dataclass(frozen=True)
class CutdownReport:
    which: str
    perturbed_minus_b_l1: mpf
    b_inv_norm_bound: float
    b_invhalf_norm_bound: float
    b_half_minus_sqrt2: float
    b_invhalf_minus_invsqrt2: float
    total: mpf

    def recomputed_total(self) -> mpf:
        return _cutdown_total(
            self.b_inv_norm_bound, self.perturbed_minus_b_l1, self.b_invhalf_norm_bound,
            self.b_half_minus_sqrt2, self.b_invhalf_minus_invsqrt2,
        )


def _cutdown_total(binv, diff, binvhalf, half_dev, invhalf_dev) -> mpf:
    with mp.workprec(_SMALL_PREC):
        return mpf(binv) * diff + mpf(binvhalf) * half_dev + mpf(SQRT2) * invhalf_dev


def cutdown_bound(frame: FrameParams, which: Literal["U1", "U2"], tol: float = 1e-10, window: Window | None = None) -> CutdownReport:
    """Upper bound for ||b^{-1/2} V X b^{-1/2} - V|| (U1: X, V3^{p'}; U2: Y, V4^{-p'})."""
    if which not in ("U1", "U2"):
        raise ValueError("which must be 'U1' or 'U2'")
    window = window or spectral_window(frame)
    diff = perturbed_minus_b_l1(frame, "X" if which == "U1" else "Y")
    args = (window.b_inv_norm, diff, window.b_invhalf_norm, window.half_minus_sqrt2, window.invhalf_minus_invsqrt2)
    return CutdownReport(
        which=which, perturbed_minus_b_l1=diff, b_inv_norm_bound=window.b_inv_norm,
        b_invhalf_norm_bound=window.b_invhalf_norm, b_half_minus_sqrt2=window.half_minus_sqrt2,
        b_invhalf_minus_invsqrt2=window.invhalf_minus_invsqrt2, total=_cutdown_total(*args),
    )


def _gamma_mp(u, v, beta, prec: int):
    with mp.workprec(prec + 20):
        alpha = mpmath.sqrt(beta * beta / 4 - 1)
        ta = 4 * alpha + 2 / alpha
        z1 = mp.pi * beta * beta * v / 2
        B = mp.pi * beta * beta * u / (2 * alpha)
        val = mpmath.exp(mp.pi * alpha / 2) * (
            th.theta_mp("theta2", z1, 2j * alpha, prec) * th.theta_mp("theta3", 1j * B, 1j * ta, prec)
            + th.theta_mp("theta3", z1, 2j * alpha, prec) * th.theta_mp("theta2", 1j * B, 1j * ta, prec)
        )
        return mpmath.re(val)


def perturbation_envelope(frame: FrameParams, which: Literal["X", "Y"]) -> mpf:
    """Independent upper bound for ||X - b||_1 (or ||Y - b||_1).

    X: the n = 0 column is summed directly in the Gamma form and the rest is
    bounded by 2 theta3(0,2ia) M [2 N1 + e^{pi a/2} N2].  Y: the m = 0 row is
    summed directly and every other row is bounded by two H envelopes.
    """
    gp = frame.gp
    a_mp = frame.a.value
    prec = max(64, -int(mpmath.log(a_mp, 2))) + 64
    with mp.workprec(prec):
        beta = +frame.beta_big.value
        a = +a_mp
        alpha = mpmath.sqrt(beta * beta / 4 - 1)
        cm = alpha * beta * beta / 2
        t30 = th.theta_mp("theta3", 0, 2j * alpha, 64).real
        ta = 4 * alpha + 2 / alpha
        if which == "X":
            kappa = mpmath.exp(-mp.pi * alpha * a * a / 2)
            A = mpf(0)
            Mr = 1
            while mpmath.exp(-mp.pi * cm * (Mr + 1) ** 2) > a * mpf(2) ** -60:
                Mr += 1
            for m in range(-Mr, Mr + 1):
                w = mpmath.exp(-mp.pi * cm * m * m)
                A += w * abs(kappa * mpmath.exp(-mp.pi * alpha * beta * a * m) * _gamma_mp(0, m + a / beta, beta, prec)
                             - _gamma_mp(0, m, beta, prec))
            # remaining rows: both terms bounded by the Gamma envelope at u = 0
            genv = t30 * (2 + mpmath.exp(mp.pi * alpha / 2)) * (1 + 1 / mpmath.sqrt(ta))
            A += 2 * genv * _gauss_tail_mp(cm, Mr, 0) * mpmath.exp(mp.pi * alpha * beta * a * (Mr + 1))
            Mtot = (
                kappa * mpmath.fsum(mpmath.exp(-mp.pi * cm * m * m - mp.pi * alpha * beta * a * m) for m in range(-40, 41))
                + 1 + _gauss_tail_mp(cm, 0) + 2 * _gauss_tail_mp(cm, 40)
            )
            N1, N2 = _n_sums(gp)
            B = t30 * Mtot * (2 * N1 + mpmath.exp(mp.pi * alpha / 2) * N2)
            return +(A + 2 * B)
        # Y
        cn = beta * beta / ta
        Nr = 1
        while mpmath.exp(-mp.pi * cn * (Nr - 1) ** 2) > a * mpf(2) ** -60:
            Nr += 1
        row = mpf(0)
        for n in range(-Nr, Nr + 1):
            t, t2 = n * beta, n * beta + a
            row += abs(
                mpmath.exp(-mp.pi * t2 * t2 / (2 * alpha)) * _gamma_mp(t2 / beta, 0, beta, prec)
                - mpmath.exp(-mp.pi * t * t / (2 * alpha)) * _gamma_mp(t / beta, 0, beta, prec)
            )
        K = mpf(math.sqrt(2 * gp.alpha) * H_envelope_const(gp))
        row = row * ROUNDING_INFLATION + 2 * K * _gauss_tail_mp(cn, Nr, float(a / beta))
        # lattice sum bound: sum_n exp(-pi c (n + s)^2) <= 1 + 1/sqrt(c)
        others = 2 * K * (1 + 1 / mpmath.sqrt(cn)) * (_gauss_tail_mp(cm, 0))
        return +(row + others)


def _n_sums(gp: GaussParams) -> tuple[float, float]:
    """N1, N2 = sum_{n>=1} exp(-pi beta^2 n^2/(2 alpha)) theta_{3,2}(i pi beta^2 n/(2 alpha), i t_alpha)."""
    cn = gp.beta**2 / gp.t_alpha
    N = max(2, tail_index(cn, 1e-30))
    ns = np.arange(1, N + 1)
    B = math.pi * gp.beta**2 * ns / (2 * gp.alpha)
    _, m3, e3 = th.theta_iaxis("theta3", B, gp.t_alpha)
    _, m2, e2 = th.theta_iaxis("theta2", B, gp.t_alpha)
    w = np.exp(-math.pi * cn * ns * ns)
    env = (1 + gp.t_alpha**-0.5) * gaussian_tail_bound(cn, N)
    return float(np.sum(w * (m3 + e3))) + env, float(np.sum(w * (m2 + e2))) + env


# the D-side inner product <f, f>_D and centrality

def _c1(gp: GaussParams) -> float:
    """Decay rate of exp(-pi n^2/(2 alpha beta^2)) theta(i pi n/(2 alpha), i t_alpha)."""
    return gp.alpha / (2 * gp.beta**2 * (2 * gp.alpha**2 + 1))


def _gamma_small(gp: GaussParams, N: int):
    """For r = m mod 4 and 0 <= n <= N: exp(-pi c1 n^2) |Gamma(n/beta^2, m/beta^2)|-type data.

    Returns (ns, decay, G) with G[r, n] = e^{pi a/2}[theta2(pi r/2, 2ia) m3(n) + theta3(pi r/2, 2ia) m2(n)],
    the mantissa after folding exp(pi n^2/(4 a^2 t_a)) into ``decay``; plus the
    uniform mantissa error.
    """
    ns = np.arange(0, N + 1)
    B = math.pi * ns / (2 * gp.alpha)
    _, m3, e3 = th.theta_iaxis("theta3", B, gp.t_alpha)
    _, m2, e2 = th.theta_iaxis("theta2", B, gp.t_alpha)
    pre = math.exp(math.pi * gp.alpha / 2)
    G = np.empty((4, len(ns)))
    err = 0.0
    for r in range(4):
        t2 = th.theta("theta2", math.pi * r / 2, 2j * gp.alpha).real
        t3 = th.theta("theta3", math.pi * r / 2, 2j * gp.alpha).real
        G[r] = pre * (t2 * m3 + t3 * m2)
        err = max(err, pre * (abs(t2) * e3 + abs(t3) * e2 + 2e-16 * (abs(t2) + abs(t3)) * (1 + gp.t_alpha**-0.5)))
    decay = np.exp(-math.pi * _c1(gp) * ns * ns)
    return ns, decay, G, err


def _n_radius(c: float, tol: float) -> int:
    """N beyond the peak of n exp(-pi c n^2) with exp(-pi c N^2)/(2 pi c) < tol."""
    N = max(2, int(1 / math.sqrt(2 * math.pi * c)) + 1)
    while math.exp(-math.pi * c * N * N) / (2 * math.pi * c) >= tol:
        N += max(1, N // 8)
    return N


def _m_weights(gp: GaussParams, tol: float = 1e-30):
    """W[r] = sum_{m = r mod 4} exp(-pi am m^2) and W1[r] = sum_{m>=1, m = r mod 4} m exp(-pi am m^2)."""
    am = gp.alpha / (2 * gp.beta**2)
    Mm = _n_radius(am, tol)
    ms = np.arange(-Mm, Mm + 1)
    w = np.exp(-math.pi * am * ms * ms)
    W = np.array([w[(ms % 4) == r].sum() for r in range(4)]) + gaussian_tail_bound(am, Mm)
    pos = ms > 0
    W1 = np.array([(ms * w)[pos & ((ms % 4) == r)].sum() for r in range(4)])
    W1 += math.exp(-math.pi * am * Mm * Mm) / (2 * math.pi * am)
    return W, W1, Mm


@dataclass(frozen=True)
class CentralityReport:
    eps1_numeric: mpf
    eps2_numeric: mpf
    A1_bound: float
    B1_bound: float
    A2_bound: float
    B2_bound: float
    eps1_analytic: mpf
    eps2_analytic: mpf
    direct: dict = field(default_factory=dict, compare=False)


def centrality_sums(gp: GaussParams, tol: float = 1e-30) -> dict[str, float]:
    """Direct certified sums behind both centrality estimates (without 4 pi/(q beta^4))."""
    c1 = _c1(gp)
    N = _n_radius(c1, tol)
    ns, decay, G, gerr = _gamma_small(gp, N)
    Gabs = np.abs(G) + gerr
    Genv = math.exp(math.pi * gp.alpha / 2) * 2 * th.theta("theta3", 0, 2j * gp.alpha).real * (1 + gp.t_alpha**-0.5)
    tail_n1 = math.exp(-math.pi * c1 * N * N) / (2 * math.pi * c1)  # sum_{n>N} n e^{-pi c n^2}
    tail_n0 = gaussian_tail_bound(c1, N)  # sum_{|n|>N} e^{-pi c n^2}
    W, W1, _ = _m_weights(gp, tol)
    pos = ns >= 1
    S1 = np.array([np.sum(ns[pos] * decay[pos] * Gabs[r][pos]) + Genv * tail_n1 for r in range(4)])
    S0 = np.array([Gabs[r][0] + 2 * np.sum(decay[pos] * Gabs[r][pos]) + Genv * tail_n0 for r in range(4)])
    # n-sums of the individual theta factors
    _, m3, e3 = th.theta_iaxis("theta3", math.pi * ns / (2 * gp.alpha), gp.t_alpha)
    _, m2, e2 = th.theta_iaxis("theta2", math.pi * ns / (2 * gp.alpha), gp.t_alpha)
    menv = 1 + gp.t_alpha**-0.5
    ea = math.exp(math.pi * gp.alpha / 2)
    A1 = float(np.sum(ns[pos] * decay[pos] * (m3[pos] + e3))) + menv * tail_n1
    B1 = ea * (float(np.sum(ns[pos] * decay[pos] * (m2[pos] + e2))) + menv * tail_n1)
    A2 = float(m3[0] + e3 + 2 * np.sum(decay[pos] * (m3[pos] + e3))) + menv * tail_n0
    B2 = ea * (float(m2[0] + e2 + 2 * np.sum(decay[pos] * (m2[pos] + e2))) + menv * tail_n0)
    return {
        "eps1_sum": float(np.dot(W, S1)) * ROUNDING_INFLATION,
        "eps2_sum": float(np.dot(W1, S0)) * ROUNDING_INFLATION,
        "A1": A1, "B1": B1, "A2": A2, "B2": B2,
        "theta3_m_sum": float(W.sum()),
        "m_weight_sum": float(W1.sum()),
    }


def centrality_constant_bounds(gp: GaussParams) -> dict[str, float]:
    a, b = gp.alpha, gp.beta
    t30 = th.theta("theta3", 0, 2j * a).real
    A1 = 9 * b * b * (2 * a * a + 1) / (2 * math.pi * a)
    B1 = 12 / math.pi * a * b * b * t30 + 6 * b * b * (2 + b * math.sqrt(2 * a))
    A2 = th.theta("theta3", 0, 4j).real + 9 * b * b * (2 * a * a + 1) / (math.pi * a)
    return {"A1": A1, "B1": B1, "A2": A2, "theta3_0_2ia": t30}


def centrality_bounds(frame: FrameParams, tol: float = 1e-30) -> CentralityReport:
    gp = frame.gp
    sums = centrality_sums(gp, tol)
    lem = centrality_constant_bounds(gp)
    a, b = gp.alpha, gp.beta
    t30 = lem["theta3_0_2ia"]
    with mp.workprec(_SMALL_PREC):
        beta = +frame.beta_big.value
        pref = 4 * mp.pi / (frame.q * beta**4)
        eps1 = pref * sums["eps1_sum"]
        eps2 = pref * sums["eps2_sum"]
        eps1_an = pref * t30 * (1 + b * SQRT2 / math.sqrt(a)) * (2 * lem["A1"] + lem["B1"])
        m_env = b * b / (math.pi * a) + 2 * b / math.sqrt(math.pi * math.e * a)
        eps2_an = pref * t30 * m_env * (2 * lem["A2"] + sums["B2"])
    return CentralityReport(
        eps1_numeric=eps1, eps2_numeric=eps2, A1_bound=lem["A1"], B1_bound=lem["B1"],
        A2_bound=lem["A2"], B2_bound=sums["B2"], eps1_analytic=eps1_an, eps2_analytic=eps2_an,
        direct=sums,
    )


def b2_consistency(gp: GaussParams, slack: float = 0.10) -> tuple[float, float, bool]:
    """Compare B2 with e^{pi a/2} theta2(0, i t_a) + 4 beta sqrt(2a) theta3(0, 2ia)."""
    B2 = centrality_sums(gp)["B2"]
    approx = (
        math.exp(math.pi * gp.alpha / 2) * th.theta("theta2", 0, 1j * gp.t_alpha).real
        + 4 * gp.beta * math.sqrt(2 * gp.alpha) * th.theta("theta3", 0, 2j * gp.alpha).real
    )
    return B2, approx, B2 <= approx * (1 + slack)


def dd_inner_coeffs(frame: FrameParams, tol: float = 1e-30, floor: float = PRUNE_FLOOR) -> TwistedPoly:
    """<f,f>_D = (sqrt(2a)/beta^2) sum conj H(m/beta, n/beta) U2^{qn} U1^{qm}.

    Stored at lattice points (q m, q n) with twist theta; U2^{qn} U1^{qm} is the
    lattice unitary itself (phase one).
    """
    gp = frame.gp
    c1 = _c1(gp)
    am = gp.alpha / (2 * gp.beta**2)
    N = _n_radius(c1, tol)
    ns, decay, G, _ = _gamma_small(gp, N)
    Mm = _n_radius(am, tol)
    b2 = gp.beta**2
    coeffs = {}
    lost = 0.0
    for m in range(-Mm, Mm + 1):
        wm = math.exp(-math.pi * am * m * m) / b2
        row = wm * decay * G[m % 4]
        for n in range(-N, N + 1):
            v = row[abs(n)]
            if abs(v) < floor:
                lost += abs(v)
                continue
            # conj of e(-mn/(2 beta^2)) e^{...} Gamma
            ph = math.fmod(m * n / (2 * b2), 1.0)
            coeffs[(frame.q * m, frame.q * n)] = cmath.exp(2j * math.pi * ph) * v
    with mp.workprec(frame.theta.precision_bits):
        twist = +frame.theta.value
    return TwistedPoly(twist, coeffs, floor=0.0, pruned_mass=lost + _dd_tail(gp, Mm, N))


def _dd_tail(gp: GaussParams, Mm: int, N: int) -> float:
    am = gp.alpha / (2 * gp.beta**2)
    c1 = _c1(gp)
    Genv = math.exp(math.pi * gp.alpha / 2) * 2 * th.theta("theta3", 0, 2j * gp.alpha).real * (1 + gp.t_alpha**-0.5)
    Sm = 1 + 2 / math.sqrt(am)
    Sn = 1 + 2 / math.sqrt(c1)
    return Genv / gp.beta**2 * (gaussian_tail_bound(am, Mm) * Sn + Sm * gaussian_tail_bound(c1, N))


def e_approx_error_bound(window: Window) -> float:
    """||e - <f,f>_D / 2|| <= ||b|| (||b^{-1/2}|| + 2^{-1/2}) ||b^{-1/2} - 2^{-1/2}||."""
    return window.b_norm * (window.b_invhalf_norm + 1 / SQRT2) * window.invhalf_minus_invsqrt2


# Omega and the trace

def omega(n1: int, n2: int, n3: int, n4: int, p0: int, q: int, mode: Literal["formula", "brute"] = "formula") -> complex:
    if q < 1:
        raise ValueError("q must be positive")
    if mode == "formula":
        return complex(q) if (n1 * p0 + n3) % q == 0 and (n2 * p0 - n4) % q == 0 else 0j

    def phi(n, m):
        return 1.0 if (n - m) % q == 0 else 0.0

    total = 0j
    for n in range(q):
        for m in range(q):
            w = phi(n, m) * phi(n - n1 * p0, m + n3)
            if w:
                total += cmath.exp(2j * math.pi * ((-n * n2 * p0 + m * n4) % q) / q) * w
    return total


def omega_brute_table(p0: int, q: int) -> np.ndarray:
    """Brute-force Omega for every (n1, n2, n3, n4) in Z_q^4, shape (q, q, q, q)."""
    n = np.arange(q)
    nn, mm = np.meshgrid(n, n, indexing="ij")
    phi0 = ((nn - mm) % q == 0).astype(float)
    out = np.zeros((q, q, q, q), dtype=complex)
    k = np.arange(q)
    # e1[n, n2] = e(-n n2 p0/q), e2[m, n4] = e(m n4/q); the (n, m) sum is a matrix product
    e1 = np.exp(-2j * math.pi * ((np.outer(k, k) * p0) % q) / q)
    e2 = np.exp(2j * math.pi * (np.outer(k, k) % q) / q)
    for n1 in range(q):
        for n3 in range(q):
            phi1 = (((nn - n1 * p0) - (mm + n3)) % q == 0).astype(float)
            out[n1, :, n3, :] = e1.T @ (phi0 * phi1) @ e2
    return out


def trace_e(frame: FrameParams) -> BigReal:
    P = frame.theta.precision_bits
    with mp.workprec(P):
        return BigReal(frame.q * (frame.q * frame.theta.value - frame.p), P)


# weighted Gaussian sums

def lemma_a1_check(a: float, b: float, *, sharp: bool = False) -> tuple[float, float]:
    """``(certified sum_{n>=1} n exp(-pi a (n+b)^2), bound)``.

    ``sharp`` (only for b = 0) uses 1/(2 pi a) + 2/sqrt(2 pi e a).
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if sharp and b != 0:
        raise ValueError("the sharp form needs b = 0")
    x0 = 0.5 * (math.sqrt(b * b + 2 / (math.pi * a)) - b)
    N = max(1, int(math.ceil(x0)) + 1, int(math.ceil(-b)) + 1)
    while True:
        y = N + b
        # sum_{n>N} f(n) <= int_N^inf x e^{-pi a (x+b)^2} dx for N beyond the peak
        tail = math.exp(-math.pi * a * y * y) / (2 * math.pi * a) + abs(b) * math.exp(-math.pi * a * y * y) / (
            2 * math.pi * a * y
        )
        if tail < 1e-18:
            break
        N += 1
    n = np.arange(1, N + 1)
    lhs = float(np.sum(n * np.exp(-math.pi * a * (n + b) ** 2))) * ROUNDING_INFLATION + tail
    if sharp:
        rhs = 1 / (2 * math.pi * a) + 2 / math.sqrt(2 * math.pi * math.e * a)
    else:
        rhs = math.sqrt(2 / (math.pi * a)) + 1 / (math.pi * a) + 2 * abs(b) + abs(b) / math.sqrt(a)
    return lhs, rhs

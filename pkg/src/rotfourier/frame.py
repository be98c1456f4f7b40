"""The Gaussian theta frame: parameters, h, its Fourier transform, H and Gamma.

With beta^2 = 4(alpha^2 + 1), t_alpha = 4 alpha + 2/alpha and e(x) = exp(2 pi i x):

    h(x) = exp(-pi alpha x^2) sum_p exp(-pi alpha p^2 + pi alpha p) e((beta p/2 - beta/4) x)
         = exp(pi alpha/4) exp(-pi alpha x^2) theta2(pi beta x / 2, i alpha)

    H(s, t) = int h(x) h(x + s) e(x t) dx
            = (2 alpha)^(-1/2) e(-st/2) exp(-pi alpha s^2/2 - pi t^2/(2 alpha)) Gamma(t/beta, s/beta)

    Gamma(u, v) = exp(pi alpha/2) [theta2(pi beta^2 v/2, 2i alpha) theta3(i pi beta^2 u/(2 alpha), i t_alpha)
                                 + theta3(pi beta^2 v/2, 2i alpha) theta2(i pi beta^2 u/(2 alpha), i t_alpha)]

The Fourier transform uses f^(s) = int f(x) e(-x s) dx; summing the Gaussian
transform pair termwise with d = p - 1/2 gives

    h^(s) = exp(pi alpha/4) alpha^(-1/2) sum_d exp(-pi alpha d^2) exp(-pi (beta d/2 - s)^2 / alpha).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mp, mpf

from . import theta as th
from .diophantine import SquareConvergent, mod_inverse
from .numkit import ROUNDING_INFLATION, BigReal, CertifiedValue, gaussian_tail_bound, integrate_decaying, tail_index


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class GaussParams:
    alpha: float
    beta: float
    t_alpha: float
    # beta^2 mod 4, computed at high precision: phases such as e(beta^2 m n / 2)
    # and theta(pi beta^2 n / 2, .) only depend on it for integer m, n
    beta2_mod4: float

    def __post_init__(self):
        if not self.beta > 2:
            raise FrameError("beta must exceed 2")

    @classmethod
    def from_beta(cls, beta) -> "GaussParams":
        with mp.workprec(max(mp.prec, 128)):
            b = mpf(beta.value if isinstance(beta, BigReal) else beta)
            if not b > 2:
                raise FrameError("beta must exceed 2")
            alpha = mpmath.sqrt(b * b / 4 - 1)
            return cls(float(alpha), float(b), float(4 * alpha + 2 / alpha), float(mpmath.fmod(b * b, 4)))

    @classmethod
    def from_alpha(cls, alpha: float) -> "GaussParams":
        return cls.from_beta(mpmath.sqrt(4 * (mpf(alpha) ** 2 + 1)))

    def half_beta2_phase(self, k: int) -> float:
        """``beta^2 k / 2`` reduced mod 2 (exact period of every use)."""
        return math.fmod(self.beta2_mod4 * k / 2, 2.0)


@dataclass(frozen=True)
class FrameParams:
    theta: BigReal  # the rotation angle actually approximated (1 - theta for complement records)
    sc: SquareConvergent
    p0: int
    a: BigReal
    beta_big: BigReal
    gp: GaussParams
    lambda_phase: complex
    mu: BigReal

    @property
    def p(self) -> int:
        return self.sc.p

    @property
    def q(self) -> int:
        return self.sc.q

    @property
    def p_root(self) -> int:
        return self.sc.p_root


def make_frame(theta: BigReal, sc: SquareConvergent) -> FrameParams:
    if sc.complement:
        theta = 1 - theta
    P = theta.precision_bits
    if sc.q < 4:
        raise FrameError("q must be at least 4")
    with mp.workprec(P):
        gap = theta.value - mpf(sc.p) / sc.q
        if not gap > 0:
            raise FrameError("theta <= p/q: use the complementary square convergent")
        a = mpmath.sqrt(gap)
        beta = 1 / (sc.q * a)
        p0 = mod_inverse(sc.p_root, sc.q)
        mu = beta * beta + mpf(p0 * p0) / sc.q
        lam = complex(mpmath.expjpi(2 * theta.value))
    if not beta > 2:
        raise FrameError("beta = 1/(q a) must exceed 2")
    return FrameParams(
        theta=theta, sc=sc, p0=p0, a=BigReal(a, P), beta_big=BigReal(beta, P),
        gp=GaussParams.from_beta(BigReal(beta, P)), lambda_phase=lam, mu=BigReal(mu, P),
    )


# h and its transform

def _half_lattice(gp: GaussParams, tol: float) -> tuple[np.ndarray, float]:
    """Points d = n + 1/2, |n| <= N, and the relative tail of sum exp(-pi alpha d^2)."""
    N = tail_index(gp.alpha, tol, shift=0.5)
    return np.arange(-N, N + 1) + 0.5, gaussian_tail_bound(gp.alpha, N, shift=0.5)


def h_values(x, gp: GaussParams, tol: float = 1e-17) -> np.ndarray:
    """Vectorised h using the cosine form of the theta series."""
    x = np.asarray(x, dtype=float)
    d, _ = _half_lattice(gp, tol)
    terms = np.exp(-math.pi * gp.alpha * d * d) * np.cos(math.pi * gp.beta * np.multiply.outer(x, d))
    return math.exp(math.pi * gp.alpha / 4) * np.exp(-math.pi * gp.alpha * x * x) * terms.sum(axis=-1)


def h_eval(x: float, gp: GaussParams, tol: float = 1e-14) -> CertifiedValue:
    pre = math.exp(math.pi * gp.alpha / 4 - math.pi * gp.alpha * x * x)
    cv = th.theta_eval(th.ThetaQuery("theta2", math.pi * gp.beta * x / 2, 1j * gp.alpha, tol / pre))
    val = cv.scaled() * pre
    tail = cv.tail_bound * pre
    if abs(val.imag) > tail + 1e-15 * abs(val):
        raise AssertionError("h has a non-negligible imaginary part")
    return CertifiedValue(val.real, tail, cv.terms_used)


def h_hat_values(s, gp: GaussParams, tol: float = 1e-17) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    d, _ = _half_lattice(gp, tol)
    arg = np.subtract.outer(-s, -gp.beta * d / 2)  # beta d/2 - s
    terms = np.exp(-math.pi * gp.alpha * d * d - math.pi * arg * arg / gp.alpha)
    return math.exp(math.pi * gp.alpha / 4) / math.sqrt(gp.alpha) * terms.sum(axis=-1)


def h_hat_eval(s: float, gp: GaussParams, tol: float = 1e-14) -> CertifiedValue:
    pre = math.exp(math.pi * gp.alpha / 4) / math.sqrt(gp.alpha)
    d, tail = _half_lattice(gp, tol / pre)
    val = float(h_hat_values(np.array([s]), gp, tol / pre)[0])
    # the second Gaussian factor is at most 1, so the theta tail bounds the omission
    return CertifiedValue(val, tail * pre * ROUNDING_INFLATION, len(d))


# Gamma and H

def _first_pair(v, gp: GaussParams, tol: float):
    """theta2/theta3 at (pi beta^2 v / 2, 2 i alpha); integer v uses beta^2 mod 4."""
    if isinstance(v, (int, np.integer)):
        z = math.pi * gp.half_beta2_phase(int(v))
    else:
        z = math.pi * gp.beta**2 * v / 2
    t2 = th.theta_eval(th.ThetaQuery("theta2", z, 2j * gp.alpha, tol))
    t3 = th.theta_eval(th.ThetaQuery("theta3", z, 2j * gp.alpha, tol))
    return t2, t3


def gamma_eval(u, v, gp: GaussParams, tol: float = 1e-14) -> CertifiedValue:
    """Gamma(u, v) with ``log_scale = B^2/(pi t_alpha)``, ``B = pi beta^2 u / (2 alpha)``."""
    sub = tol / 16
    t2v, t3v = _first_pair(v, gp, sub)
    B = math.pi * gp.beta**2 * u / (2 * gp.alpha)
    s3 = th.theta_eval(th.ThetaQuery("theta3", 1j * B, 1j * gp.t_alpha, sub), log_form=True)
    s2 = th.theta_eval(th.ThetaQuery("theta2", 1j * B, 1j * gp.t_alpha, sub), log_form=True)
    pre = math.exp(math.pi * gp.alpha / 2)
    mant = pre * (t2v.scaled() * s3.value + t3v.scaled() * s2.value)
    tail = pre * (
        abs(t2v.value) * s3.tail_bound + t2v.tail_bound * (abs(s3.value) + s3.tail_bound)
        + abs(t3v.value) * s2.tail_bound + t3v.tail_bound * (abs(s2.value) + s2.tail_bound)
    )
    L = s3.log_scale
    if L < 600:
        f = math.exp(L)
        return CertifiedValue(mant.real * f, tail * f, s3.terms_used + s2.terms_used)
    return CertifiedValue(mant.real, tail, s3.terms_used + s2.terms_used, L)


def gamma_envelope(u: float, gp: GaussParams) -> float:
    """Right side of |Gamma(u,v)| <= theta3(0,2ia)[2 theta3(iB, it) + e^{pi a/2} theta2(iB, it)]."""
    B = math.pi * gp.beta**2 * u / (2 * gp.alpha)
    t30 = th.theta("theta3", 0, 2j * gp.alpha)
    s3 = th.theta_eval(th.ThetaQuery("theta3", 1j * B, 1j * gp.t_alpha))
    s2 = th.theta_eval(th.ThetaQuery("theta2", 1j * B, 1j * gp.t_alpha))
    return t30.real * (2 * s3.abs_bound() + math.exp(math.pi * gp.alpha / 2) * s2.abs_bound())


def H_closed(s: float, t: float, gp: GaussParams, tol: float = 1e-14) -> CertifiedValue:
    g = gamma_eval(t / gp.beta, s / gp.beta, gp, tol)
    log_pre = -math.pi * gp.alpha * s * s / 2 - math.pi * t * t / (2 * gp.alpha) + g.log_scale
    phase = complex(math.cos(math.pi * s * t), -math.sin(math.pi * s * t))
    c = 1 / math.sqrt(2 * gp.alpha)
    val = c * phase * complex(g.value)
    tail = c * g.tail_bound
    if log_pre > -700:
        f = math.exp(log_pre)
        return CertifiedValue(val * f, tail * f, g.terms_used)
    return CertifiedValue(val, tail, g.terms_used, log_pre)


def H_envelope(s, t, gp: GaussParams) -> np.ndarray:
    """Uniform bound |H(s,t)| <= K exp(-pi alpha s^2/2 - pi t^2/t_alpha).

    From the Gamma envelope, the lemma_a2_rhs bound for the imaginary-argument thetas and
    exp(-pi t^2/(2 alpha) + B^2/(pi t_alpha)) = exp(-pi t^2/t_alpha).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return H_envelope_const(gp) * np.exp(-math.pi * gp.alpha * s * s / 2 - math.pi * t * t / gp.t_alpha)


def H_envelope_const(gp: GaussParams) -> float:
    t30 = th.theta("theta3", 0, 2j * gp.alpha).real
    return (
        ROUNDING_INFLATION
        * t30 * (2 + math.exp(math.pi * gp.alpha / 2)) * (1 + gp.t_alpha**-0.5)
        / math.sqrt(2 * gp.alpha)
    )


def H_quad(s: float, t: float, gp: GaussParams, tol: float = 1e-10) -> CertifiedValue:
    """Direct quadrature of int h(x) h(x+s) e(xt) dx (h is real)."""
    series_tol = 1e-17

    def integrand(x):
        return h_values(x, gp, series_tol) * h_values(x + s, gp, series_tol) * np.exp(2j * math.pi * x * t)

    cv = integrate_decaying(integrand, gp.alpha, tol)
    # series truncation of h enters twice; |h| <= e^{pi a/4} theta2(0, i a)
    hmax = math.exp(math.pi * gp.alpha / 4) * th.theta("theta2", 0, 1j * gp.alpha).real
    _, rel = _half_lattice(gp, series_tol)
    extra = 2 * hmax * math.exp(math.pi * gp.alpha / 4) * rel * math.sqrt(1 / gp.alpha)
    return CertifiedValue(cv.value, cv.tail_bound + extra, cv.terms_used)


def H_closed_mp(s, t, gp: GaussParams, beta: mpf, prec: int):
    """H(s, t) in mpmath at ``prec`` bits (``beta`` supplied at full precision)."""
    with mp.workprec(prec + 20):
        s, t, beta = mpf(s), mpf(t), mpf(beta)
        alpha = mpmath.sqrt(beta * beta / 4 - 1)
        t_alpha = 4 * alpha + 2 / alpha
        u, v = t / beta, s / beta
        z1 = mp.pi * beta * beta * v / 2
        B = mp.pi * beta * beta * u / (2 * alpha)
        t2v = th.theta_mp("theta2", z1, 2j * alpha, prec)
        t3v = th.theta_mp("theta3", z1, 2j * alpha, prec)
        s3 = th.theta_mp("theta3", 1j * B, 1j * t_alpha, prec)
        s2 = th.theta_mp("theta2", 1j * B, 1j * t_alpha, prec)
        gamma = mpmath.exp(mp.pi * alpha / 2) * (t2v * s3 + t3v * s2)
        pre = mpmath.exp(-mp.pi * alpha * s * s / 2 - mp.pi * t * t / (2 * alpha)) / mpmath.sqrt(2 * alpha)
        return +(pre * mpmath.expjpi(-s * t) * gamma)


# psi_n and its extrema

def psi_coefficients(n: int, gp: GaussParams, tol: float = 1e-16):
    """Coefficients c_m of psi_n(t) = sum_m c_m e(m t) and an l1 bound on the rest.

    c_m = e(beta^2 m n/2) exp(-pi beta^2 m^2/(2 alpha)) Gamma(m, n); folding the
    Gamma log scale gives |c_m| ~ exp(-pi beta^2 m^2 / t_alpha).
    """
    c = gp.beta**2 / gp.t_alpha
    # Gamma mantissa bound: e^{pi a/2}(|theta2| + theta3)(1 + t^{-1/2}) <= G
    G = math.exp(math.pi * gp.alpha / 2) * 2 * th.theta("theta3", 0, 2j * gp.alpha).real * (1 + gp.t_alpha**-0.5)
    M = tail_index(c, tol / G)
    tail = G * gaussian_tail_bound(c, M)
    ms = np.arange(-M, M + 1)
    t2v, t3v = _first_pair(n, gp, tol / 16)
    B = math.pi * gp.beta**2 * ms / (2 * gp.alpha)
    _, m3, e3 = th.theta_iaxis("theta3", B, gp.t_alpha, tol / 16)
    _, m2, e2 = th.theta_iaxis("theta2", B, gp.t_alpha, tol / 16)
    gam = math.exp(math.pi * gp.alpha / 2) * (t2v.scaled().real * m3 + t3v.scaled().real * m2)
    decay = np.exp(-math.pi * c * ms * ms)
    phase_turns = np.array([gp.half_beta2_phase(int(m) * n) for m in ms])  # e(beta^2 mn/2)
    coeffs = np.exp(2j * math.pi * phase_turns) * decay * gam
    gam_err = math.exp(math.pi * gp.alpha / 2) * (
        abs(t2v.value) * e3 + t2v.tail_bound * (m3 + e3) + abs(t3v.value) * e2 + t3v.tail_bound * (m2 + e2)
    )
    tail += float(np.sum(decay * gam_err))
    return ms, coeffs, tail * ROUNDING_INFLATION


def psi_eval(n: int, t: float, gp: GaussParams, tol: float = 1e-14) -> CertifiedValue:
    ms, coeffs, tail = psi_coefficients(n, gp, tol)
    val = complex(np.sum(coeffs * np.exp(2j * math.pi * ms * t)))
    if n == 0:
        val = complex(val.real, 0.0) if abs(val.imag) <= tail + 1e-14 * abs(val) else val
    return CertifiedValue(val, tail, len(ms))


@dataclass(frozen=True)
class Extrema:
    inf_bound: float
    sup_bound: float
    slack: float
    grid: int


def psi_extrema(n: int, gp: GaussParams, grid: int = 512, tol: float = 1e-15, shift: float = 0.0) -> Extrema:
    """Certified bounds on inf and sup of psi_n (n = 0) or |psi_n| over a period.

    Grid extremum +- (Lipschitz constant / (2 grid) + tail), where the
    Lipschitz constant of the truncated series is sum 2 pi |m| |c_m|.
    ``shift`` evaluates t -> psi_n(t - shift) instead.
    """
    if grid < 256:
        raise ValueError("grid must be at least 256")
    ms, coeffs, tail = psi_coefficients(n, gp, tol)
    ts = np.arange(grid) / grid - shift
    vals = np.exp(2j * math.pi * np.outer(ts, ms)) @ coeffs
    lip = float(np.sum(2 * math.pi * np.abs(ms) * np.abs(coeffs)))
    slack = (lip / (2 * grid) + tail) * ROUNDING_INFLATION + 1e-15 * float(np.sum(np.abs(coeffs)))
    f = vals.real if n == 0 else np.abs(vals)
    return Extrema(float(f.min()) - slack, float(f.max()) + slack, slack, grid)


# orthogonality relation

def orthogonality_residual(m: int, n: int, gp: GaussParams, tol: float = 1e-10, *, control: bool = False) -> CertifiedValue:
    """int h(x) h^(x + beta m) e(beta n x) dx, which vanishes for the theta frame.

    ``control=True`` replaces h by exp(-pi x^2) (its own transform) as a
    negative control.
    """
    shift = gp.beta * m
    freq = gp.beta * n
    if control:
        def integrand(x):
            return np.exp(-math.pi * x * x - math.pi * (x + shift) ** 2) * np.exp(2j * math.pi * freq * x)
        c = 1.0
    else:
        def integrand(x):
            return h_values(x, gp) * h_hat_values(x + shift, gp) * np.exp(2j * math.pi * freq * x)
        c = gp.alpha
    return integrate_decaying(integrand, c, tol)

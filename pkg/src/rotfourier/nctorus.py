"""Twisted polynomials over two unitaries and related matrix tools.

A ``TwistedPoly`` with twist phi stores coefficients of lattice unitaries
pi_(m,n), multiplied through the cocycle h(x, y) = e(phi x1 y2):

    pi_x pi_y = e(phi x1 y2) pi_(x+y),   pi_x^* = e(phi x1 x2) pi_(-x).

With g1 = pi_(1,0), g2 = pi_(0,1) one has g1 g2 = e(phi) g2 g1 and the ordered
monomial g1^m g2^n equals e(phi m n) pi_(m,n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import mpmath
import numpy as np
from mpmath import mp, mpf

PRUNE_FLOOR = 1e-18

Index = tuple[int, int]


def turns(phi, k: int) -> float:
    """``phi * k`` mod 1 as a float; exact enough for huge k when phi is an mpf."""
    if k == 0:
        return 0.0
    if isinstance(phi, mpf):
        with mp.workprec(abs(k).bit_length() + 80):
            return float(mpmath.frac(phi * k))
    return math.fmod(phi * k, 1.0) % 1.0


def e_turns(phi, k: int) -> complex:
    x = turns(phi, k)
    return complex(math.cos(2 * math.pi * x), math.sin(2 * math.pi * x))


@dataclass(frozen=True)
class TwistedPoly:
    twist: float | mpf
    coeffs: Mapping[Index, complex]
    modulus: int | None = None
    floor: float = PRUNE_FLOOR
    pruned_mass: float = 0.0  # l1 mass dropped below the floor, kept for honest bounds

    def __post_init__(self):
        if self.modulus is not None and self.modulus < 1:
            raise ValueError("modulus must be positive")
        kept: dict[Index, complex] = {}
        dropped = self.pruned_mass
        for (m, n), c in self.coeffs.items():
            if self.modulus is not None:
                m, n = m % self.modulus, n % self.modulus
            c = complex(c)
            if abs(c) < self.floor:
                dropped += abs(c)
                continue
            key = (int(m), int(n))
            kept[key] = kept.get(key, 0j) + c
        object.__setattr__(self, "coeffs", kept)
        object.__setattr__(self, "pruned_mass", dropped)

    @classmethod
    def unit(cls, twist, modulus=None) -> "TwistedPoly":
        return cls(twist, {(0, 0): 1.0}, modulus)

    @classmethod
    def generator(cls, j: int, twist, modulus=None, coeff: complex = 1.0) -> "TwistedPoly":
        return cls(twist, {(1, 0) if j == 1 else (0, 1): coeff}, modulus)

    @classmethod
    def from_ordered(cls, twist, ordered: Mapping[Index, complex], modulus=None) -> "TwistedPoly":
        """Build from coefficients of g1^m g2^n."""
        return cls(twist, {(m, n): c * e_turns(twist, m * n) for (m, n), c in ordered.items()}, modulus)

    def ordered(self) -> dict[Index, complex]:
        """Coefficients with respect to g1^m g2^n."""
        return {(m, n): c * e_turns(self.twist, -m * n) for (m, n), c in self.coeffs.items()}

    def get(self, w: Index) -> complex:
        return self.coeffs.get(w, 0j)

    def __len__(self):
        return len(self.coeffs)


def _check_compatible(x: TwistedPoly, y: TwistedPoly):
    if turns(x.twist, 1) != turns(y.twist, 1) or x.modulus != y.modulus:
        raise ValueError("twisted polynomials have different twist or modulus")


def tp_mul(x: TwistedPoly, y: TwistedPoly) -> TwistedPoly:
    _check_compatible(x, y)
    out: dict[Index, complex] = {}
    for (u1, u2), cu in x.coeffs.items():
        for (v1, v2), cv in y.coeffs.items():
            w = (u1 + v1, u2 + v2)
            out[w] = out.get(w, 0j) + cu * cv * e_turns(x.twist, u1 * v2)
    # products of pruned parts are bounded by the cross terms of the l1 masses
    lost = x.pruned_mass * (tp_l1(y)) + y.pruned_mass * (tp_l1(x))
    return TwistedPoly(x.twist, out, x.modulus, min(x.floor, y.floor), lost)


def tp_add(x: TwistedPoly, y: TwistedPoly, scale: complex = 1.0) -> TwistedPoly:
    """x + scale * y."""
    _check_compatible(x, y)
    out = dict(x.coeffs)
    for w, c in y.coeffs.items():
        out[w] = out.get(w, 0j) + scale * c
    return TwistedPoly(x.twist, out, x.modulus, x.floor, x.pruned_mass + abs(scale) * y.pruned_mass)


def tp_adjoint(x: TwistedPoly) -> TwistedPoly:
    out = {(-w1, -w2): c.conjugate() * e_turns(x.twist, w1 * w2) for (w1, w2), c in x.coeffs.items()}
    return TwistedPoly(x.twist, out, x.modulus, x.floor, x.pruned_mass)


def tp_l1(x: TwistedPoly) -> float:
    return float(sum(abs(c) for c in x.coeffs.values())) + x.pruned_mass


def tp_fourier(x: TwistedPoly) -> TwistedPoly:
    """sigma(pi_(m,n)) = e(-phi m n) pi_(-n, m)."""
    out = {(-n, m): c * e_turns(x.twist, -m * n) for (m, n), c in x.coeffs.items()}
    return TwistedPoly(x.twist, out, x.modulus, x.floor, x.pruned_mass)


def tp_flip(x: TwistedPoly) -> TwistedPoly:
    """pi_w -> pi_(-w); equals sigma^2 and sends each generator to its inverse."""
    out = {(-m, -n): c for (m, n), c in x.coeffs.items()}
    return TwistedPoly(x.twist, out, x.modulus, x.floor, x.pruned_mass)


def tp_max_diff(x: TwistedPoly, y: TwistedPoly) -> float:
    keys = set(x.coeffs) | set(y.coeffs)
    return max((abs(x.get(w) - y.get(w)) for w in keys), default=0.0)


@dataclass(frozen=True)
class NormReport:
    l1: float
    matrix_estimate: float | None = None
    matrix_modulus_used: int | None = None
    notes: dict = field(default_factory=dict)


def clock_shift_matrix(x: TwistedPoly, rep_modulus: int) -> np.ndarray:
    """Image of x under g1 -> clock, g2 -> shift at the nearest angle j/N."""
    N = rep_modulus
    if N < 2:
        raise ValueError("rep_modulus must be at least 2")
    j = round(turns(x.twist, 1) * N) % N
    k = np.arange(N)
    mat = np.zeros((N, N), dtype=complex)
    for (m, n), c in x.coeffs.items():
        # pi_(m,n) = e(-phi m n) C^m S^n with phi replaced by j/N
        ph = np.exp(-2j * math.pi * j * ((m * n) % N) / N)
        clock = np.exp(2j * math.pi * j * ((m * k) % N) / N)
        rows = (k + n) % N
        # (C^m S^n) e_k = omega^{m (k+n)} e_{k+n}
        mat[rows, k] += c * ph * clock[rows]
    return mat


def clock_shift_norm(x: TwistedPoly, rep_modulus: int, tol: float = 1e-10, max_iter: int = 20_000) -> float:
    """Heuristic operator norm: largest singular value of the clock-shift image."""
    mat = clock_shift_matrix(x, rep_modulus)
    gram = mat.conj().T @ mat
    v = np.ones(rep_modulus, dtype=complex) + 0.1 * np.cos(np.arange(rep_modulus))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        new = float(np.vdot(v, w).real)
        v = w / nw
        if abs(new - lam) <= tol * max(1.0, new):
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))


def norm_report(x: TwistedPoly, rep_modulus: int | None = None) -> NormReport:
    est = clock_shift_norm(x, rep_modulus) if rep_modulus else None
    return NormReport(tp_l1(x), est, rep_modulus)


def psd_sqrt(mat, tol: float = 1e-12) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    herm = (mat + mat.conj().T) / 2
    if np.max(np.abs(mat - herm), initial=0.0) > tol * max(1.0, np.max(np.abs(mat))):
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(herm)
    if w.min() < -tol * max(1.0, abs(w).max()):
        raise ValueError(f"matrix has a negative eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def lemma_a3_sides(x, y) -> tuple[float, float]:
    """``(||x^{1/2} - y^{1/2}||, sqrt2 m^-2 M^{3/2} ||x - y||)`` for positive definite x, y."""
    sx, sy = psd_sqrt(x), psd_sqrt(y)
    lhs = np.linalg.norm(sx - sy, 2)
    ex, ey = np.linalg.eigvalsh(x), np.linalg.eigvalsh(y)
    m = min(ex.min(), ey.min())
    M = max(ex.max(), ey.max())
    rhs = math.sqrt(2) * m**-2 * M**1.5 * np.linalg.norm(np.asarray(x) - np.asarray(y), 2)
    return float(lhs), float(rhs)


# lattice elements of G = M x M^ with M = R x Z_q x Z_q, written
# (x, [n], [m]; xi, [k], [l]); the cocycle pairs the first half of w with the
# second half of w'

def heisenberg_pairing(w, w2, q: int):
    x, n, m = w[:3]
    xi, k, l = w2[3:]
    return x * xi + mpf(n * k + m * l) / q


def commutator_turns(w, w2, q: int):
    """Phase (in turns, mod 1) of pi_w pi_w2 pi_w^* pi_w2^*."""
    return mpmath.frac(heisenberg_pairing(w, w2, q) - heisenberg_pairing(w2, w, q))


def _circle_dist(a, b) -> float:
    d = float(mpmath.frac(a - b))
    return min(d, 1 - d)


def lattice_phase_checks(frame) -> dict[str, float]:
    """Distances on the circle between computed and predicted commutation phases.

    D is spanned by eps1 = (a, p', 0; 0, 0, 0), eps2 = (0, 0, 0; a, p', 0) and
    its annihilator by delta1 = (beta, -p0, 0; 0...), delta2, delta3, delta4.
    """
    q, pr, p0 = frame.q, frame.p_root, frame.p0
    with mp.workprec(frame.theta.precision_bits):
        a, beta = frame.a.value, frame.beta_big.value
        e1 = (a, pr, 0, 0, 0, 0)
        e2 = (0, 0, 0, a, pr, 0)
        d1 = (beta, -p0, 0, 0, 0, 0)
        d2 = (0, 0, 0, beta, -p0, 0)
        d3 = (0, 0, 1, 0, 0, 0)
        d4 = (0, 0, 0, 0, 0, 1)
        w1 = tuple(-u + p0 * v for u, v in zip(d1, d3))  # V1 V3^{-p0}
        w2 = tuple(-u - p0 * v for u, v in zip(d2, d4))  # V2 V4^{p0}
        out = {
            "U1U2=e(theta)": _circle_dist(commutator_turns(e1, e2, q), frame.theta.value),
            "V1V2=e(mu)": _circle_dist(commutator_turns(d1, d2, q), frame.mu.value),
            "V3V4=e(1/q)": _circle_dist(commutator_turns(d3, d4, q), mpf(1) / q),
            "W1W2=e(beta^2)": _circle_dist(commutator_turns(w1, w2, q), beta * beta),
        }
        worst = 0.0
        for e in (e1, e2):
            for d in (d1, d2, d3, d4):
                worst = max(worst, _circle_dist(commutator_turns(e, d, q), 0))
        out["annihilator"] = worst
    return out

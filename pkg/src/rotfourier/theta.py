"""Jacobi theta functions with certified truncation.

    theta2(z, t) = sum_n exp(pi i t (n+1/2)^2) exp(2 i z (n+1/2))
    theta3(z, t) = sum_n exp(pi i t n^2)       exp(2 i z n)

Both are summed over the shifted index ``k = n + nu`` (``nu`` = 1/2 or 0) in
completed-square form.  With ``A = Im t`` and ``y = Im z`` the modulus of the
k-th term is ``exp(pi A C^2) exp(-pi A (k - C)^2)`` where ``C = -y / (pi A)``;
the peak factor ``exp(pi A C^2)`` is carried as a log scale so that nothing
overflows when ``y`` is large.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np
from mpmath import mp

from .numkit import ROUNDING_INFLATION, CertifiedValue, gaussian_tail_bound, tail_index

Kind = Literal["theta2", "theta3"]

_NU = {"theta2": 0.5, "theta3": 0.0}
# keep log scales folded into the value while exp() is comfortably finite
_FOLD_LIMIT = 600.0


class ThetaDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaQuery:
    kind: Kind
    z: complex
    t: complex
    tol: float = 1e-15

    def __post_init__(self):
        if self.kind not in _NU:
            raise ThetaDomainError(f"unknown theta kind {self.kind!r}")
        if not complex(self.t).imag > 0:
            raise ThetaDomainError("Im(t) must be positive")
        if not self.tol > 0:
            raise ThetaDomainError("tol must be positive")


def _truncation(A: float, tol: float) -> tuple[int, float]:
    # worst case offset of the nearest lattice point from C is 1/2
    N = tail_index(A, tol, shift=0.5)
    return N, gaussian_tail_bound(A, N, shift=0.5)


def theta_eval(q: ThetaQuery, *, log_form: bool = False) -> CertifiedValue:
    """Evaluate theta2/theta3 with ``tail_bound <= tol``.

    The tolerance is relative to the modulus of the largest term, which is at
    least one; for real ``z`` that modulus is exactly one and the tolerance is
    absolute.  With ``log_form`` the peak factor is always kept separate in
    ``log_scale``.
    """
    nu = _NU[q.kind]
    z, t = complex(q.z), complex(q.t)
    A = t.imag
    C = -z.imag / (math.pi * A)
    log_peak = math.pi * A * C * C
    N, tail = _truncation(A, q.tol)
    n0 = round(C - nu)
    j = np.arange(-N, N + 1)
    k = n0 + nu + j
    dist = j + (n0 + nu - C)
    phase = math.pi * t.real * k * k + 2 * z.real * k
    mant = complex(np.sum(np.exp(-math.pi * A * dist * dist + 1j * phase)))
    tail *= ROUNDING_INFLATION
    if not log_form and log_peak < _FOLD_LIMIT:
        s = math.exp(log_peak)
        return CertifiedValue(mant * s, tail * s, 2 * N + 1)
    return CertifiedValue(mant, tail, 2 * N + 1, log_peak)


def theta(kind: Kind, z, t, tol: float = 1e-15) -> complex:
    """Plain complex value; raises if the magnitude overflows binary64."""
    cv = theta_eval(ThetaQuery(kind, z, t, tol))
    if cv.log_scale:
        raise OverflowError("theta value exceeds binary64 range; use theta_eval(log_form=True)")
    return complex(cv.value)


def theta_log(kind: Kind, z, t, tol: float = 1e-15) -> tuple[float, float]:
    """Return ``(log|theta|, arg theta)``."""
    cv = theta_eval(ThetaQuery(kind, z, t, tol), log_form=True)
    return cv.log_abs(), cv.phase()


def theta_iaxis(kind: Kind, B, A: float, tol: float = 1e-16):
    """Vectorised ``theta(iB, iA)`` for real ``B`` (array) and ``A > 0``.

    Returns ``(log_scale, mantissa, rel_tail)`` with
    ``theta(iB, iA) = exp(log_scale) * mantissa`` and
    ``|error| <= exp(log_scale) * rel_tail``.  Here ``log_scale = B^2/(pi A)``
    and ``mantissa = sum_k exp(-pi A (k - C)^2)`` with ``C = B/(pi A)``; by
    symmetry of the lattice under ``k -> -k`` this equals the defining series.
    """
    if A <= 0:
        raise ThetaDomainError("A must be positive")
    nu = _NU[kind]
    B = np.asarray(B, dtype=float)
    C = B / (math.pi * A)
    N, tail = _truncation(A, tol)
    n0 = np.round(C - nu)
    delta = n0 + nu - C
    j = np.arange(-N, N + 1)
    d = j[None, :] + delta.reshape(-1, 1)
    mant = np.exp(-math.pi * A * d * d).sum(axis=1).reshape(B.shape)
    return B * B / (math.pi * A), mant, tail * ROUNDING_INFLATION


def lemma_a2_log_rhs(A: float, B: float) -> float:
    """``log((1 + 1/sqrt(A)) exp(B^2/(pi A)))``."""
    if not A > 0:
        raise ThetaDomainError("A must be positive")
    return math.log1p(1 / math.sqrt(A)) + B * B / (math.pi * A)


def lemma_a2_rhs(A: float, B: float) -> float:
    """Upper bound ``(1 + 1/sqrt(A)) exp(B^2/(pi A))`` for theta2/3 at (iB, iA).

    Returns ``inf`` rather than raising when the exponential overflows; use
    :func:`lemma_a2_log_rhs` in that regime.
    """
    log_rhs = lemma_a2_log_rhs(A, B)
    return math.exp(log_rhs) if log_rhs < 709 else math.inf


def theta_mp(kind: Kind, z, t, prec: int):
    """Theta series in mpmath at ``prec`` bits; truncation error below 2^-prec
    relative to the peak term.  Used where binary64 cannot resolve a
    difference (perturbations of size 1/q)."""
    nu = mpmath.mpf(_NU[kind])
    with mp.workprec(prec + 20):
        z = mpmath.mpmathify(z)
        t = mpmath.mpmathify(t)
        A = mpmath.im(t)
        C = -mpmath.im(z) / (mp.pi * A)
        N = int(math.sqrt((prec + 8) * math.log(2) / (math.pi * float(A)))) + 2
        n0 = int(mpmath.nint(C - nu))
        total = mpmath.mpc(0)
        for j in range(-N, N + 1):
            k = n0 + nu + j
            total += mpmath.exp(mp.pi * 1j * t * k * k + 2j * z * k)
        return +total

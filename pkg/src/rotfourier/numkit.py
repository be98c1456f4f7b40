"""Scalars and certified numerical primitives.

``BigReal`` wraps an mpmath float together with the precision it was produced
at.  Everything that is only sensitive to rounding in a benign way (theta
series, quadrature) runs in binary64; ``BigReal`` is reserved for quantities
such as ``theta - p/q`` where cancellation is the whole point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from mpmath import mp, mpf

DEFAULT_PRECISION = 256
MIN_PRECISION = 64
# multiplicative inflation applied to every float tail bound
ROUNDING_INFLATION = 1.0 + 1e-12
QUAD_MAX_REFINEMENTS = 40

NAMED_CONSTANTS = ("pi-3", "1/pi", "e-2", "sqrt2-1", "ln2")


class ParseError(ValueError):
    """Raised when a real-number expression cannot be understood."""


class ConvergenceError(RuntimeError):
    """A refinement loop hit its iteration cap (usually an envelope violation)."""


@dataclass(frozen=True)
class BigReal:
    value: mpf
    precision_bits: int

    def __post_init__(self):
        if self.precision_bits < MIN_PRECISION:
            raise ValueError(f"precision_bits must be >= {MIN_PRECISION}")

    @classmethod
    def of(cls, x, precision_bits: int = DEFAULT_PRECISION) -> "BigReal":
        with mp.workprec(precision_bits):
            return cls(+mpf(x), precision_bits)

    def _coerce(self, other):
        if isinstance(other, BigReal):
            return other.value, min(self.precision_bits, other.precision_bits)
        return other, self.precision_bits

    def _op(self, other, fn):
        v, prec = self._coerce(other)
        with mp.workprec(prec):
            return BigReal(+fn(self.value, v), prec)

    def __add__(self, other):
        return self._op(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._op(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._op(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._op(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._op(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._op(other, lambda a, b: b / a)

    def __neg__(self):
        return BigReal(-self.value, self.precision_bits)

    def __pow__(self, k):
        return self._op(k, lambda a, b: a**b)

    def sqrt(self) -> "BigReal":
        with mp.workprec(self.precision_bits):
            return BigReal(mpmath.sqrt(self.value), self.precision_bits)

    def __lt__(self, other):
        return self.value < self._coerce(other)[0]

    def __le__(self, other):
        return self.value <= self._coerce(other)[0]

    def __gt__(self, other):
        return self.value > self._coerce(other)[0]

    def __ge__(self, other):
        return self.value >= self._coerce(other)[0]

    def __float__(self):
        return float(self.value)

    def ulp(self) -> mpf:
        """One unit in the last place, as an absolute magnitude."""
        if self.value == 0:
            return mpf(0)
        _, exp = mpmath.frexp(self.value)
        return mpmath.ldexp(mpf(1), int(exp) - self.precision_bits)

    def __repr__(self):
        digits = max(15, int(self.precision_bits * 0.30103) // 4)
        return f"BigReal({mpmath.nstr(self.value, digits)}, {self.precision_bits} bits)"


@dataclass(frozen=True)
class CertifiedValue:
    """A value with a rigorous bound on its truncation / quadrature error.

    The represented number is ``value * exp(log_scale)`` and the error is at
    most ``tail_bound * exp(log_scale)``.  ``log_scale`` is zero unless the
    magnitude would leave the binary64 range.
    """

    value: complex
    tail_bound: float
    terms_used: int = 0
    log_scale: float = 0.0

    def __post_init__(self):
        if not self.tail_bound >= 0:
            raise ValueError("tail_bound must be nonnegative")

    @property
    def real(self) -> float:
        return complex(self.value).real * math.exp(self.log_scale)

    @property
    def imag(self) -> float:
        return complex(self.value).imag * math.exp(self.log_scale)

    def scaled(self) -> complex:
        return complex(self.value) * math.exp(self.log_scale)

    def abs_bound(self) -> float:
        return (abs(self.value) + self.tail_bound) * math.exp(self.log_scale)

    def log_abs(self) -> float:
        return math.log(abs(self.value)) + self.log_scale

    def phase(self) -> float:
        return math.atan2(complex(self.value).imag, complex(self.value).real)


def _named_constant(name: str):
    return {
        "pi-3": lambda: mp.pi - 3,
        "1/pi": lambda: 1 / mp.pi,
        "e-2": lambda: mp.e - 2,
        "sqrt2-1": lambda: mpmath.sqrt(2) - 1,
        "ln2": lambda: mpmath.log(2),
    }[name]


_EXTRA_CONSTANTS: dict[str, Callable[[int], mpf]] = {}


def register_constant(name: str, builder: Callable[[int], mpf]) -> None:
    """Register a named constant computed by ``builder(precision_bits)``."""
    _EXTRA_CONSTANTS[name] = builder


def parse_real(expr: str, precision_bits: int = DEFAULT_PRECISION, *, unit_interval: bool = False) -> BigReal:
    """Parse a decimal literal or a named constant to ``precision_bits``.

    Named constants are evaluated with 64 guard bits and then rounded.
    """
    if precision_bits < MIN_PRECISION:
        raise ParseError(f"precision_bits must be >= {MIN_PRECISION}")
    text = expr.strip().lower().replace(" ", "")
    if text in NAMED_CONSTANTS:
        with mp.workprec(precision_bits + 64):
            raw = _named_constant(text)()
    elif text in _EXTRA_CONSTANTS:
        raw = _EXTRA_CONSTANTS[text](precision_bits)
    else:
        try:
            float(text)  # syntax gate: mpmath accepts things we don't want
        except ValueError:
            raise ParseError(f"cannot parse real expression {expr!r}") from None
        if text in ("nan", "inf", "-inf", "+inf", "infinity", "-infinity"):
            raise ParseError(f"non-finite value {expr!r}")
        with mp.workprec(precision_bits):
            raw = mpf(text)
    with mp.workprec(precision_bits):
        value = +raw
    if unit_interval and not (0 < value < 1):
        raise ParseError(f"{expr!r} is not in (0, 1)")
    return BigReal(value, precision_bits)


def gaussian_tail_bound(c: float, N: int, shift: float = 0.0) -> float:
    """Upper bound for ``sum_{|n|>N} exp(-pi c (n+shift)^2)``.

    ``shift`` must satisfy ``|shift| <= 1/2``; every omitted index then sits at
    distance at least ``N + 1 - |shift|`` from the centre.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if N < 0:
        raise ValueError("N must be nonnegative")
    if abs(shift) > 0.5:
        raise ValueError("|shift| must be <= 1/2")
    d = N + 1 - abs(shift)
    lead = -math.pi * c * d * d
    if lead < -745:
        return 0.0
    ratio = math.exp(-2 * math.pi * c * d)
    return ROUNDING_INFLATION * 2 * math.exp(lead) / (1 - ratio)


def tail_index(c: float, tol: float, shift: float = 0.0) -> int:
    """Smallest N with ``gaussian_tail_bound(c, N, shift) < tol``."""
    N = max(0, int(math.sqrt(max(0.0, -math.log(tol) / (math.pi * c)))) - 2)
    while gaussian_tail_bound(c, N, shift) >= tol:
        N += 1
    return N


def _simpson(f, L: float, n: int) -> complex:
    x = np.linspace(-L, L, n + 1)
    y = np.asarray(f(x), dtype=complex)
    h = 2 * L / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def integrate_decaying(integrand, c: float, tol: float, *, envelope: float | None = None) -> CertifiedValue:
    """Integrate ``integrand`` over the real line.

    ``integrand`` must accept numpy arrays and obey
    ``|f(x)| <= K exp(-pi c x^2)``.  ``K`` is ``envelope`` when given, otherwise
    it is estimated from samples.  The domain is cut to ``[-L, L]`` and
    composite Simpson is refined by halving until two successive values agree
    to ``tol / 2``.
    """
    if c <= 0 or tol <= 0:
        raise ValueError("decay rate and tolerance must be positive")
    L = math.sqrt(max(1.0, -math.log(tol) / (math.pi * c))) + 1
    if envelope is None:
        xs = np.linspace(-L, L, 257)
        envelope = float(np.max(np.abs(integrand(xs)) * np.exp(math.pi * c * xs * xs)))
    K = max(envelope, 1e-300)

    def trunc(L):
        return K * math.exp(-math.pi * c * L * L) / (math.pi * c * L)

    while trunc(L) > tol / 4:
        L += 0.5
    n = 64
    prev = _simpson(integrand, L, n)
    for _ in range(QUAD_MAX_REFINEMENTS):
        n *= 2
        cur = _simpson(integrand, L, n)
        diff = abs(cur - prev)
        if diff < tol / 2:
            # Richardson: the error of `cur` is about diff/15; report diff itself
            bound = ROUNDING_INFLATION * (diff + trunc(L))
            val = cur.real if abs(cur.imag) == 0 else cur
            return CertifiedValue(val, bound, n + 1)
        prev = cur
    raise ConvergenceError("Simpson refinement did not converge; check the Gaussian envelope")

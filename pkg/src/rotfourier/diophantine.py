"""Continued fractions and square convergents.

A square convergent of theta is a rational p/q close to theta with p, q and
q - p all perfect squares.  They are produced from convergents r/s of

    xi = (1 - sqrt(theta)) / sqrt(1 - theta)

through the Pythagorean triple m = 2rs, k = s^2 - r^2, n = r^2 + s^2, which
gives the candidate k^2 / n^2 = 1 - f(r/s)^2 with f(x) = 2x / (x^2 + 1).
Since 1 - f(xi)^2 = theta, good approximations of xi transfer to theta.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .numkit import BigReal, register_constant

log = logging.getLogger(__name__)

# guard bits required between q^-a and the resolution of theta
_GUARD_BITS = 24
_MAX_DEPTH = 100_000


class PrecisionExhausted(ArithmeticError):
    """The working precision cannot certify the requested quantity."""

    def __init__(self, message: str, found: int = 0):
        super().__init__(message)
        self.found = found


@dataclass(frozen=True)
class Convergent:
    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        if math.gcd(self.numerator, self.denominator) != 1:
            raise ValueError("convergent must be in lowest terms")

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


@dataclass(frozen=True)
class SquareConvergent:
    p: int
    q: int
    p_root: int
    qp_root: int
    r: int
    s: int
    m: int
    k: int
    n: int
    err: BigReal
    achieved_exponent: float
    gcd_witness: int = 1
    complement: bool = False  # approximates 1 - theta rather than theta
    theta_above: bool = True  # target - p/q > 0


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def mod_inverse(u: int, q: int) -> int:
    """Return ``p0`` in ``[1, q-1]`` with ``u p0 = 1 mod q`` (1 when q = 1)."""
    if q <= 0:
        raise ValueError("modulus must be positive")
    if math.gcd(u, q) != 1:
        raise ValueError(f"{u} is not invertible modulo {q}")
    if q == 1:
        return 1
    return pow(u, -1, q)


def _to_fraction(x: mpf) -> Fraction:
    man, exp = x.man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def _cf(fr: Fraction, limit: int) -> list[int]:
    out = []
    num, den = fr.numerator, fr.denominator
    while den and len(out) < limit:
        a, rem = divmod(num, den)
        out.append(a)
        num, den = den, rem
    return out


def certified_quotients(x: BigReal, limit: int = _MAX_DEPTH) -> list[int]:
    """Partial quotients shared by every real within ``2^(1-P)`` relative of x.

    If the stored value is itself a rational with a small denominator (its
    expansion terminates long before the precision runs out) the full exact
    expansion is returned instead, so literals such as ``0.25`` expand to
    ``[0; 4]``.
    """
    v = _to_fraction(x.value)
    exact = _cf(v, limit)
    if len(exact) < limit:
        h0, h1 = 0, 1
        for a in exact:
            h0, h1 = h1, a * h1 + h0
        if h1 * h1 < 2 ** max(0, x.precision_bits - 16):
            return exact
    rel = abs(v) * Fraction(2) ** (1 - x.precision_bits)
    lo = _cf(v - rel, limit)
    hi = _cf(v + rel, limit)
    common = []
    for a, b in zip(lo, hi):
        if a != b:
            break
        common.append(a)
    return common


def continued_fraction(x: BigReal, depth: int) -> list[int]:
    """First ``depth`` partial quotients ``[a0; a1, ...]`` of x.

    Raises :class:`PrecisionExhausted` when fewer quotients can be certified
    at x's precision (exact rationals simply return their full expansion).
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    cf = certified_quotients(x, depth + 1)
    exact = _cf(_to_fraction(x.value), depth + 1)
    if cf == exact and len(cf) <= depth:
        return cf
    if len(cf) < depth:
        raise PrecisionExhausted(
            f"only {len(cf)} partial quotients are certified at {x.precision_bits} bits", found=len(cf)
        )
    return cf[:depth]


def convergents_from_quotients(quotients) -> list[Convergent]:
    out = []
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    for a in quotients:
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Convergent(h1, k1))
    return out


def convergents(x: BigReal, depth: int) -> list[Convergent]:
    return convergents_from_quotients(continued_fraction(x, depth))


def xi_transform(theta: BigReal) -> BigReal:
    """``(1 - sqrt(theta)) / sqrt(1 - theta)``, mapping (0,1) onto (0,1)."""
    if not 0 < theta.value < 1:
        raise ValueError("theta must lie in (0, 1)")
    with mp.workprec(theta.precision_bits + 16):
        xi = (1 - mpmath.sqrt(theta.value)) / mpmath.sqrt(1 - theta.value)
    return BigReal.of(xi, theta.precision_bits)


def f_map(x):
    return 2 * x / (x * x + 1)


def witness_candidate(r: int, s: int) -> dict:
    """Triple and reduced square candidate for the rational r/s."""
    m, k, n = 2 * r * s, s * s - r * r, r * r + s * s
    p_raw, q_raw = k * k, n * n
    d = math.gcd(p_raw, q_raw)
    if not is_square(d):
        raise AssertionError(f"gcd {d} of {p_raw} and {q_raw} is not a perfect square")
    return {"m": m, "k": k, "n": n, "p_raw": p_raw, "q_raw": q_raw, "d": d, "p": p_raw // d, "q": q_raw // d}


def _search(target: BigReal, count: int, exponent: float, complement: bool) -> tuple[list[SquareConvergent], bool]:
    """Scan convergents of xi(target); return hits and whether precision ran out."""
    P = target.precision_bits
    xi = xi_transform(target)
    quotients = certified_quotients(xi)
    hits: dict[int, SquareConvergent] = {}
    exhausted = True
    for conv in convergents_from_quotients(quotients):
        r, s = conv.numerator, conv.denominator
        if r <= 0 or r >= s:
            continue
        w = witness_candidate(r, s)
        p, q = w["p"], w["q"]
        # deciding err < q^-a needs q^-a well above the 2^-P resolution
        if exponent * q.bit_length() + _GUARD_BITS > P:
            break
        if not (is_square(p) and is_square(q) and is_square(q - p)):
            continue
        with mp.workprec(P):
            diff = target.value - mpf(p) / q
            err = abs(diff)
            if err == 0:
                continue
            achieved = float(-mpmath.log(err) / mpmath.log(q))
        if achieved <= exponent or q in hits:
            continue
        hits[q] = SquareConvergent(
            p=p, q=q, p_root=math.isqrt(p), qp_root=math.isqrt(q - p), r=r, s=s,
            m=w["m"], k=w["k"], n=w["n"], err=BigReal(err, P), achieved_exponent=achieved,
            gcd_witness=w["d"], complement=complement, theta_above=bool(diff > 0),
        )
        if len(hits) >= count:
            exhausted = False
            break
    return [hits[q] for q in sorted(hits)], exhausted


def square_convergents(theta: BigReal, count: int, exponent: float = 3.0) -> list[SquareConvergent]:
    """Square convergents with ``|theta - p/q| < q^-exponent``, increasing in q.

    Returns an empty list (with a warning) when nothing is found before the
    precision runs out; raises :class:`PrecisionExhausted` when some but fewer
    than ``count`` were found.  If no hit lies below theta, the search is
    repeated for ``1 - theta`` and those records are flagged ``complement``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if exponent < 2:
        raise ValueError("exponent must be >= 2")
    if not 0 < theta.value < 1:
        raise ValueError("theta must lie in (0, 1)")
    hits, exhausted = _search(theta, count, exponent, complement=False)
    if not any(h.theta_above for h in hits):
        comp, comp_exhausted = _search(1 - theta, count, exponent, complement=True)
        comp = [h for h in comp if h.theta_above]
        if comp:
            hits, exhausted = comp, comp_exhausted
    if not hits:
        log.warning("no square convergent with exponent %s found at %d bits", exponent, theta.precision_bits)
        return []
    if len(hits) < count and exhausted:
        raise PrecisionExhausted(
            f"found {len(hits)} of {count} square convergents before {theta.precision_bits} bits ran out",
            found=len(hits),
        )
    return hits


# Demonstration constants.  The expansion of xi is steered so that every
# odd-index convergent yields a square convergent lying below theta with a
# prescribed size of theta - p/q; the tail after the last steered quotient is
# pi, which keeps xi irrational.

_BUILD_BITS = 60_000


def _f_inverse(y):
    return (1 - mpmath.sqrt(1 - y * y)) / y


def _steered_quotients(targets) -> tuple[int, ...]:
    """Quotients [0; 2, a2, 1, a4, 1, ...] with one steered quotient per target.

    ``targets(q)`` gives the desired ``theta - p/q`` for the square
    convergent of denominator q produced by the current odd convergent.
    """
    quotients = [0, 2]
    with mp.workprec(_BUILD_BITS):
        for i, target in enumerate(targets):
            convs = convergents_from_quotients(quotients)
            (rp, sp), (r, s) = [(c.numerator, c.denominator) for c in convs[-2:]]
            q = witness_candidate(r, s)["q"]
            y = mpmath.sqrt(f_map(mpf(r) / s) ** 2 - target(q))
            xi = _f_inverse(y)
            x = (rp - xi * sp) / (xi * s - r)
            quotients.append(int(mpmath.floor(x)))
            if i + 1 < len(targets):
                quotients.append(1)
    return tuple(quotients)


def _theta_from_quotients(quotients, precision_bits: int):
    convs = convergents_from_quotients(quotients)
    with mp.workprec(precision_bits + 64):
        (rp, sp), (r, s) = [(c.numerator, c.denominator) for c in convs[-2:]]
        tail = mp.pi
        xi = (tail * r + rp) / (tail * s + sp)
        return 1 - f_map(xi) ** 2


@functools.lru_cache(maxsize=None)
def sq_liouville_quotients() -> tuple[int, ...]:
    betas = (6, 9, 12, 15)
    return _steered_quotients([lambda q, b=b: mpf(1) / (b * b * mpf(q) ** 2) for b in betas])


@functools.lru_cache(maxsize=None)
def sq_liouville_cubic_quotients() -> tuple[int, ...]:
    return _steered_quotients([lambda q: mpf(1) / (4 * mpf(q) ** 3)] * 4)


register_constant("sq-liouville", lambda bits: _theta_from_quotients(sq_liouville_quotients(), bits))
register_constant("sq-liouville-cubic", lambda bits: _theta_from_quotients(sq_liouville_cubic_quotients(), bits))

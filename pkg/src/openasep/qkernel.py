"""Scalar kernels: q-Pochhammer symbols, entropy, current constant, step weights.

Two numeric backends are supported.  ``RATIONAL`` keeps every quantity as a
:class:`fractions.Fraction` (exact, for small instances); ``FLOAT`` works in
double precision with log-scaling where products grow with the system size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DomainError

__all__ = [
    "NumericMode",
    "RATIONAL",
    "FLOAT",
    "as_exact",
    "qpochhammer",
    "qpochhammer_inf",
    "entropyH",
    "currentJ",
    "stepWeightW",
    "xlog",
]


@dataclass(frozen=True)
class NumericMode:
    """Backend selector.

    ``kind`` is ``"rational"`` or ``"float"``.  ``tol`` is the truncation
    tolerance used when an infinite sum or product must be cut off; it also
    bounds the certified tail of the gap truncation in both backends.
    """

    kind: str = "float"
    tol: float = 1e-13

    def __post_init__(self):
        if self.kind not in ("rational", "float"):
            raise ValueError(f"unknown numeric mode {self.kind!r}")
        if not (0.0 < self.tol <= 1e-6):
            raise ValueError("tolerance must lie in (0, 1e-6]")

    @property
    def exact(self) -> bool:
        return self.kind == "rational"

    def coerce(self, x):
        return as_exact(x) if self.exact else float(x)


RATIONAL = NumericMode("rational", 1e-12)
FLOAT = NumericMode("float", 1e-13)


def as_exact(x) -> Fraction:
    """Convert to a Fraction, reading floats by their shortest decimal repr.

    ``0.4`` becomes ``2/5`` rather than the binary expansion of the double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"cannot represent {x!r} exactly")
        return Fraction(repr(x))
    return Fraction(str(x))


def qpochhammer(z, q, n):
    """(z; q)_n = prod_{j<n} (1 - z q^j).

    Works for floats and Fractions alike.  ``n = math.inf`` delegates to
    :func:`qpochhammer_inf` with its default tolerance and drops the bound.
    """
    if n == math.inf:
        return qpochhammer_inf(float(z), float(q))[0]
    if n < 0:
        raise DomainError("n must be nonnegative")
    out = 1
    qj = q ** 0  # 0**0 == 1
    for _ in range(int(n)):
        out *= 1 - z * qj
        qj *= q
    return out


def qpochhammer_inf(z: float, q: float, tol: float = 1e-16) -> tuple[float, float]:
    """(z; q)_inf truncated at the first K with |z| q^K < tol/2.

    Returns ``(value, bound)`` where ``bound = exp(2|z| q^K / (1-q)) - 1`` is
    a certified bound on the multiplicative error of the truncation.
    """
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    z = float(z)
    out = 1.0
    qk = 1.0
    k = 0
    while abs(z) * qk >= tol / 2:
        out *= 1.0 - z * qk
        qk *= q
        k += 1
        if k > 100_000:
            raise DomainError("q-Pochhammer truncation did not terminate")
    bound = math.expm1(2.0 * abs(z) * qk / (1.0 - q))
    return out, bound


def entropyH(x) -> float:
    """x log x + (1-x) log(1-x) on [0, 1] (with 0 log 0 = 0), +inf elsewhere."""
    x = float(x)
    if x < 0.0 or x > 1.0 or math.isnan(x):
        return math.inf
    out = 0.0
    if x > 0.0:
        out += x * math.log(x)
    if x < 1.0:
        out += (1.0 - x) * math.log1p(-x)
    return out


def currentJ(a, b) -> float:
    """The current constant J(a, b); the three branches are disjoint when ab < 1."""
    a = float(a)
    b = float(b)
    if a < 0 or b < 0:
        raise DomainError("a, b must be nonnegative")
    if a > 1 and b > 1:
        raise DomainError("a > 1 and b > 1 cannot both hold in the fan region")
    if a > 1:
        return a / (1.0 + a) ** 2
    if b > 1:
        return b / (1.0 + b) ** 2
    return 0.25


def stepWeightW(x, u, v, q, c, d):
    """Local two-layer weight W(x | u, v) for the gap x after the step.

    (u, v) are the increments of the first and second layer.  Uses 0**0 = 1,
    so (x, u, v) = (0, 1, 0) always gives 0.
    """
    if x < 0:
        raise DomainError("gap must be nonnegative")
    qx = q ** x
    if u == 1 and v == 0:
        return 1 - qx
    if u == 1 and v == 1:
        return 1 + d * qx
    if u == 0 and v == 0:
        return 1 + c * qx
    if u == 0 and v == 1:
        return 1 - c * d * qx
    raise DomainError(f"increments must be bits, got ({u}, {v})")


def xlog(coef: float, base: float) -> float:
    """coef * log(base) under the conventions 0*log 0 = 0, (-r)*log 0 = +inf.

    ``base`` must be nonnegative; a positive coefficient against log 0 gives
    -inf, which no caller in the fan region is expected to produce.
    """
    if base < 0:
        raise DomainError("log of a negative number")
    if base == 0:
        if coef == 0:
            return 0.0
        return math.inf if coef < 0 else -math.inf
    if coef == 0:
        return 0.0
    return coef * math.log(base)


"""Boundary rates, the (a, b, c, d, q) reparameterization and phase classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import DomainError, ScopeError
from .qkernel import as_exact

__all__ = [
    "BoundaryRates",
    "FanParams",
    "Phase",
    "Region",
    "PhaseInfo",
    "phi",
    "to_fan",
    "from_fan",
    "classify",
    "effective_densities",
]


def _check_q(q) -> None:
    if not (0 <= q < 1):
        raise DomainError(f"asymmetry q must lie in [0, 1), got {q}")


@dataclass(frozen=True)
class BoundaryRates:
    """Jump rates of open ASEP: entry alpha / exit gamma on the left,
    exit beta / entry delta on the right, bulk left-jump rate q."""

    alpha: float
    beta: float
    gamma: float = 0.0
    delta: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        if not (self.gamma >= 0 and self.delta >= 0):
            raise DomainError("gamma and delta must be nonnegative")
        _check_q(self.q)

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("alpha", "beta", "gamma", "delta", "q")}


@dataclass(frozen=True)
class FanParams:
    """The parameters (a, b, c, d, q) with a, b >= 0, -1 < c, d <= 0, 0 <= q < 1.

    Field values may be floats or Fractions; :meth:`exact` converts to the latter.
    """

    a: float
    b: float
    c: float = 0.0
    d: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise DomainError("a and b must be nonnegative")
        if not (-1 < self.c <= 0 and -1 < self.d <= 0):
            raise DomainError("c and d must lie in (-1, 0]")
        _check_q(self.q)

    @property
    def ab(self):
        return self.a * self.b

    @property
    def in_fan(self) -> bool:
        return self.a * self.b < 1

    def require_fan(self) -> "FanParams":
        if not self.in_fan:
            raise ScopeError(
                f"fan region requires ab < 1, got a*b = {float(self.ab):.17g}"
            )
        return self

    def exact(self) -> "FanParams":
        return FanParams(*(as_exact(getattr(self, k)) for k in ("a", "b", "c", "d", "q")))

    def as_float(self) -> "FanParams":
        return FanParams(*(float(getattr(self, k)) for k in ("a", "b", "c", "d", "q")))

    def tasep_reference(self) -> "FanParams":
        """Same (a, b) with c = d = q = 0."""
        zero = Fraction(0) if isinstance(self.a, Fraction) else 0.0
        return replace(self, c=zero, d=zero, q=zero)

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("a", "b", "c", "d", "q")}


class Phase(enum.Enum):
    MAXIMAL_CURRENT = "MaximalCurrent"
    HIGH_DENSITY = "HighDensity"
    LOW_DENSITY = "LowDensity"
    PHASE_BOUNDARY = "PhaseBoundary"


class Region(enum.Enum):
    FAN = "Fan"
    SHOCK = "Shock"
    REGION_BOUNDARY = "RegionBoundary"


@dataclass(frozen=True)
class PhaseInfo:
    phase: Phase
    region: Region


def phi(x, y, q, sign: int) -> float:
    """Roots of x t^2 - (1-q-x+y) t - y = 0; ``sign=+1`` gives phi_+, ``-1`` phi_-."""
    if not x > 0:
        raise DomainError("phi requires x > 0")
    if not y >= 0:
        raise DomainError("phi requires y >= 0")
    _check_q(q)
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    x, y, q = float(x), float(y), float(q)
    B = 1.0 - q - x + y
    disc = math.sqrt(B * B + 4.0 * x * y)
    # the root whose numerator would cancel is obtained from the product -y/x
    if (sign > 0) == (B >= 0):
        return (B + sign * disc) / (2.0 * x) + 0.0
    other = (B - sign * disc) / (2.0 * x)
    if other == 0.0:
        return 0.0
    return -y / (x * other) + 0.0


def to_fan(rates: BoundaryRates) -> FanParams:
    q = rates.q
    a = phi(rates.alpha, rates.gamma, q, +1)
    b = phi(rates.beta, rates.delta, q, +1)
    c = phi(rates.alpha, rates.gamma, q, -1)
    d = phi(rates.beta, rates.delta, q, -1)
    # clamp roundoff so the output satisfies the FanParams invariants
    return FanParams(max(a, 0.0), max(b, 0.0), min(c, 0.0), min(d, 0.0), float(q))


def _invert_pair(p_plus, p_minus, q):
    # Vieta on x t^2 - (1-q-x+y) t - y: t+ t- = -y/x, t+ + t- = (1-q-x+y)/x,
    # hence (1-q)/x = (1+t+)(1+t-) and y = -t+ t- x.
    x = (1 - q) / ((1 + p_plus) * (1 + p_minus))
    y = -p_plus * p_minus * x
    return x, y


def from_fan(p: FanParams, check: bool = True) -> BoundaryRates:
    """Invert :func:`to_fan` in closed form; the round trip is asserted to 1e-12."""
    alpha, gamma = _invert_pair(p.a, p.c, p.q)
    beta, delta = _invert_pair(p.b, p.d, p.q)
    if isinstance(alpha, Fraction):
        rates = BoundaryRates(alpha, beta, gamma, delta, p.q)
        fl = BoundaryRates(float(alpha), float(beta), float(gamma), float(delta), float(p.q))
    else:
        rates = fl = BoundaryRates(float(alpha), float(beta), max(float(gamma), 0.0) + 0.0,
                                   max(float(delta), 0.0) + 0.0, float(p.q))
    if check:
        back = to_fan(fl)
        for name in ("a", "b", "c", "d"):
            want = float(getattr(p, name))
            got = getattr(back, name)
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise DomainError(
                    f"inverse map failed round trip on {name}: {want!r} -> {got!r}"
                )
    return rates


def classify(p: FanParams) -> PhaseInfo:
    """Phase and region by exact comparison; ties land on the boundary variants."""
    a, b = p.a, p.b
    if a < 1 and b < 1:
        phase = Phase.MAXIMAL_CURRENT
    elif b > 1 and b > a:
        phase = Phase.HIGH_DENSITY
    elif a > 1 and a > b:
        phase = Phase.LOW_DENSITY
    else:
        phase = Phase.PHASE_BOUNDARY
    ab = a * b
    if ab < 1:
        region = Region.FAN
    elif ab > 1:
        region = Region.SHOCK
    else:
        region = Region.REGION_BOUNDARY
    return PhaseInfo(phase, region)


def effective_densities(p: FanParams) -> tuple[float, float]:
    """Left and right effective densities 1/(1+a) and b/(1+b)."""
    return 1 / (1 + p.a), p.b / (1 + p.b)

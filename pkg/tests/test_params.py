import math
from fractions import Fraction

import pytest

from openasep.errors import DomainError, ScopeError
from openasep.params import (
    BoundaryRates,
    FanParams,
    Phase,
    Region,
    classify,
    effective_densities,
    from_fan,
    phi,
    to_fan,
)

GOLD = (1 + math.sqrt(5)) / 2


def test_phi_examples():
    assert phi(0.5, 0, 0, +1) == 1.0
    assert phi(0.5, 0, 0, -1) == 0.0
    assert math.copysign(1.0, phi(0.5, 0, 0, -1)) == 1.0
    assert phi(1, 1, 0, +1) == pytest.approx(GOLD, rel=1e-15)


@pytest.mark.parametrize("x,y,q", [(0.3, 0.0, 0.2), (2.0, 1.5, 0.9), (1e-3, 5.0, 0.0), (7.0, 0.01, 0.5)])
def test_phi_roots(x, y, q):
    for s in (+1, -1):
        t = phi(x, y, q, s)
        assert x * t * t - (1 - q - x + y) * t - y == pytest.approx(0, abs=1e-12 * (1 + x + y))
    assert phi(x, y, q, +1) >= 0
    assert -1 < phi(x, y, q, -1) <= 0


@pytest.mark.parametrize("args", [(0, 1, 0), (-1, 1, 0), (1, -0.1, 0), (1, 1, 1.0), (1, 1, -0.1)])
def test_phi_domain(args):
    with pytest.raises(DomainError):
        phi(*args, +1)


def test_to_fan_examples():
    assert to_fan(BoundaryRates(1, 1)) == FanParams(0, 0, 0, 0, 0)
    p = to_fan(BoundaryRates(0.5, 0.25))
    assert (p.a, p.b, p.c, p.d) == (1, 3, 0, 0)
    p = to_fan(BoundaryRates(1, 1, 1, 1, 0))
    assert p.a == pytest.approx(GOLD) and p.b == pytest.approx(GOLD)
    assert p.c == pytest.approx(1 - GOLD) and p.d == pytest.approx(1 - GOLD)


def test_from_fan_examples():
    r = from_fan(FanParams(0, 0))
    assert (r.alpha, r.beta, r.gamma, r.delta, r.q) == (1, 1, 0, 0, 0)
    r = from_fan(FanParams(1, 3))
    assert (r.alpha, r.beta) == pytest.approx((0.5, 0.25))
    p = FanParams(0.5, 0.5, -0.3, -0.2, 0.4)
    back = to_fan(from_fan(p))
    for k in "abcdq":
        assert getattr(back, k) == pytest.approx(getattr(p, k), rel=1e-12, abs=1e-12)


def test_from_fan_exact():
    r = from_fan(FanParams(Fraction(1, 2), Fraction(1, 3), Fraction(-1, 4), 0, Fraction(1, 5)))
    assert isinstance(r.alpha, Fraction)


def test_classify():
    assert classify(FanParams(0.5, 0.5)).phase is Phase.MAXIMAL_CURRENT
    assert classify(FanParams(0.5, 0.5)).region is Region.FAN
    info = classify(FanParams(2, 0.3))
    assert (info.phase, info.region) == (Phase.LOW_DENSITY, Region.FAN)
    info = classify(FanParams(2, 2))
    assert (info.phase, info.region) == (Phase.PHASE_BOUNDARY, Region.SHOCK)
    assert classify(FanParams(0.3, 3)).phase is Phase.HIGH_DENSITY
    assert classify(FanParams(2, 0.5)).region is Region.REGION_BOUNDARY


def test_effective_densities():
    assert effective_densities(FanParams(0, 0)) == (1, 0)
    assert effective_densities(FanParams(1, 1)) == (0.5, 0.5)
    assert effective_densities(FanParams(3, 0.25)) == pytest.approx((0.25, 0.2))


def test_validation():
    with pytest.raises(DomainError):
        FanParams(-1, 0)
    with pytest.raises(DomainError):
        FanParams(0, 0, c=-1)
    with pytest.raises(DomainError):
        BoundaryRates(0, 1)
    with pytest.raises(ScopeError, match="ab < 1"):
        FanParams(2, 2).require_fan()

import math
from fractions import Fraction

import pytest

from openasep.errors import DomainError
from openasep.qkernel import (
    NumericMode,
    currentJ,
    entropyH,
    qpochhammer,
    qpochhammer_inf,
    stepWeightW,
    xlog,
)


def test_qpochhammer_finite():
    assert qpochhammer(0.5, 0.5, 0) == 1
    assert qpochhammer(Fraction(1, 2), Fraction(1, 2), 2) == Fraction(1, 2) * Fraction(3, 4)
    assert qpochhammer(0.3, 0.0, 5) == pytest.approx(0.7)


def test_qpochhammer_inf_euler():
    # Euler: (q;q)_inf = sum_k (-1)^k q^{k(3k-1)/2} over k in Z
    q = 0.6
    euler = sum((-1) ** k * q ** (k * (3 * k - 1) / 2) for k in range(-40, 41))
    val, bound = qpochhammer_inf(q, q)
    assert val == pytest.approx(euler, rel=1e-14)
    assert bound < 1e-15
    assert qpochhammer(q, q, math.inf) == val


def test_entropy_and_current():
    assert entropyH(0) == 0 and entropyH(1) == 0
    assert entropyH(0.5) == pytest.approx(-math.log(2))
    assert entropyH(1.5) == math.inf
    assert currentJ(0, 0) == 0.25
    assert currentJ(3, 0.1) == pytest.approx(3 / 16)
    assert currentJ(0.1, 3) == pytest.approx(3 / 16)
    with pytest.raises(DomainError):
        currentJ(2, 2)


def test_step_weight():
    q, c, d = 0.5, -0.4, -0.2
    assert stepWeightW(2, 1, 0, q, c, d) == pytest.approx(1 - 0.25)
    assert stepWeightW(2, 1, 1, q, c, d) == pytest.approx(1 + d * 0.25)
    assert stepWeightW(2, 0, 0, q, c, d) == pytest.approx(1 + c * 0.25)
    assert stepWeightW(2, 0, 1, q, c, d) == pytest.approx(1 - c * d * 0.25)
    assert stepWeightW(0, 1, 0, 0, 0, 0) == 0


def test_xlog_conventions():
    assert xlog(0.0, 0.0) == 0.0
    assert xlog(-1.0, 0.0) == math.inf
    assert xlog(2.0, math.e) == pytest.approx(2.0)


def test_numeric_mode():
    with pytest.raises(ValueError):
        NumericMode("decimal")
    assert NumericMode("rational").coerce(0.1) == Fraction(1, 10)

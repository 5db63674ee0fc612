import math

import numpy as np
import pytest

from oracles import H
from openasep import ratefn
from openasep.errors import DomainError, ScopeError
from openasep.ratefn import PiecewiseLinearProfile, PinnedSpec, line_profile

LOG4 = math.log(4)


def test_profile_validation():
    with pytest.raises(DomainError):
        PiecewiseLinearProfile([0, 1], [0.1, 0.5])
    with pytest.raises(DomainError):
        PiecewiseLinearProfile([0, 0.5, 0.5, 1], [0, 0, 0, 0])
    f = PiecewiseLinearProfile([0, 0.5, 1], [0, 1, 1])
    assert not f.admissible()
    assert f(0.25) == pytest.approx(0.5)


def test_convex_envelope():
    f = PiecewiseLinearProfile([0, 0.5, 1], [0, 0.5, 0.5])
    env = ratefn.convex_envelope(f)
    assert env.breakpoints.tolist() == [0, 1] and env.values.tolist() == [0, 0.5]
    g = PiecewiseLinearProfile([0, 0.5, 1], [0, 0, 0.5])
    assert ratefn.convex_envelope(g).values.tolist() == [0, 0, 0.5]
    line = line_profile(0.3)
    assert ratefn.convex_envelope(line).values.tolist() == [0, 0.3]


def test_rate_closed_examples():
    assert ratefn.rate_closed(line_profile(0.5), 0, 0) == pytest.approx(0, abs=1e-12)
    assert ratefn.rate_closed(line_profile(1.0), 0, 0) == pytest.approx(LOG4, abs=1e-12)
    assert ratefn.rate_closed(PiecewiseLinearProfile([0, 0.25, 1], [0, 0.5, 0.5]), 0, 0) == math.inf
    # frozen: 2H(0.3) + log 4
    assert ratefn.rate_closed(line_profile(0.3), 0, 0) == pytest.approx(2 * H(0.3) + LOG4, abs=1e-12)
    assert 2 * H(0.3) + LOG4 == pytest.approx(0.164565, abs=1e-6)


@pytest.mark.parametrize("a,b,rho", [(0.5, 0.5, 0.5), (0.0, 0.3, 0.5), (2.0, 0.2, 1 / 3), (0.2, 3.0, 0.75)])
def test_zero_at_optimal_line(a, b, rho):
    assert ratefn.rate_closed(line_profile(rho), a, b) == pytest.approx(0, abs=1e-10)


def test_nonnegative_random_profiles():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        xs = np.concatenate([[0], np.sort(rng.uniform(0.01, 0.99, k - 1)), [1]])
        ys = np.concatenate([[0], np.cumsum(np.diff(xs) * rng.uniform(0, 1, k))])
        f = PiecewiseLinearProfile(xs, ys)
        for a, b in ((0, 0), (0.5, 0.5), (2, 0.2)):
            assert ratefn.rate_closed(f, a, b) >= -1e-12


def test_scope():
    with pytest.raises(ScopeError, match="ab < 1"):
        ratefn.rate_closed(line_profile(0.5), 2, 2)


def test_rate_pair():
    f = line_profile(0.5)
    assert ratefn.rate_pair(f, f, 0, 0) == pytest.approx(0, abs=1e-12)
    assert ratefn.rate_pair(f, f, 0.5, 0.5) == pytest.approx(0, abs=1e-12)
    g = line_profile(0.6)
    assert ratefn.rate_pair(f, g, 0, 0) == math.inf
    assert ratefn.rate_pair(f, g, 0.5, 0.5) > ratefn.rate_pair(f, f, 0.5, 0.5)
    # b = 0 forces g(1) = f(1)
    assert ratefn.rate_pair(f, line_profile(0.4), 0.5, 0) == math.inf


def test_pair_dominates_closed():
    rng = np.random.default_rng(1)
    f = PiecewiseLinearProfile([0, 0.3, 0.6, 1], [0, 0.25, 0.3, 0.55])
    for a, b in ((0, 0), (0.5, 0.5), (2, 0.2), (0.3, 0)):
        base = ratefn.rate_closed(f, a, b)
        for _ in range(30):
            xs = np.linspace(0, 1, 6)
            ys = np.concatenate([[0], np.cumsum(0.2 * rng.uniform(0, 1, 5))])
            g = PiecewiseLinearProfile(xs, ys)
            assert ratefn.rate_pair(f, g, a, b) >= base - 1e-12


def test_variational_matches_closed():
    for a, b in ((0, 0), (0.5, 0.5)):
        for rho in (0.3, 0.5):
            f = line_profile(rho)
            v = ratefn.rate_variational(f, a, b, 100)
            assert abs(v - ratefn.rate_closed(f, a, b)) <= 5e-2
    f = PiecewiseLinearProfile([0, 0.5, 1], [0, 0.45, 0.5])
    v, g = ratefn.rate_variational(f, 2, 0.2, 100, return_g=True)
    assert v == pytest.approx(ratefn.rate_closed(f, 2, 0.2), abs=5e-2)
    assert g.admissible(1e-9)


def test_finite_dim_rate():
    assert ratefn.finite_dim_rate(PinnedSpec((1.0,), (0.5,)), 0, 0, 100) == pytest.approx(0, abs=1e-6)
    assert ratefn.finite_dim_rate(PinnedSpec((0.5, 1.0), (0.6, 0.7)), 0, 0, 50) == math.inf
    val, f = ratefn.finite_dim_rate(PinnedSpec((0.5, 1.0), (0.2, 0.6)), 0.5, 0.5, 100, return_f=True)
    assert f(0.5) == pytest.approx(0.2, abs=1e-9) and f(1.0) == pytest.approx(0.6, abs=1e-9)
    assert val == pytest.approx(ratefn.rate_closed(f, 0.5, 0.5))
    # pinning the optimum costs nothing, any other pin costs something
    assert val > 1e-3
    with pytest.raises(DomainError):
        PinnedSpec((0.5,), (0.2,))


def test_finite_dim_rate_continuity_at_cone_boundary():
    vals = [ratefn.finite_dim_rate(PinnedSpec((0.5, 1.0), (e, 0.5)), 0.5, 0.5, 100) for e in (0.05, 0.01, 0.002)]
    edge = ratefn.finite_dim_rate(PinnedSpec((0.5, 1.0), (0.0, 0.5)), 0.5, 0.5, 100)
    assert abs(vals[-1] - edge) < abs(vals[0] - edge) + 1e-9
    assert abs(vals[-1] - edge) < 5e-2


def test_interior_perturbation():
    f = PiecewiseLinearProfile([0, 0.5, 1], [0, 0.2, 0.4])
    assert ratefn.interior_perturbation(f, 0.1) is f
    f = PiecewiseLinearProfile([0, 0.5, 1], [0, 0, 0.5])
    fe = ratefn.interior_perturbation(f, 0.1)
    assert fe.admissible()
    assert fe(0.1) == pytest.approx(0.1)
    assert fe.entropy_integral() == pytest.approx(f.entropy_integral(), abs=1e-12)
    prev = None
    for eps in (0.1, 0.01, 0.001):
        d = abs(ratefn.rate_closed(ratefn.interior_perturbation(f, eps), 0.5, 0.5)
                - ratefn.rate_closed(f, 0.5, 0.5))
        assert prev is None or d <= prev + 1e-12
        prev = d
    with pytest.raises(DomainError):
        ratefn.interior_perturbation(f, 0.6)

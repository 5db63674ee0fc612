import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import catalan, twolayer_weight_bruteforce
from openasep import mpa, twolayer
from openasep.errors import DomainError, InvalidConfigError, ScopeError
from openasep.params import FanParams
from openasep.qkernel import RATIONAL
from openasep.twolayer import TwoLayerConfig, WindowSpec

P = FanParams(Fraction(1, 2), Fraction(1, 2), Fraction(-2, 5), Fraction(-1, 5), Fraction(1, 3))


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        TwoLayerConfig([1, 1], [0, 0])
    with pytest.raises(InvalidConfigError):
        TwoLayerConfig([0, 0], [0, 1])
    cfg = TwoLayerConfig([0, 1, 1], [-1, -1, 0])
    assert cfg.gaps == (1, 2, 1)
    assert cfg.to_gap_path().to_config() == cfg


def test_weight_against_definition():
    for cfg, w in twolayer.enumerate_configs(P, 3, G_cut=3, mode=RATIONAL):
        ref = twolayer_weight_bruteforce(cfg.lambda1, cfg.lambda2, P.a, P.b, P.c, P.d, P.q)
        assert w == ref


def test_catalan_partition():
    p = FanParams(0, 0)
    for N in range(1, 15):
        assert twolayer.partition_Z(p, N, RATIONAL) == catalan(N + 1)


def test_enumeration_sum_matches_partition():
    p = FanParams(0, Fraction(1, 2), 0, Fraction(-1, 3), Fraction(1, 2))
    total = sum(w for _, w in twolayer.enumerate_configs(p, 5, mode=RATIONAL))
    assert total == twolayer.partition_Z(p, 5, RATIONAL)


def test_marginal_equals_matrix_law_exactly():
    for N in (1, 3, 5):
        m = twolayer.marginal_first_layer(P, N, RATIONAL)
        t = mpa.height_law(P, N, RATIONAL)
        assert all(x == y for x, y in zip(m, t))


def test_boltzmann():
    p = FanParams(0.5, 0.5, -0.4, -0.4, 0.5)
    qq = 1.0
    for k in range(1, 200):
        qq *= 1 - 0.5 ** k
    rng = np.random.default_rng(3)
    for cfg in twolayer.exact_sample(p, 12, rng, size=200):
        f = twolayer.boltzmann_factor(cfg, p)
        assert 0 < f <= 1 / qq + 1e-12
        ref = twolayer.weight(cfg, p) / twolayer.weight(cfg, p.tasep_reference())
        assert f == pytest.approx(ref, rel=1e-12)
        r = min(cfg.gaps[1:]) - 1
        if r >= 0:
            assert f >= twolayer.boltzmann_lower_bound(p, 12, r) - 1e-15


def test_exact_sampler_chisquare():
    p = FanParams(0.5, 0.5, -0.4, -0.4, 0.5)
    N, n = 4, 40_000
    enum = twolayer.enumerate_configs(p, N)
    keys = {(c.lambda1, c.lambda2): w for c, w in enum}
    Z = sum(keys.values())
    rng = np.random.default_rng(11)
    lam1, lam2 = twolayer.sample_arrays(p, N, rng, n)
    cnt = Counter(zip(map(tuple, lam1.tolist()), map(tuple, lam2.tolist())))
    assert set(cnt) <= set(keys)
    exp = np.array([n * w / Z for w in keys.values()])
    obs = np.array([cnt.get(k, 0) for k in keys])
    big = exp > 5
    obs_b = np.append(obs[big], obs[~big].sum())
    exp_b = np.append(exp[big], exp[~big].sum())
    assert chisquare(obs_b, exp_b * obs_b.sum() / exp_b.sum()).pvalue > 1e-3


def test_window_spec():
    with pytest.raises(DomainError):
        WindowSpec((0.5, 1.0), (0.1, 0.4), (0.3, 0.95))
    w = WindowSpec((1.0,), (0.4,), (0.6,))
    assert w.contains([0, 1, 1, 2, 2])
    assert not w.contains([0, 1, 2, 3, 4])


def test_ratio_window_zero_at_tasep():
    w = WindowSpec((1.0,), (0.4,), (0.6,))
    out = twolayer.ratio_window_logasy(FanParams(0.5, 0.5), w, [20, 40])
    assert all(v == 0 for _, v in out)
    out = twolayer.ratio_window_logasy(FanParams(0.5, 0.5, -0.4, -0.4, 0.5), w, [50, 200])
    assert abs(out[1][1]) < abs(out[0][1])


def test_separation_small():
    w = WindowSpec((1.0,), (0.4,), (0.6,))
    est = twolayer.separation_probability(0.5, 0.5, 2, 0.2, w, 50, 2000, np.random.default_rng(0))
    assert est.ci_low <= est.estimate <= est.ci_high
    assert est.estimate > est.bound
    with pytest.raises(ScopeError):
        twolayer.separation_probability(2, 2, 2, 0.2, w, 50, 10, np.random.default_rng(0))


def test_separation_event_trivial():
    lam1 = np.array([[0, 1, 2]])
    lam2 = np.array([[0, 1, 2]])
    assert twolayer.separation_event(lam1, lam2, 0, 1.0)[0]
    assert not twolayer.separation_event(lam1, lam2, 0, 0.0)[0]

import math

import numpy as np
import pytest

from openasep.errors import TruncationError
from openasep.params import FanParams
from openasep.truncation import band_step, choose_cutoff, refine_cutoff, tail_log_bound


def test_exact_cases():
    assert choose_cutoff(FanParams(0, 0.7), 10, 1e-13).exact
    c = choose_cutoff(FanParams(3, 0), 10, 1e-13)
    assert c.exact and c.G == 10 and c.M == 11


def test_certificate_decreases():
    p = FanParams(0.5, 0.5, -0.4, -0.4, 0.5)
    c = choose_cutoff(p, 20, 1e-13)
    assert c.log_tail <= math.log(1e-13) + c.log_lower
    assert tail_log_bound(p, 20, c.G + 1) < c.log_tail
    r = refine_cutoff(p, 20, 1e-13, c, c.log_lower - 30)
    assert r.G > c.G


def test_outside_fan():
    with pytest.raises(TruncationError):
        choose_cutoff(FanParams(2, 0.5), 5, 1e-13)


def test_band_step_matches_dense():
    rng = np.random.default_rng(0)
    M = 6
    d, u, w = rng.random(M), rng.random(M - 1), rng.random(M - 1)
    T = np.diag(d) + np.diag(u, 1) + np.diag(w, -1)
    v = rng.random((3, M))
    assert np.allclose(band_step(v, d, u, w), v @ T)

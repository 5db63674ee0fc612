"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``criterion k: PASS|FAIL`` line (visible with -s or
in the -v summary) and records its wall time against the budget.
"""
import math
import time
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import all_bridges, catalan
from openasep import bridges, ctmc, experiments, mpa, ratefn, twolayer
from openasep.params import BoundaryRates, FanParams, from_fan, to_fan
from openasep.qkernel import FLOAT, RATIONAL

GRID = experiments.default_fan_grid()
WINDOW = twolayer.WindowSpec((1.0,), (0.4,), (0.6,))


@pytest.fixture
def report(request, pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    t0 = time.perf_counter()

    def emit(k, ok, budget, detail=""):
        dt = time.perf_counter() - t0
        ok = bool(ok) and dt < budget
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  ({dt:.1f}s / {budget}s) {detail}"
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        return ok

    return emit


def test_c01_dehp(report):
    exact = mpa.check_dehp(mpa.build_ed(FanParams(0, 0), 16, RATIONAL), BoundaryRates(1, 1), tol=0)
    ok = exact["bulk"] == 0 and exact["W"] == 0 and exact["V"] == 0
    worst = 0.0
    for p in GRID:
        res = mpa.check_dehp(mpa.build_ed(p, 16), from_fan(p), tol=1e-13)
        ok = ok and res["ok"]
        worst = max(worst, res["max"])
    assert report(1, ok, 1, f"max float residual {worst:.2e}")


def test_c02_generator(report):
    worst = 0.0
    for p in GRID:
        r = from_fan(p)
        for N in range(1, 9):
            worst = max(worst, mpa.generator_stationarity_check(r, N))
    r = from_fan(GRID[0])
    neg = mpa.generator_stationarity_check(r, 6, measure=np.full(64, 1 / 64))
    ok = worst <= 1e-9 and neg >= 1e-2
    assert report(2, ok, 30, f"max |muQ| {worst:.2e}, uniform control {neg:.3g}")


def test_c03_two_layer_marginal(report):
    fl = experiments.run_theorem23_grid(GRID, range(1, 11), FLOAT, tol=1e-9)
    ex = experiments.run_theorem23_grid(GRID, range(1, 9), RATIONAL)
    assert report(3, fl["ok"] and ex["ok"] and ex["max_tv"] == 0, 120,
                  f"float max TV {fl['max_tv']:.2e}, rational max TV {ex['max_tv']}")


def test_c04_catalan(report):
    p = FanParams(0, 0)
    ok = all(mpa.partition_value(p, N, RATIONAL) == catalan(N + 1) for N in range(1, 15))
    D = np.array([[1, 1, 0], [0, 1, 1], [0, 0, 1]])
    E = D.T
    W = np.array([1, 0, 0])
    direct = W @ (D + E) @ (D + E) @ W
    ok = ok and mpa.partition_value(p, 2, RATIONAL) == 5 == direct
    assert report(4, ok, 1, "Z_N = Catalan(N+1) for N <= 14")


LEMMA24_POINTS = [
    FanParams(0.5, 0.5),
    FanParams(0.5, 0.5, -0.4, -0.4, 0.5),
    FanParams(2.0, 0.2),
    FanParams(0.2, 2.0, -0.3, -0.2, 0.5),
    FanParams(3.0, 0.1, 0.0, -0.4, 0.5),
]


def test_c05_partition_asymptotics(report):
    ok = True
    finals = []
    for p in LEMMA24_POINTS:
        res = experiments.run_lemma24(p, [125, 250, 500, 1000, 2000], tol=0.02)
        ok = ok and res["ok"]
        finals.append(res["rows"][-1]["deviation"])
    assert report(5, ok, 120, "N=2000 deviations " + ", ".join(f"{v:.4f}" for v in finals))


def test_c06_rate_formulas(report):
    worst = 0.0
    for a, b in ((0, 0), (0.5, 0.5), (2, 0.2)):
        for rho in (0.2, 0.3, 0.5, 0.7):
            f = ratefn.line_profile(rho)
            worst = max(worst, abs(ratefn.rate_closed(f, a, b) - ratefn.rate_variational(f, a, b, 200)))
    assert report(6, worst <= 5e-2, 300, f"max |closed - variational| {worst:.2e}")


def test_c07_ldp(report):
    r1 = experiments.ldp_convergence(FanParams(0, 0), [0.3, 0.5, 0.7], [50, 100, 200, 400], tol=0.05)
    r2 = experiments.ldp_convergence(FanParams(2, 0.2), [0.2, 1 / 3, 0.5], [50, 100, 200, 400], tol=0.05)
    gaps = [v["final_gap"] for v in r1["verdicts"] + r2["verdicts"]]
    assert report(7, r1["ok"] and r2["ok"], 300, f"max N=400 gap {max(gaps):.4f}")


def test_c08_boltzmann_ratio(report):
    res = experiments.run_corollary26(FanParams(0.5, 0.5, -0.4, -0.4, 0.5), [WINDOW], [50, 300], tol=0.05)
    vals = [r["value"] for r in res["rows"]]
    ok = abs(vals[-1]) <= 0.05 and abs(vals[-1]) < abs(vals[0])
    assert report(8, ok and res["ok"], 300, f"N=50 {vals[0]:.4f}, N=300 {vals[-1]:.4f}")


def test_c09_separation(report):
    ok = True
    lows = []
    for ab in ((0.0, 0.0), (0.5, 0.5)):
        res = experiments.run_prop25(ab, 2, 0.2, [WINDOW], [50, 100, 200], samples=10_000)
        ok = ok and res["ok"] and all(r["accepted"] >= 10_000 for r in res["rows"])
        lows += [r["estimate"] for r in res["rows"]]
    assert report(9, ok, 300, f"smallest estimate {min(lows):.3f}")


def test_c10_bridge_suites(report):
    res = experiments.run_bridge_suite(instances=1000, max_N=10, gibbs_N=6)
    counts = ", ".join(f"{k} {v['violations']}/{v['instances']}" for k, v in sorted(res["summary"].items()))
    assert report(10, res["ok"], 120, counts)


def test_c11_gillespie(report):
    tvs = []
    for rates in (BoundaryRates(1, 1), BoundaryRates(0.6, 0.7, 0.2, 0.1, 0.3)):
        table = mpa.stationary_table(to_fan(rates), 6)
        st = ctmc.gillespie_run(rates, 6, 1e12, burninT=50.0, rng=np.random.default_rng(20240613),
                                max_events=1_000_000)
        tvs.append(0.5 * float(np.abs(st.measure - table).sum()))
    assert report(11, max(tvs) <= 0.02, 60, "TV " + ", ".join(f"{v:.4f}" for v in tvs))


def test_c12_samplers(report):
    rng = np.random.default_rng(20240613)
    n = 100_000
    p = FanParams(0.5, 0.5, -0.4, -0.4, 0.5)
    enum = {(c.lambda1, c.lambda2): w for c, w in twolayer.enumerate_configs(p, 5)}
    Z = sum(enum.values())
    lam1, lam2 = twolayer.sample_arrays(p, 5, rng, n)
    cnt = Counter(zip(map(tuple, lam1.tolist()), map(tuple, lam2.tolist())))
    exp = np.array([n * w / Z for w in enum.values()])
    obs = np.array([cnt.get(k, 0) for k in enum])
    big = exp >= 5
    obs_b = np.append(obs[big], obs[~big].sum())
    exp_b = np.append(exp[big], exp[~big].sum())
    p1 = chisquare(obs_b, exp_b * obs_b.sum() / exp_b.sum()).pvalue
    paths = all_bridges(6, 0, 3)
    arr = bridges.sample_bridges_batch(6, 0, 3, n, rng)
    cnt = Counter(map(tuple, arr.tolist()))
    p2 = chisquare([cnt.get(q, 0) for q in paths]).pvalue
    ok = p1 > 1e-3 and p2 > 1e-3 and sum(cnt.values()) == n
    assert report(12, ok, 60, f"p-values {p1:.3f} (two-layer), {p2:.3f} (bridge)")

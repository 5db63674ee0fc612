"""Bernoulli random walk bridges: counting, uniform sampling, couplings and
exact checks of the correlation inequalities they satisfy."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.stats import binomtest

from .errors import DomainError, EmptySetError, ResourceBudgetError

__all__ = [
    "BernoulliPath",
    "BridgeSpec",
    "PathPair",
    "ThresholdEvent",
    "InequalityReport",
    "count_paths",
    "enumerate_paths",
    "sample_bridge",
    "count_pairs",
    "enumerate_pairs",
    "sample_pair",
    "gibbs_resample",
    "gibbs_pushforward_deviation",
    "monotone_couple",
    "verify_two_path_monotone",
    "verify_fkg",
    "hypergeometric_onepoint",
    "verify_hypergeometric_ratio",
    "fluctuation_tail",
]

INF = math.inf


@dataclass(frozen=True)
class BernoulliPath:
    values: tuple

    def __post_init__(self):
        v = tuple(int(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if any(b - a not in (0, 1) for a, b in zip(v, v[1:])):
            raise DomainError("Bernoulli path increments must be 0 or 1")

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self):
        return len(self.values)


def _as_bound(arr, N, default):
    if arr is None:
        return np.full(N + 1, default, dtype=float)
    a = np.asarray(arr, dtype=float)
    if a.shape != (N + 1,):
        raise DomainError(f"constraint must have length N+1 = {N + 1}")
    return a


@dataclass(frozen=True)
class BridgeSpec:
    """Paths on 0..N from x to y with floor <= L <= ceiling (+-inf allowed)."""

    N: int
    x: int
    y: int
    ceiling: tuple | None = None
    floor: tuple | None = None

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("N must be nonnegative")
        for name in ("ceiling", "floor"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(v) for v in val))
                _as_bound(val, self.N, 0.0)

    @property
    def f(self) -> np.ndarray:
        return _as_bound(self.ceiling, self.N, INF)

    @property
    def g(self) -> np.ndarray:
        return _as_bound(self.floor, self.N, -INF)

    def with_bounds(self, ceiling=None, floor=None) -> "BridgeSpec":
        """Same bridge with extra constraints intersected in."""
        f, g = self.f, self.g
        if ceiling is not None:
            f = np.minimum(f, _as_bound(ceiling, self.N, INF))
        if floor is not None:
            g = np.maximum(g, _as_bound(floor, self.N, -INF))
        return BridgeSpec(self.N, self.x, self.y, tuple(f), tuple(g))


@dataclass(frozen=True)
class PathPair:
    L1: BernoulliPath
    L2: BernoulliPath

    def __post_init__(self):
        if len(self.L1) != len(self.L2):
            raise DomainError("paths must have the same length")
        if any(a < b for a, b in zip(self.L1.values, self.L2.values)):
            raise DomainError("need L1 >= L2 pointwise")

    def key(self) -> tuple:
        return (self.L1.values, self.L2.values)


def _ranges(spec: BridgeSpec):
    N, x, y = spec.N, spec.x, spec.y
    f, g = spec.f, spec.g
    lo, hi = [], []
    for j in range(N + 1):
        low = max(x, y - (N - j))
        high = min(x + j, y)
        if g[j] > -INF:
            low = max(low, math.ceil(g[j]))
        if f[j] < INF:
            high = min(high, math.floor(f[j]))
        lo.append(low)
        hi.append(high)
    return lo, hi


def _suffix_counts(spec: BridgeSpec):
    """S[j][v - lo[j]] = number of valid continuations from L(j) = v."""
    lo, hi = _ranges(spec)
    N = spec.N
    S = [None] * (N + 1)
    S[N] = [1 if v == spec.y else 0 for v in range(lo[N], hi[N] + 1)]
    for j in range(N - 1, -1, -1):
        row = []
        for v in range(lo[j], hi[j] + 1):
            c = 0
            for w in (v, v + 1):
                if lo[j + 1] <= w <= hi[j + 1]:
                    c += S[j + 1][w - lo[j + 1]]
            row.append(c)
        S[j] = row
    return S, lo, hi


def _count_at(S, lo, hi, j, v):
    if lo[j] <= v <= hi[j]:
        return S[j][v - lo[j]]
    return 0


def count_paths(spec: BridgeSpec) -> int:
    if spec.y - spec.x > spec.N or spec.y < spec.x:
        return 0
    S, lo, hi = _suffix_counts(spec)
    return _count_at(S, lo, hi, 0, spec.x)


def enumerate_paths(spec: BridgeSpec, budget: int = 1_000_000):
    """All paths of a bridge spec as tuples (small N only)."""
    if comb(spec.N, max(0, min(spec.N, spec.y - spec.x))) > budget:
        raise ResourceBudgetError("too many paths to enumerate")
    k = spec.y - spec.x
    if k < 0 or k > spec.N:
        return []
    f, g = spec.f, spec.g
    out = []
    for ups in itertools.combinations(range(spec.N), k):
        L = [spec.x]
        s = set(ups)
        for j in range(spec.N):
            L.append(L[-1] + (1 if j in s else 0))
        if all(g[j] <= L[j] <= f[j] for j in range(spec.N + 1)):
            out.append(tuple(L))
    return out


def sample_bridge(spec: BridgeSpec, rng: np.random.Generator) -> BernoulliPath:
    """Uniform sample from the bridge's path set."""
    N, x, y = spec.N, spec.x, spec.y
    unconstrained = spec.ceiling is None and spec.floor is None
    if y < x or y - x > N:
        raise EmptySetError("no Bernoulli path joins the endpoints")
    L = [x]
    if unconstrained:
        for j in range(N):
            L.append(L[-1] + int(rng.random() * (N - j) < y - L[-1]))
        return BernoulliPath(L)
    S, lo, hi = _suffix_counts(spec)
    if _count_at(S, lo, hi, 0, x) == 0:
        raise EmptySetError("constrained path set is empty")
    for j in range(N):
        v = L[-1]
        c0 = _count_at(S, lo, hi, j + 1, v)
        c1 = _count_at(S, lo, hi, j + 1, v + 1)
        L.append(v + int(rng.random() < c1 / (c0 + c1)))
    return BernoulliPath(L)


def sample_bridges_batch(N: int, x: int, y: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` unconstrained bridges at once, shape (size, N+1)."""
    if y < x or y - x > N:
        raise EmptySetError("no Bernoulli path joins the endpoints")
    L = np.empty((size, N + 1), dtype=np.int64)
    L[:, 0] = x
    for j in range(N):
        up = rng.random(size) * (N - j) < (y - L[:, j])
        L[:, j + 1] = L[:, j] + up
    return L


def _pair_suffix(N, x1, x2, y1, y2, floor1=None, ceil2=None):
    g1 = _as_bound(floor1, N, -INF)
    f2 = _as_bound(ceil2, N, INF)
    S = [dict() for _ in range(N + 1)]
    if y1 >= y2 and y1 >= g1[N] and y2 <= f2[N]:
        S[N][(y1, y2)] = 1
    for j in range(N - 1, -1, -1):
        row = {}
        for (w1, w2), c in S[j + 1].items():
            for d1 in (0, 1):
                for d2 in (0, 1):
                    v1, v2 = w1 - d1, w2 - d2
                    if v1 < v2 or v1 < g1[j] or v2 > f2[j]:
                        continue
                    if not (x1 <= v1 <= x1 + j and x2 <= v2 <= x2 + j):
                        continue
                    row[(v1, v2)] = row.get((v1, v2), 0) + c
        S[j] = row
    return S


def count_pairs(N, x1, x2, y1, y2, floor1=None, ceil2=None) -> int:
    """Number of ordered pairs L1 >= L2 with the given endpoints (and L1 >= floor1, L2 <= ceil2)."""
    if x1 < x2:
        return 0
    return _pair_suffix(N, x1, x2, y1, y2, floor1, ceil2)[0].get((x1, x2), 0)


def enumerate_pairs(N, x1, x2, y1, y2):
    p1 = enumerate_paths(BridgeSpec(N, x1, y1))
    p2 = enumerate_paths(BridgeSpec(N, x2, y2))
    return [(a, b) for a in p1 for b in p2 if all(u >= v for u, v in zip(a, b))]


def sample_pair(N, x1, x2, y1, y2, rng: np.random.Generator) -> PathPair:
    """Uniform ordered pair of bridges via suffix counts over (L1(j), L2(j))."""
    S = _pair_suffix(N, x1, x2, y1, y2)
    if x1 < x2 or S[0].get((x1, x2), 0) == 0:
        raise EmptySetError("no ordered pair of bridges with these endpoints")
    L1, L2 = [x1], [x2]
    for j in range(N):
        v1, v2 = L1[-1], L2[-1]
        opts = [((v1 + d1, v2 + d2), S[j + 1].get((v1 + d1, v2 + d2), 0))
                for d1 in (0, 1) for d2 in (0, 1)]
        tot = sum(c for _, c in opts)
        u = rng.random() * tot
        acc = 0
        for (w1, w2), c in opts:
            acc += c
            if c and u < acc:
                break
        L1.append(w1)
        L2.append(w2)
    return PathPair(BernoulliPath(L1), BernoulliPath(L2))


def _refill_spec(pair: PathPair, a: int, b: int, which: int) -> BridgeSpec:
    L1, L2 = pair.L1.values, pair.L2.values
    if which == 1:
        return BridgeSpec(b - a, L1[a], L1[b], floor=L2[a:b + 1])
    return BridgeSpec(b - a, L2[a], L2[b], ceiling=L1[a:b + 1])


def gibbs_resample(pair: PathPair, a: int, b: int, which: int, rng: np.random.Generator) -> PathPair:
    """Resample layer ``which`` on [a, b] given everything else."""
    N = pair.L1.N
    if not (0 <= a <= b <= N):
        raise DomainError("need 0 <= a <= b <= N")
    if which not in (1, 2):
        raise DomainError("which must be 1 or 2")
    if a == b:
        return pair
    new = list(sample_bridge(_refill_spec(pair, a, b, which), rng).values)
    if which == 1:
        L1 = pair.L1.values[:a] + tuple(new) + pair.L1.values[b + 1:]
        return PathPair(BernoulliPath(L1), pair.L2)
    L2 = pair.L2.values[:a] + tuple(new) + pair.L2.values[b + 1:]
    return PathPair(pair.L1, BernoulliPath(L2))


def gibbs_pushforward_deviation(N, x1, x2, y1, y2, a, b, which) -> Fraction:
    """max |push-forward - uniform| of one resampling step, computed exactly."""
    pairs = enumerate_pairs(N, x1, x2, y1, y2)
    if not pairs:
        raise EmptySetError("empty pair set")
    n = len(pairs)
    mass = {pq: Fraction(0) for pq in pairs}
    for L1, L2 in pairs:
        pair = PathPair(BernoulliPath(L1), BernoulliPath(L2))
        if a == b:
            mass[(L1, L2)] += Fraction(1, n)
            continue
        refills = enumerate_paths(_refill_spec(pair, a, b, which))
        for seg in refills:
            if which == 1:
                key = (L1[:a] + seg + L1[b + 1:], L2)
            else:
                key = (L1, L2[:a] + seg + L2[b + 1:])
            mass[key] += Fraction(1, n * len(refills))
    return max(abs(m - Fraction(1, n)) for m in mass.values())


def _extreme_paths(spec: BridgeSpec):
    S, lo, hi = _suffix_counts(spec)
    if _count_at(S, lo, hi, 0, spec.x) == 0:
        raise EmptySetError("constrained path set is empty")
    # forward reachability, then keep states with a valid continuation
    reach = [{spec.x}]
    for j in range(spec.N):
        nxt = set()
        for v in reach[-1]:
            for w in (v, v + 1):
                if _count_at(S, lo, hi, j + 1, w) > 0:
                    nxt.add(w)
        reach.append(nxt)
    low = np.array([min(r) for r in reach], dtype=np.int64)
    high = np.array([max(r) for r in reach], dtype=np.int64)
    return low, high


def _sweep(L, f, g, us):
    """One systematic heat-bath sweep over interior sites, shared uniforms ``us``."""
    N = L.size - 1
    for z in range(1, N):
        a, c = L[z - 1], L[z + 1]
        if c == a:
            L[z] = a
        elif c == a + 2:
            L[z] = a + 1
        else:
            can_lo = g[z] <= a <= f[z]
            can_hi = g[z] <= a + 1 <= f[z]
            if can_lo and can_hi:
                L[z] = a if us[z - 1] < 0.5 else a + 1
            else:
                L[z] = a if can_lo else a + 1
    return L


def _check_ordered(spec_b: BridgeSpec, spec_t: BridgeSpec):
    if spec_b.N != spec_t.N:
        raise DomainError("coupled bridges need the same length")
    if not (spec_b.x <= spec_t.x and spec_b.y <= spec_t.y):
        raise DomainError("unordered endpoints: need x_b <= x_t and y_b <= y_t")
    if np.any(spec_b.g > spec_t.g) or np.any(spec_b.f > spec_t.f):
        raise DomainError("unordered constraints: need floor_b <= floor_t and ceiling_b <= ceiling_t")


def monotone_couple(spec_b: BridgeSpec, spec_t: BridgeSpec, rng: np.random.Generator,
                    sweeps: int | None = None, max_doublings: int = 30):
    """Coupled uniform bridges with L_b <= L_t everywhere.

    Heat-bath Glauber dynamics driven by shared uniforms.  By default the
    output comes from coupling from the past (exact marginals); with
    ``sweeps`` set, ordered extreme starts are run forward that many sweeps.
    """
    _check_ordered(spec_b, spec_t)
    N = spec_b.N
    fb, gb, ft, gt = spec_b.f, spec_b.g, spec_t.f, spec_t.g
    lo_b, hi_b = _extreme_paths(spec_b)
    lo_t, hi_t = _extreme_paths(spec_t)
    if sweeps is not None:
        Lb, Lt = lo_b.copy(), hi_t.copy()
        for _ in range(sweeps):
            us = rng.random(max(N - 1, 0))
            _sweep(Lb, fb, gb, us)
            _sweep(Lt, ft, gt, us)
        out_b, out_t = Lb, Lt
    else:
        noise = []  # noise[k] drives the sweep at time -(k+1)
        T = 1
        for _ in range(max_doublings):
            while len(noise) < T:
                noise.append(rng.random(max(N - 1, 0)))
            chains = [lo_b.copy(), hi_b.copy(), lo_t.copy(), hi_t.copy()]
            for k in range(T - 1, -1, -1):
                us = noise[k]
                _sweep(chains[0], fb, gb, us)
                _sweep(chains[1], fb, gb, us)
                _sweep(chains[2], ft, gt, us)
                _sweep(chains[3], ft, gt, us)
            if np.array_equal(chains[0], chains[1]) and np.array_equal(chains[2], chains[3]):
                out_b, out_t = chains[0], chains[2]
                break
            T *= 2
        else:
            raise ResourceBudgetError("coupling from the past did not coalesce")
    if np.any(out_b > out_t):
        raise AssertionError("monotone coupling produced crossing paths")
    return BernoulliPath(out_b), BernoulliPath(out_t)


@dataclass(frozen=True)
class InequalityReport:
    lemma: str
    instance: dict
    lhs: Fraction
    rhs: Fraction
    satisfied: bool

    @property
    def slack(self):
        return self.lhs - self.rhs

    def as_dict(self) -> dict:
        return {"lemma": self.lemma, "instance": self.instance, "lhs": float(self.lhs),
                "rhs": float(self.rhs), "satisfied": self.satisfied}


def verify_two_path_monotone(N, x1, x2, y1, y2, h1, h2) -> InequalityReport:
    """P_pair(L1 >= h1, L2 <= h2) >= P(L1 >= h1) P(L2 <= h2), exactly."""
    if N > 10:
        raise ResourceBudgetError("exact check limited to N <= 10")
    total = count_pairs(N, x1, x2, y1, y2)
    if total == 0:
        raise EmptySetError("empty pair set")
    lhs = Fraction(count_pairs(N, x1, x2, y1, y2, floor1=h1, ceil2=h2), total)
    b1 = BridgeSpec(N, x1, y1)
    b2 = BridgeSpec(N, x2, y2)
    p1 = Fraction(count_paths(b1.with_bounds(floor=h1)), count_paths(b1))
    p2 = Fraction(count_paths(b2.with_bounds(ceiling=h2)), count_paths(b2))
    rhs = p1 * p2
    inst = {"N": N, "x": (x1, x2), "y": (y1, y2)}
    return InequalityReport("two_path_monotone", inst, lhs, rhs, lhs >= rhs)


@dataclass(frozen=True)
class ThresholdEvent:
    """Intersection over j of {L(j) >= t_j} (increasing) or {L(j) <= t_j} (decreasing);
    infinite thresholds leave a site free."""

    thresholds: tuple
    increasing: bool = True

    def bounds(self, N):
        t = _as_bound(self.thresholds, N, 0.0)
        return {"floor": t} if self.increasing else {"ceiling": t}


def verify_fkg(spec: BridgeSpec, B: ThresholdEvent, C: ThresholdEvent) -> InequalityReport:
    """P(B and C) >= P(B) P(C) for threshold events of the same monotonicity."""
    if spec.N > 10:
        raise ResourceBudgetError("exact check limited to N <= 10")
    if B.increasing != C.increasing:
        raise DomainError("events must be both increasing or both decreasing")
    total = count_paths(spec)
    if total == 0:
        raise EmptySetError("empty path set")
    pB = Fraction(count_paths(spec.with_bounds(**B.bounds(spec.N))), total)
    pC = Fraction(count_paths(spec.with_bounds(**C.bounds(spec.N))), total)
    both = spec.with_bounds(**B.bounds(spec.N)).with_bounds(**C.bounds(spec.N))
    pBC = Fraction(count_paths(both), total)
    inst = {"N": spec.N, "x": spec.x, "y": spec.y}
    return InequalityReport("fkg", inst, pBC, pB * pC, pBC >= pB * pC)


def hypergeometric_onepoint(N: int, h: int, m: int) -> dict:
    """Exact law of L(m) for the bridge 0 -> h on 0..N."""
    if not (0 <= m <= N and 0 <= h <= N):
        raise DomainError("need 0 <= m, h <= N")
    tot = comb(N, h)
    out = {}
    for k in range(max(0, h - (N - m)), min(m, h) + 1):
        out[k] = Fraction(comb(m, k) * comb(N - m, h - k), tot)
    return out


def verify_hypergeometric_ratio(N: int, h: int, m: int, s: int, t: int) -> InequalityReport:
    """P(L(m) <= s) / P(L(m) <= t) >= N^{-1-t+s}, exactly."""
    if not (0 <= s <= t):
        raise DomainError("need 0 <= s <= t")
    if h - s > N - m:
        raise DomainError("need h - s <= N - m")
    pmf = hypergeometric_onepoint(N, h, m)
    ps = sum((v for k, v in pmf.items() if k <= s), Fraction(0))
    pt = sum((v for k, v in pmf.items() if k <= t), Fraction(0))
    lhs = ps / pt
    rhs = Fraction(1, N ** (1 + t - s))
    inst = {"N": N, "h": h, "m": m, "s": s, "t": t}
    return InequalityReport("hypergeometric_ratio", inst, lhs, rhs, lhs >= rhs)


@dataclass(frozen=True)
class TailEstimate:
    N: int
    m: int
    M: float
    estimate: float
    ci_low: float
    ci_high: float
    exact: bool
    samples: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def fluctuation_tail(N: int, m: int, M: float, samples: int = 10_000,
                     rng: np.random.Generator | None = None, exact_max_N: int = 12,
                     batch: int = 10_000, confidence: float = 0.95) -> TailEstimate:
    """P(sup_j |L(j) - m j / N| <= M) for the bridge 0 -> m.

    Exact (by the counting recursion) when N <= exact_max_N, Monte Carlo otherwise.
    """
    if not (0 <= m <= N):
        raise DomainError("need 0 <= m <= N")
    if not M > 0:
        raise DomainError("need M > 0")
    j = np.arange(N + 1)
    mean = m * j / N if N else np.zeros(1)
    if N <= exact_max_N:
        spec = BridgeSpec(N, 0, m, ceiling=np.floor(mean + M + 1e-12),
                          floor=np.ceil(mean - M - 1e-12))
        val = Fraction(count_paths(spec), comb(N, m))
        return TailEstimate(N, m, M, float(val), float(val), float(val), True, 0)
    if rng is None:
        rng = np.random.default_rng(0)
    hits = done = 0
    while done < samples:
        n = min(batch, samples - done)
        L = sample_bridges_batch(N, 0, m, n, rng)
        hits += int((np.abs(L - mean[None, :]).max(axis=1) <= M).sum())
        done += n
    ci = binomtest(hits, done).proportion_ci(confidence_level=confidence, method="wilson")
    return TailEstimate(N, m, M, hits / done, float(ci.low), float(ci.high), False, done)

"""Two-layer measure on ordered pairs of Bernoulli paths.

A configuration is (lambda1, lambda2) on 0..N with lambda1(0) = 0,
lambda1 >= lambda2 and {0,1} increments.  Its weight only depends on the gap
path g = lambda1 - lambda2 and on the increments (u, v) of the two layers,
so everything here runs on the gap chain: flat steps (u, v) = (0, 0) or
(1, 1) keep the gap, (1, 0) raises it and (0, 1) lowers it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binomtest

from .errors import (
    DomainError,
    InvalidConfigError,
    RejectionStarvationError,
    ResourceBudgetError,
)
from .params import FanParams
from .qkernel import FLOAT, NumericMode, qpochhammer, stepWeightW
from .truncation import (
    Cutoff,
    band_step,
    choose_cutoff,
    gap_bands,
    log_boundary_weights,
    refine_cutoff,
    tilt_log,
)

__all__ = [
    "TwoLayerConfig",
    "GapPath",
    "WindowSpec",
    "weight",
    "partition_Z",
    "log_partition_Z",
    "enumerate_configs",
    "marginal_first_layer",
    "exact_sample",
    "boltzmann_factor",
    "boltzmann_lower_bound",
    "window_log_sum",
    "ratio_window_logasy",
    "SeparationEstimate",
    "separation_probability",
]


@dataclass(frozen=True)
class TwoLayerConfig:
    lambda1: tuple
    lambda2: tuple

    def __post_init__(self):
        l1 = tuple(int(x) for x in self.lambda1)
        l2 = tuple(int(x) for x in self.lambda2)
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)
        if len(l1) != len(l2) or len(l1) < 1:
            raise InvalidConfigError("layers must have the same positive length")
        if l1[0] != 0:
            raise InvalidConfigError("lambda1(0) must be 0")
        for j in range(len(l1)):
            if l1[j] < l2[j]:
                raise InvalidConfigError(f"layers cross at j={j}")
            if j and (l1[j] - l1[j - 1] not in (0, 1) or l2[j] - l2[j - 1] not in (0, 1)):
                raise InvalidConfigError(f"increment at j={j} is not 0 or 1")

    @property
    def N(self) -> int:
        return len(self.lambda1) - 1

    @property
    def gaps(self) -> tuple:
        return tuple(x - y for x, y in zip(self.lambda1, self.lambda2))

    @property
    def steps(self) -> list:
        """(u_j, v_j) for j = 1..N."""
        l1, l2 = self.lambda1, self.lambda2
        return [(l1[j] - l1[j - 1], l2[j] - l2[j - 1]) for j in range(1, len(l1))]

    def to_gap_path(self) -> "GapPath":
        return GapPath(self.gaps, tuple(u for (u, v) in self.steps if u == v))

    def rows(self):
        """CSV-ready rows (j, lambda1, lambda2)."""
        return [(j, x, y) for j, (x, y) in enumerate(zip(self.lambda1, self.lambda2))]


@dataclass(frozen=True)
class GapPath:
    """Gap path g_0..g_N plus, for each flat step in order, the bit u (= v)."""

    g: tuple
    flat_colors: tuple = ()

    def __post_init__(self):
        g = tuple(int(x) for x in self.g)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "flat_colors", tuple(int(x) for x in self.flat_colors))
        if any(x < 0 for x in g):
            raise InvalidConfigError("gaps must be nonnegative")
        if any(abs(g[j] - g[j - 1]) > 1 for j in range(1, len(g))):
            raise InvalidConfigError("gap moves by more than one")
        nflat = sum(g[j] == g[j - 1] for j in range(1, len(g)))
        if len(self.flat_colors) != nflat:
            raise InvalidConfigError("one colour bit is needed per flat step")

    def to_config(self) -> TwoLayerConfig:
        l1 = [0]
        colors = iter(self.flat_colors)
        for j in range(1, len(self.g)):
            dg = self.g[j] - self.g[j - 1]
            u = 1 if dg == 1 else 0 if dg == -1 else next(colors)
            l1.append(l1[-1] + u)
        return TwoLayerConfig(l1, [x - y for x, y in zip(l1, self.g)])


@dataclass(frozen=True)
class WindowSpec:
    """Windows h(theta_j) in (u_j, v_j) on the rescaled first layer."""

    thetas: tuple
    lows: tuple
    highs: tuple

    def __post_init__(self):
        th = tuple(float(x) for x in self.thetas)
        lo = tuple(float(x) for x in self.lows)
        hi = tuple(float(x) for x in self.highs)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "lows", lo)
        object.__setattr__(self, "highs", hi)
        if not th or not (len(th) == len(lo) == len(hi)):
            raise DomainError("thetas, lows and highs must have the same positive length")
        if th[-1] != 1.0 or th[0] <= 0 or any(b <= a for a, b in zip(th, th[1:])):
            raise DomainError("need 0 < theta_1 < ... < theta_{d+1} = 1")
        if any(not (0 < u < v) for u, v in zip(lo, hi)):
            raise DomainError("need 0 < u_j < v_j")
        for j in range(len(th) - 1):
            if not hi[-1] - lo[j] < th[-1] - th[j]:
                raise DomainError(f"window {j + 1} violates v_last - u_j < 1 - theta_j")

    def contains(self, lambda1) -> bool:
        l1 = np.asarray(lambda1, dtype=float)
        return bool(self.accept(l1[None, :])[0])

    def accept(self, lambda1: np.ndarray) -> np.ndarray:
        """Vectorized window test for a batch of first layers (rows)."""
        N = lambda1.shape[1] - 1
        ok = np.ones(lambda1.shape[0], dtype=bool)
        for th, u, v in zip(self.thetas, self.lows, self.highs):
            x = th * N
            k = min(int(math.floor(x)), N)
            fr = x - k
            h = lambda1[:, k].astype(float)
            if fr > 0:
                h = h + fr * (lambda1[:, k + 1] - lambda1[:, k])
            h /= N
            ok &= (h > u) & (h < v)
        return ok


def _boundary_exact(p: FanParams, g0: int, gN: int):
    a, b, c, d, q = p.a, p.b, p.c, p.d, p.q
    return (a ** g0) * (b ** gN) * qpochhammer(c * d, q, gN) / qpochhammer(q, q, gN)


def weight(cfg: TwoLayerConfig, p: FanParams, mode: NumericMode = FLOAT):
    p.require_fan()
    pp = p.exact() if mode.exact else p.as_float()
    g = cfg.gaps
    out = _boundary_exact(pp, g[0], g[-1])
    for j, (u, v) in enumerate(cfg.steps, start=1):
        out *= stepWeightW(g[j], u, v, pp.q, pp.c, pp.d)
    return out


def boltzmann_factor(cfg: TwoLayerConfig, p: FanParams):
    """Weight relative to the (0, a, b, 0, 0) reference: the W product times the
    terminal q-Pochhammer ratio.  Lies in (0, 1/(q;q)_inf]."""
    p.require_fan()
    g = cfg.gaps
    out = qpochhammer(p.c * p.d, p.q, g[-1]) / qpochhammer(p.q, p.q, g[-1])
    for j, (u, v) in enumerate(cfg.steps, start=1):
        out *= stepWeightW(g[j], u, v, p.q, p.c, p.d)
    return out


def boltzmann_lower_bound(p: FanParams, N: int, r: int):
    """(1 - cd)(1 - q^{r+1})^N: valid when every gap at j = 1..N exceeds r."""
    return (1 - p.c * p.d) * (1 - p.q ** (r + 1)) ** N


class _GapChain:
    """Gap transfer built from the step weights W (independent of the matrix route)."""

    def __init__(self, p: FanParams, N: int, mode: NumericMode, cut: Cutoff | None = None):
        p.require_fan()
        self.p = p
        self.N = N
        self.mode = mode
        self.cut = cut if cut is not None else choose_cutoff(p, N, mode.tol)
        M, G = self.cut.M, self.cut.G
        if mode.exact:
            pe = p.exact()
            self.f00, self.f11, self.up, self.down = gap_bands(pe, M, exact=True)
            zero = Fraction(0)
            self.init = np.array([pe.a ** k if k <= G else zero for k in range(M)], dtype=object)
            self.init[0] = Fraction(1)
            self.final = np.array([_boundary_exact(pe, 0, k) for k in range(M)], dtype=object)
            self.zero = np.full(M, zero, dtype=object)
        else:
            self.f00, self.f11, up, down = gap_bands(p, M)
            lt = tilt_log(p)
            self.up = up * math.exp(lt)
            self.down = down * math.exp(-lt)
            la, lb = log_boundary_weights(p, M)
            k = np.arange(M)
            self.linit = np.where(k <= G, la + lt * k, -np.inf)
            self.lfinal = lb - lt * k
            self.zero = np.zeros(M)
        self.stay = self.f00 + self.f11

    def start(self):
        if self.mode.exact:
            return self.init.copy(), 0.0
        m = self.linit.max()
        return np.exp(self.linit - m), m

    def step_layer(self, v, u):
        """Transfer with the first-layer increment fixed to u."""
        if u:
            return band_step(v, self.f11, self.up, self.zero[:-1])
        return band_step(v, self.f00, self.zero[:-1], self.down)

    def close(self, v):
        if self.mode.exact:
            return v.dot(self.final)
        with np.errstate(divide="ignore"):
            return logsumexp(np.log(v) + self.lfinal, axis=-1)


def _norm(v, scale):
    m = v.max()
    if m <= 0:
        return v, scale
    return v / m, scale + math.log(m)


def log_partition_Z(p: FanParams, N: int, mode: NumericMode = FLOAT) -> float:
    if mode.exact:
        z = partition_Z(p, N, mode)
        return math.log(z.numerator) - math.log(z.denominator)
    ch = _GapChain(p, N, mode)
    v, s = ch.start()
    for _ in range(N):
        v, s = _norm(band_step(v, ch.stay, ch.up, ch.down), s)
    return s + float(ch.close(v))


def partition_Z(p: FanParams, N: int, mode: NumericMode = FLOAT):
    """Z_N by the gap transfer; an exact Fraction in rational mode."""
    if not mode.exact:
        return math.exp(log_partition_Z(p, N, mode))
    ch = _GapChain(p, N, mode)
    v, _ = ch.start()
    for _ in range(N):
        v = band_step(v, ch.stay, ch.up, ch.down)
    return ch.close(v)


def enumerate_configs(p: FanParams, N: int, G_cut: int | None = None,
                      mode: NumericMode = FLOAT, budget: int = 2_000_000):
    """All configurations with starting gap <= G_cut and positive weight.

    Returns a list of (TwoLayerConfig, weight).  G_cut defaults to the
    certified cutoff used by :func:`partition_Z`.
    """
    p.require_fan()
    if N > 8:
        raise ResourceBudgetError("enumeration limited to N <= 8")
    if G_cut is None:
        G_cut = choose_cutoff(p, N, mode.tol).G
    if (G_cut + 1) * 4 ** N > budget:
        raise ResourceBudgetError("enumeration exceeds budget")
    moves = ((0, 0), (1, 1), (1, 0), (0, 1))
    seqs = []
    for seq in itertools.product(moves, repeat=N):
        rel, lo = [0], 0
        for u, v in seq:
            rel.append(rel[-1] + u - v)
            lo = min(lo, rel[-1])
        seqs.append((seq, rel, lo))
    out = []
    for g0 in range(G_cut + 1):
        for seq, rel, lo in seqs:
            if lo < -g0:
                continue
            l1 = [0]
            for u, _ in seq:
                l1.append(l1[-1] + u)
            cfg = TwoLayerConfig(l1, [x - (g0 + r) for x, r in zip(l1, rel)])
            w = weight(cfg, p, mode)
            if w > 0:
                out.append((cfg, w))
    return out


def marginal_first_layer(p: FanParams, N: int, mode: NumericMode = FLOAT):
    """Law of the first-layer increment path, indexed with u_1 as the most
    significant bit (the same order as the matrix product table)."""
    if N > 16:
        raise ResourceBudgetError("the full marginal is limited to N <= 16")
    ch = _GapChain(p, N, mode)
    v0, s0 = ch.start()
    if mode.exact:
        rows = v0[None, :]
    else:
        rows, scales = v0[None, :], np.array([s0])
    for _ in range(N):
        nxt = np.stack([ch.step_layer(rows, 0), ch.step_layer(rows, 1)], axis=1)
        rows = nxt.reshape(-1, ch.cut.M)
        if not mode.exact:
            scales = np.repeat(scales, 2)
            m = rows.max(axis=1)
            m[m <= 0] = 1.0
            rows = rows / m[:, None]
            scales = scales + np.log(m)
    if mode.exact:
        vals = np.array([v.dot(ch.final) for v in rows], dtype=object)
        return vals / sum(vals)
    logs = scales + ch.close(rows)
    return np.exp(logs - logsumexp(logs))


def _forward(ch: _GapChain):
    N = ch.N
    fw = np.empty((N + 1, ch.cut.M))
    v, s = ch.start()
    fw[0] = v
    for j in range(1, N + 1):
        v, s = _norm(band_step(v, ch.stay, ch.up, ch.down), s)
        fw[j] = v
    return fw


def _draw(rng, weights):
    """One categorical draw per row of an (S, K) nonnegative weight array."""
    cum = np.cumsum(weights, axis=1)
    u = rng.random(weights.shape[0]) * cum[:, -1]
    return np.minimum((cum <= u[:, None]).sum(axis=1), weights.shape[1] - 1)


def sample_arrays(p: FanParams, N: int, rng: np.random.Generator, size: int,
                  chain: _GapChain | None = None, fw: np.ndarray | None = None):
    """Batched exact sampling; returns (lambda1, lambda2) integer arrays of shape (size, N+1)."""
    ch = chain if chain is not None else _GapChain(p, N, FLOAT)
    if fw is None:
        fw = _forward(ch)
    M = ch.cut.M
    with np.errstate(divide="ignore"):
        lt = np.log(fw[N]) + ch.lfinal
    w = np.exp(lt - lt.max())
    g = rng.choice(M, size=size, p=w / w.sum())
    gaps = np.empty((size, N + 1), dtype=np.int64)
    u = np.empty((size, N), dtype=np.int64)
    gaps[:, N] = g
    zero = np.zeros(size)
    for j in range(N, 0, -1):
        prev = fw[j - 1]
        from_below = np.where(g >= 1, prev[np.maximum(g - 1, 0)] * ch.up[np.maximum(g - 1, 0)], zero)
        same = prev[g] * ch.stay[g]
        ok = g + 1 < M
        gi = np.minimum(g, M - 2)
        from_above = np.where(ok, prev[np.minimum(g + 1, M - 1)] * ch.down[gi], zero)
        k = _draw(rng, np.stack([from_below, same, from_above], axis=1))
        # flat steps: colour (0,0) against (1,1) with odds W(g|0,0) : W(g|1,1)
        p11 = ch.f11[g] / ch.stay[g]
        flat_u = (rng.random(size) < p11).astype(np.int64)
        u[:, j - 1] = np.where(k == 0, 1, np.where(k == 2, 0, flat_u))
        g = g + np.array([-1, 0, 1])[k]
        gaps[:, j - 1] = g
    lam1 = np.concatenate([np.zeros((size, 1), dtype=np.int64), np.cumsum(u, axis=1)], axis=1)
    return lam1, lam1 - gaps


def exact_sample(p: FanParams, N: int, rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) from the two-layer measure by forward filtering and
    backward sampling on the gap chain."""
    lam1, lam2 = sample_arrays(p, N, rng, 1 if size is None else size)
    cfgs = [TwoLayerConfig(a, b) for a, b in zip(lam1, lam2)]
    return cfgs[0] if size is None else cfgs


def _window_masks(w: WindowSpec, N: int):
    """Per-step masks over lambda1 values: pre[j] applies to lambda1(j) and
    mid[j] = (mask_u0, mask_u1) applies to the step j -> j+1."""
    vals = np.arange(N + 1, dtype=float)
    pre, mid = {}, {}
    for th, lo, hi in zip(w.thetas, w.lows, w.highs):
        x = th * N
        k = min(int(math.floor(x)), N)
        fr = x - k
        if fr == 0:
            m = (vals / N > lo) & (vals / N < hi)
            pre[k] = pre.get(k, True) & m
        else:
            m0 = (vals / N > lo) & (vals / N < hi)
            h1 = (vals + fr) / N
            m1 = (h1 > lo) & (h1 < hi)
            o0, o1 = mid.get(k, (True, True))
            mid[k] = (o0 & m0, o1 & m1)
    return pre, mid


def _window_chain_log(p: FanParams, w: WindowSpec, N: int, cut: Cutoff) -> float:
    """log of the total weight of configurations inside the windows."""
    ch = _GapChain(p, N, FLOAT, cut)
    pre, mid = _window_masks(w, N)
    M = cut.M
    v0, scale = ch.start()
    S = np.zeros((N + 1, M))
    S[0] = v0
    if 0 in pre:
        S *= pre[0][:, None]
    for j in range(N):
        if j in mid:
            A0 = S * mid[j][0][:, None]
            A1 = S * mid[j][1][:, None]
        else:
            A0 = A1 = S
        new = ch.step_layer(A0, 0)
        new[1:] += ch.step_layer(A1[:-1], 1)
        if j + 1 in pre:
            new *= pre[j + 1][:, None]
        m = new.max()
        if m <= 0:
            return -math.inf
        S = new / m
        scale += math.log(m)
    with np.errstate(divide="ignore"):
        return scale + float(logsumexp(np.log(S) + ch.lfinal[None, :]))


def window_log_sum(p: FanParams, w: WindowSpec, N: int, tol: float = 1e-13) -> float:
    """log of the windowed weight sum, with the cutoff refined to the sum's size."""
    cut = choose_cutoff(p, N, tol)
    val = _window_chain_log(p, w, N, cut)
    if val == -math.inf:
        return val
    cut2 = refine_cutoff(p, N, tol, cut, val)
    if cut2 is not cut:
        val = _window_chain_log(p, w, N, cut2)
    return val


def ratio_window_logasy(p: FanParams, w: WindowSpec, Ns, tol: float = 1e-13):
    """Pairs (N, (1/N) log ratio) of windowed weight sums, general over (0, a, b, 0, 0)."""
    p.require_fan()
    ref = p.tasep_reference()
    out = []
    for N in Ns:
        N = int(N)
        budget = (N + 1) * choose_cutoff(p, N, tol).M
        if budget > 50_000_000:
            raise ResourceBudgetError(f"window state space {budget} too large")
        num = window_log_sum(p, w, N, tol)
        den = window_log_sum(ref, w, N, tol)
        if den == -math.inf:
            raise DomainError(f"window is empty at N={N}")
        out.append((N, (num - den) / N))
    return out


@dataclass(frozen=True)
class SeparationEstimate:
    N: int
    estimate: float
    ci_low: float
    ci_high: float
    accepted: int
    proposed: int
    bound: float

    def as_dict(self) -> dict:
        return {"N": self.N, "estimate": self.estimate, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "accepted": self.accepted,
                "proposed": self.proposed, "bound": self.bound}


def separation_event(lam1: np.ndarray, lam2: np.ndarray, r: int, eps: float) -> np.ndarray:
    """#{j in 1..N : gap(j) <= r} <= ceil(eps N), row-wise."""
    N = lam1.shape[1] - 1
    close = ((lam1 - lam2)[:, 1:] <= r).sum(axis=1)
    return close <= math.ceil(eps * N)


def separation_probability(a, b, r: int, eps: float, w: WindowSpec, N: int, samples: int,
                           rng: np.random.Generator, batch: int = 20_000,
                           min_acceptance: float = 1e-4, confidence: float = 0.95):
    """Monte Carlo estimate of the separation event given the windows, at q = c = d = 0."""
    p = FanParams(a, b, 0.0, 0.0, 0.0).require_fan()
    ch = _GapChain(p, N, FLOAT)
    fw = _forward(ch)
    hits = accepted = proposed = 0
    while accepted < samples:
        lam1, lam2 = sample_arrays(p, N, rng, batch, ch, fw)
        ok = w.accept(lam1)
        proposed += batch
        accepted += int(ok.sum())
        hits += int(separation_event(lam1[ok], lam2[ok], r, eps).sum())
        if accepted < min_acceptance * proposed:
            raise RejectionStarvationError(
                f"window acceptance {accepted}/{proposed} below {min_acceptance}"
            )
    ci = binomtest(hits, accepted).proportion_ci(confidence_level=confidence, method="wilson")
    return SeparationEstimate(N, hits / accepted, float(ci.low), float(ci.high),
                              accepted, proposed, math.exp(-N ** 0.8))

"""Stationary measures of open ASEP from the Enaud-Derrida matrices.

Matrices are bidiagonal, so every product <W| X_1 ... X_N |V> is computed as
N banded row-vector updates.  The float backend carries vectors scaled by a
similarity tilt t^k and renormalizes at every site (the log of the scale is
accumulated); the rational backend works on numpy object arrays of Fractions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, ResourceBudgetError, TruncationError
from .params import BoundaryRates, FanParams, to_fan
from .qkernel import FLOAT, NumericMode, currentJ, qpochhammer, qpochhammer_inf
from .truncation import (
    Cutoff,
    band_step,
    choose_cutoff,
    log_boundary_weights,
    tail_log_bound,
    tilt_log,
)

__all__ = [
    "EDRep",
    "build_ed",
    "check_dehp",
    "wv_inner",
    "wv_inner_closed",
    "cutoff_for",
    "stationary_prob",
    "stationary_table",
    "partition_value",
    "partition_logZ",
    "height_marginal_dist",
    "generator_matrix",
    "generator_stationarity_check",
    "asymptotic_logZ_scan",
    "config_index",
    "index_config",
]


@dataclass(frozen=True)
class EDRep:
    """Truncated Enaud-Derrida representation stored as bands.

    ``D_diag[k] = D[k][k]``, ``D_up[k] = D[k][k+1]``, ``E_diag[k] = E[k][k]``,
    ``E_down[k] = E[k+1][k]``.  Dense matrices are built on request.
    """

    params: FanParams
    M: int
    exact: bool
    D_diag: np.ndarray
    D_up: np.ndarray
    E_diag: np.ndarray
    E_down: np.ndarray
    W: np.ndarray
    V: np.ndarray

    def _dense(self, diag, off, lower):
        dt = object if self.exact else float
        zero = Fraction(0) if self.exact else 0.0
        out = np.full((self.M, self.M), zero, dtype=dt)
        for k in range(self.M):
            out[k, k] = diag[k]
        for k in range(self.M - 1):
            if lower:
                out[k + 1, k] = off[k]
            else:
                out[k, k + 1] = off[k]
        return out

    @property
    def D(self) -> np.ndarray:
        return self._dense(self.D_diag, self.D_up, lower=False)

    @property
    def E(self) -> np.ndarray:
        return self._dense(self.E_diag, self.E_down, lower=True)


def build_ed(p: FanParams, M: int, mode: NumericMode = FLOAT) -> EDRep:
    p.require_fan()
    if M < 2:
        raise DomainError("dimension M must be at least 2")
    if mode.exact:
        p = p.exact()
        q, a, b, c, d = p.q, p.a, p.b, p.c, p.d
        one = Fraction(1)
        qk = [q ** k for k in range(M + 1)]
        Dd = np.array([(1 + qk[k] * d) / (1 - q) for k in range(M)], dtype=object)
        Du = np.array([(1 - qk[k + 1]) / (1 - q) for k in range(M - 1)], dtype=object)
        Ed = np.array([(1 + qk[k] * c) / (1 - q) for k in range(M)], dtype=object)
        Eb = np.array([(1 - qk[k] * c * d) / (1 - q) for k in range(M - 1)], dtype=object)
        W = np.array([a ** k if k else one for k in range(M)], dtype=object)
        V = np.array([(b ** k if k else one) * qpochhammer(c * d, q, k) / qpochhammer(q, q, k)
                      for k in range(M)], dtype=object)
    else:
        q, a, b, c, d = (float(p.q), float(p.a), float(p.b), float(p.c), float(p.d))
        qk = q ** np.arange(M + 1, dtype=float)
        Dd = (1 + qk[:M] * d) / (1 - q)
        Du = (1 - qk[1:M]) / (1 - q)
        Ed = (1 + qk[:M] * c) / (1 - q)
        Eb = (1 - qk[:M - 1] * c * d) / (1 - q)
        la, lb = log_boundary_weights(p, M)
        with np.errstate(over="ignore"):
            W = np.exp(la)
            V = np.exp(lb)
    return EDRep(p, M, mode.exact, Dd, Du, Ed, Eb, W, V)


def check_dehp(rep: EDRep, rates: BoundaryRates, tol: float = 1e-13) -> dict:
    """Residuals of the three DEHP relations on the untruncated coordinates.

    The float residuals are also reported relative to the largest magnitude
    entering each relation (``*_rel``); with W[k] = a^k the absolute values
    can be large when a > 1.
    """
    D, E = rep.D, rep.E
    M = rep.M
    if rep.exact:
        al, be, ga, de, q = (Fraction(x) if isinstance(x, (int, Fraction)) else Fraction(repr(x))
                             for x in (rates.alpha, rates.beta, rates.gamma, rates.delta, rates.q))
    else:
        al, be, ga, de, q = (float(x) for x in (rates.alpha, rates.beta, rates.gamma,
                                                 rates.delta, rates.q))
    bulk = D.dot(E) - q * E.dot(D) - D - E
    wrel = rep.W.dot(al * E - ga * D) - rep.W
    vrel = (be * D - de * E).dot(rep.V) - rep.V
    bulk = bulk[: M - 2, : M - 2]
    wrel = wrel[: M - 1]
    vrel = vrel[: M - 1]

    def amax(x):
        return max((abs(v) for v in np.ravel(x)), default=0)

    out = {"bulk": amax(bulk), "W": amax(wrel), "V": amax(vrel)}
    if not rep.exact:
        out["bulk_rel"] = out["bulk"] / max(amax(D) * amax(E), 1.0)
        out["W_rel"] = out["W"] / max(amax(rep.W[:M - 1]), 1e-300)
        out["V_rel"] = out["V"] / max(amax(rep.V[:M - 1]), 1e-300)
        keys = ("bulk_rel", "W_rel", "V_rel")
    else:
        keys = ("bulk", "W", "V")
    out["max"] = max(out[k] for k in keys)
    out["ok"] = bool(out["max"] <= tol)
    return out


def wv_inner_closed(p: FanParams) -> float:
    """<W|V> = (abcd;q)_inf / (ab;q)_inf."""
    p.require_fan()
    a, b, c, d, q = (float(p.a), float(p.b), float(p.c), float(p.d), float(p.q))
    return qpochhammer_inf(a * b * c * d, q)[0] / qpochhammer_inf(a * b, q)[0]


def wv_inner(p: FanParams, mode: NumericMode = FLOAT):
    """Truncated sum of W[k] V[k]; returns (value, certified tail bound)."""
    p.require_fan()
    ab = float(p.a * p.b)
    if ab == 0.0:
        one = Fraction(1) if mode.exact else 1.0
        return one, 0.0
    q = float(p.q)
    qq = qpochhammer_inf(q, q)[0] if q > 0 else 1.0
    # the sum is at least its first term 1
    K = max(1, math.ceil(math.log(mode.tol * (1 - ab) * qq) / math.log(ab)))
    pe = p.exact() if mode.exact else p.as_float()
    ab_e, cd, qe = pe.a * pe.b, pe.c * pe.d, pe.q
    total = term = (Fraction(1) if mode.exact else 1.0)
    for k in range(1, K):
        term = term * ab_e * (1 - cd * qe ** (k - 1)) / (1 - qe ** k)
        total += term
    bound = ab ** K / (1 - ab) / qq
    return total, bound


def cutoff_for(p: FanParams, N: int, mode: NumericMode = FLOAT, M: int | None = None) -> Cutoff:
    """Certified cutoff for size N; an explicit M is checked, not chosen."""
    cut = choose_cutoff(p, N, mode.tol)
    if M is None:
        return cut
    if M < N + 1:
        raise TruncationError(f"dimension {M} cannot hold gap paths of length {N}")
    G = M - N - 1
    tail = tail_log_bound(p, N, G)
    if tail > cut.log_tail and tail > math.log(mode.tol) + cut.log_lower:
        raise TruncationError(
            f"dimension {M} leaves a tail bound exp({tail:.3g}) above tolerance"
        )
    return Cutoff(G, M, tail, cut.log_lower)


class _Chain:
    """Banded propagation of <W| X_1 X_2 ... against |V> with (1-q)-scaled matrices."""

    def __init__(self, p: FanParams, N: int, mode: NumericMode, M: int | None = None):
        p.require_fan()
        self.mode = mode
        self.cut = cutoff_for(p, N, mode, M)
        self.rep = build_ed(p, self.cut.M, mode)
        rep, G, M = self.rep, self.cut.G, self.cut.M
        if mode.exact:
            s = 1 - rep.params.q
            self.Dd, self.Du = rep.D_diag * s, rep.D_up * s
            self.Ed, self.Eb = rep.E_diag * s, rep.E_down * s
            zero = Fraction(0)
            self.init = np.array([rep.W[k] if k <= G else zero for k in range(M)], dtype=object)
            self.final = rep.V
            self.zero = np.full(M, zero, dtype=object)
        else:
            s = 1.0 - float(p.q)
            lt = tilt_log(p)
            t = math.exp(lt)
            self.Dd, self.Du = rep.D_diag * s, rep.D_up * s * t
            self.Ed, self.Eb = rep.E_diag * s, rep.E_down * s / t
            la, lb = log_boundary_weights(p, M)
            k = np.arange(M)
            linit = np.where(k <= G, la + lt * k, -np.inf)
            self.linit = linit
            self.lfinal = lb - lt * k
            self.zero = np.zeros(M)

    def start(self):
        """Initial (vector, log scale)."""
        if self.mode.exact:
            return self.init.copy(), 0.0
        m = self.linit.max()
        return np.exp(self.linit - m), m

    def step(self, v, bit):
        if bit:
            return band_step(v, self.Dd, self.Du, self.zero[:-1])
        return band_step(v, self.Ed, self.zero[:-1], self.Eb)

    def close(self, v):
        """<v|V> exactly, or its log (without the scale) in float mode."""
        if self.mode.exact:
            return v.dot(self.final)
        with np.errstate(divide="ignore"):
            return float(logsumexp(np.log(v) + self.lfinal))


def _normalize(v, scale):
    m = v.max()
    if m <= 0:
        return v, scale
    return v / m, scale + math.log(m)


def partition_value(p: FanParams, N: int, mode: NumericMode = FLOAT, M: int | None = None):
    """Z_N = (1-q)^N <W|(D+E)^N|V>; exact Fraction in rational mode, float otherwise."""
    if mode.exact:
        ch = _Chain(p, N, mode, M)
        v, _ = ch.start()
        stay = ch.Dd + ch.Ed
        for _ in range(N):
            v = band_step(v, stay, ch.Du, ch.Eb)
        return ch.close(v)
    return math.exp(partition_logZ(p, N, mode, M))


def partition_logZ(p: FanParams, N: int, mode: NumericMode = FLOAT, M: int | None = None) -> float:
    if mode.exact:
        z = partition_value(p, N, mode, M)
        return math.log(z.numerator) - math.log(z.denominator)
    ch = _Chain(p, N, mode, M)
    v, scale = ch.start()
    stay = ch.Dd + ch.Ed
    for _ in range(N):
        v, scale = _normalize(band_step(v, stay, ch.Du, ch.Eb), scale)
    return scale + ch.close(v)


def config_index(tau) -> int:
    """Index of an occupation vector, tau_1 being the most significant bit."""
    out = 0
    for t in tau:
        out = 2 * out + int(t)
    return out


def index_config(i: int, N: int) -> tuple:
    return tuple((i >> (N - 1 - j)) & 1 for j in range(N))


def stationary_prob(p: FanParams, tau, mode: NumericMode = FLOAT, M: int | None = None):
    """mu_N(tau); a Fraction in rational mode."""
    tau = [int(t) for t in tau]
    if any(t not in (0, 1) for t in tau):
        raise DomainError("occupation entries must be 0 or 1")
    N = len(tau)
    ch = _Chain(p, N, mode, M)
    v, scale = ch.start()
    for t in tau:
        v = ch.step(v, t)
        if not mode.exact:
            v, scale = _normalize(v, scale)
    if mode.exact:
        return ch.close(v) / partition_value(p, N, mode, ch.cut.M)
    return math.exp(scale + ch.close(v) - partition_logZ(p, N, mode, ch.cut.M))


def stationary_table(p: FanParams, N: int, mode: NumericMode = FLOAT, M: int | None = None):
    """All 2^N probabilities, indexed by :func:`config_index`.

    Built by a breadth-first pass over prefixes, so the cost is about
    2^{N+1} banded steps.  Returns an object array in rational mode.
    """
    if N > 16:
        raise ResourceBudgetError("the full table is limited to N <= 16")
    ch = _Chain(p, N, mode, M)
    v0, s0 = ch.start()
    rows = [v0]
    scales = [s0]
    for _ in range(N):
        nrows, nscales = [], []
        for v, s in zip(rows, scales):
            for bit in (0, 1):
                w = ch.step(v, bit)
                if not mode.exact:
                    w, s2 = _normalize(w, s)
                else:
                    s2 = s
                nrows.append(w)
                nscales.append(s2)
        rows, scales = nrows, nscales
    if mode.exact:
        vals = np.array([ch.close(v) for v in rows], dtype=object)
        return vals / sum(vals)
    logs = np.array([s + ch.close(v) for v, s in zip(rows, scales)])
    return np.exp(logs - logsumexp(logs))


def height_marginal_dist(p: FanParams, N: int, pins, mode: NumericMode = FLOAT,
                         M: int | None = None, budget: int = 50_000_000, log: bool = False):
    """Exact joint law of the particle counts sum_{i<=m} tau_i at the pinned sites.

    Returns a dict from count tuples to probabilities (log-probabilities when
    ``log=True``, float mode only).  The state is (counts frozen at earlier
    pins, count since the last pin, matrix index).
    """
    pins = [int(m) for m in pins]
    if not pins or pins != sorted(set(pins)) or pins[0] < 1 or pins[-1] > N:
        raise DomainError("pins must be distinct sorted sites in 1..N")
    if len(pins) > 3:
        raise ResourceBudgetError("at most three pins are supported")
    ch = _Chain(p, N, mode, M)
    Mdim = ch.cut.M
    est, prev = 1, 0
    for m in pins:
        est *= m - prev + 1
        prev = m
    if est * Mdim > budget:
        raise ResourceBudgetError(f"state space {est * Mdim} exceeds budget {budget}")
    if log and mode.exact:
        raise DomainError("log output is for the float backend")

    v0, scale = ch.start()
    if mode.exact:
        zero_row = ch.zero
        states = {(): np.array([v0], dtype=object)}
    else:
        states = {(): v0[None, :]}
    pin_set = set(pins)
    since = 0
    for i in range(1, N + 1):
        since += 1
        new = {}
        for key, arr in states.items():
            if mode.exact:
                grown = np.array([zero_row] * (since + 1), dtype=object)
            else:
                grown = np.zeros((since + 1, Mdim))
            grown[:-1] = grown[:-1] + ch.step(arr, 0)
            grown[1:] = grown[1:] + ch.step(arr, 1)
            new[key] = grown
        if not mode.exact:
            m = max(a.max() for a in new.values())
            for key in new:
                new[key] = new[key] / m
            scale += math.log(m)
        if i in pin_set:
            frozen = {}
            for key, arr in new.items():
                base = key[-1] if key else 0
                for r in range(arr.shape[0]):
                    frozen[key + (base + r,)] = arr[r][None, :]
            new = frozen
            since = 0
        states = new
    if mode.exact:
        vals = {k: ch.close(a[0]) for k, a in states.items()}
        Z = sum(vals.values())
        return {k: v / Z for k, v in vals.items() if v != 0}
    logs = {k: ch.close(a[0]) for k, a in states.items()}
    logs = {k: v for k, v in logs.items() if v > -math.inf}
    lZ = logsumexp(list(logs.values()))
    if log:
        return {k: v - lZ for k, v in logs.items()}
    return {k: math.exp(v - lZ) for k, v in logs.items()}


def generator_matrix(rates: BoundaryRates, N: int) -> np.ndarray:
    """Dense generator of open ASEP on {0,1}^N in :func:`config_index` order."""
    from .ctmc import enabled_transitions

    if N > 12:
        raise ResourceBudgetError("generator limited to N <= 12")
    n = 2 ** N
    Q = np.zeros((n, n))
    for i in range(n):
        for nxt, r in enabled_transitions(index_config(i, N), rates):
            Q[i, config_index(nxt)] += r
            Q[i, i] -= r
    return Q


def generator_stationarity_check(rates: BoundaryRates, N: int, tol: float = 1e-13,
                                 measure=None) -> float:
    """||mu Q||_inf for mu from the matrix product ansatz (or a given measure)."""
    if N > 10:
        raise ResourceBudgetError("stationarity check limited to N <= 10")
    if measure is None:
        p = to_fan(rates)
        measure = stationary_table(p, N, NumericMode("float", tol))
    mu = np.asarray(measure, dtype=float)
    return float(np.abs(mu @ generator_matrix(rates, N)).max())


def asymptotic_logZ_scan(p: FanParams, Ns, mode: NumericMode = FLOAT):
    """Pairs (N, log Z_N / N + log J(a, b))."""
    p.require_fan()
    lJ = math.log(currentJ(p.a, p.b))
    return [(int(N), partition_logZ(p, int(N), mode) / N + lJ) for N in Ns]


def height_law(p: FanParams, N: int, mode: NumericMode = FLOAT):
    """Law of the increment path of the height function (same as the table of tau)."""
    return stationary_table(p, N, mode)


def product_measure_table(rho: float, N: int) -> np.ndarray:
    """i.i.d. Bernoulli(rho) table in :func:`config_index` order."""
    out = np.empty(2 ** N)
    for i, tau in enumerate(itertools.product((0, 1), repeat=N)):
        k = sum(tau)
        out[i] = rho ** k * (1 - rho) ** (N - k)
    return out

"""Gillespie simulation of open ASEP.

Particles hop right at rate 1 and left at rate q into empty neighbours; they
enter site 1 at rate alpha and leave it at rate gamma, leave site N at rate
beta and enter it at rate delta.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .params import BoundaryRates

__all__ = [
    "SimState",
    "SimStats",
    "enabled_transitions",
    "gillespie_run",
    "height_profile",
]

TABLE_MAX_N = 12


@dataclass
class SimState:
    tau: tuple
    t: float = 0.0

    def __post_init__(self):
        self.tau = tuple(int(x) for x in self.tau)
        if any(x not in (0, 1) for x in self.tau):
            raise DomainError("occupation entries must be 0 or 1")
        if self.t < 0:
            raise DomainError("time must be nonnegative")


@dataclass
class SimStats:
    """Occupation-time statistics collected after burn-in.

    ``weights`` (N <= 12) holds the time spent in each configuration, indexed
    with tau_1 as the most significant bit; ``density`` is the time average
    of each tau_i.  ``events`` counts all jumps, burn-in included.
    """

    N: int
    events: int
    total_time: float
    burnin: float
    density: np.ndarray
    weights: np.ndarray | None = None
    final: tuple = field(default_factory=tuple)

    @property
    def measure(self) -> np.ndarray:
        if self.weights is None:
            raise DomainError("configuration weights are only kept for N <= 12")
        return self.weights / self.weights.sum()


def enabled_transitions(state, rates: BoundaryRates):
    """List of (next configuration, rate) from a configuration or SimState."""
    tau = state.tau if isinstance(state, SimState) else tuple(int(x) for x in state)
    N = len(tau)
    out = []

    def flip(*sites):
        t = list(tau)
        for i in sites:
            t[i] = 1 - t[i]
        return tuple(t)

    if N == 0:
        return out
    if tau[0] == 0 and rates.alpha > 0:
        out.append((flip(0), rates.alpha))
    if tau[0] == 1 and rates.gamma > 0:
        out.append((flip(0), rates.gamma))
    for i in range(N - 1):
        if tau[i] == 1 and tau[i + 1] == 0:
            out.append((flip(i, i + 1), 1.0))
        elif tau[i] == 0 and tau[i + 1] == 1 and rates.q > 0:
            out.append((flip(i, i + 1), rates.q))
    if tau[-1] == 1 and rates.beta > 0:
        out.append((flip(N - 1), rates.beta))
    if tau[-1] == 0 and rates.delta > 0:
        out.append((flip(N - 1), rates.delta))
    return out


def _encode(tau) -> int:
    out = 0
    for t in tau:
        out = 2 * out + t
    return out


def _decode(i: int, N: int) -> tuple:
    return tuple((i >> (N - 1 - j)) & 1 for j in range(N))


def _tables(rates: BoundaryRates, N: int):
    nxt, cum, tot = [], [], []
    for i in range(2 ** N):
        moves = enabled_transitions(_decode(i, N), rates)
        nxt.append([_encode(s) for s, _ in moves])
        c = [float(x) for x in np.cumsum([r for _, r in moves])]
        cum.append(c)
        tot.append(c[-1] if c else 0.0)
    return nxt, cum, tot


def _site_rates(tau: np.ndarray, rates: BoundaryRates) -> np.ndarray:
    # slots: 0 left boundary, 1..N-1 bonds right, N..2N-2 bonds left, 2N-1 right boundary
    N = tau.size
    r = np.zeros(2 * N)
    r[0] = rates.alpha if tau[0] == 0 else rates.gamma
    r[1:N] = (tau[:-1] == 1) & (tau[1:] == 0)
    r[N:2 * N - 1] = rates.q * ((tau[:-1] == 0) & (tau[1:] == 1))
    r[2 * N - 1] = rates.beta if tau[-1] == 1 else rates.delta
    return r


def gillespie_run(rates: BoundaryRates, N: int, horizonT: float, burninT: float | None = None,
                  rng: np.random.Generator | None = None, tau0=None,
                  max_events: int | None = None, chunk: int = 65536) -> SimStats:
    """Simulate up to time ``horizonT`` (or ``max_events`` jumps, whichever comes first).

    Burn-in defaults to a tenth of the horizon.  Statistics are weighted by
    holding times, so they estimate the stationary law without correction.
    """
    if N < 1:
        raise DomainError("N must be positive")
    if burninT is None:
        burninT = 0.1 * horizonT
    if not (horizonT > burninT >= 0):
        raise DomainError("need horizonT > burninT >= 0")
    if rng is None:
        rng = np.random.default_rng(0)
    tau = np.zeros(N, dtype=np.int8) if tau0 is None else np.array(tau0, dtype=np.int8)
    limit = math.inf if max_events is None else int(max_events)

    t = 0.0
    events = 0
    dens = np.zeros(N)
    if N <= TABLE_MAX_N:
        nxt, cum, tot = _tables(rates, N)
        weights = [0.0] * (2 ** N)
        state = _encode(tau.tolist())
        done = False
        while not done:
            ex = rng.standard_exponential(chunk).tolist()
            us = rng.random(chunk).tolist()
            for e, u in zip(ex, us):
                R = tot[state]
                hold = e / R if R > 0 else math.inf
                t_next = t + hold
                lo, hi = max(t, burninT), min(t_next, horizonT)
                if hi > lo:
                    weights[state] += hi - lo
                if t_next >= horizonT or events >= limit:
                    done = True
                    break
                t = t_next
                state = nxt[state][bisect_right(cum[state], u * R)]
                events += 1
        weights = np.array(weights)
        total = float(weights.sum())
        for i in np.nonzero(weights)[0]:
            dens += weights[i] * np.array(_decode(int(i), N))
        if total > 0:
            dens /= total
        return SimStats(N, events, total, burninT, dens, weights, _decode(state, N))

    acc = 0.0
    while True:
        r = _site_rates(tau, rates)
        R = r.sum()
        hold = rng.standard_exponential() / R if R > 0 else math.inf
        t_next = t + hold
        lo, hi = max(t, burninT), min(t_next, horizonT)
        if hi > lo:
            dens += (hi - lo) * tau
            acc += hi - lo
        if t_next >= horizonT or events >= limit:
            break
        t = t_next
        k = int(np.searchsorted(np.cumsum(r), rng.random() * R, side="right"))
        k = min(k, 2 * N - 1)
        if k == 0:
            tau[0] ^= 1
        elif k < N:
            tau[k - 1], tau[k] = 0, 1
        elif k < 2 * N - 1:
            i = k - N
            tau[i], tau[i + 1] = 1, 0
        else:
            tau[-1] ^= 1
        events += 1
    if acc > 0:
        dens /= acc
    return SimStats(N, events, acc, burninT, dens, None, tuple(int(x) for x in tau))


def height_profile(tau):
    """Rescaled height h(k/N) = (1/N) sum_{i<=k} tau_i as a piecewise linear profile."""
    from .ratefn import PiecewiseLinearProfile

    tau = np.asarray(tau, dtype=int)
    N = tau.size
    if N == 0:
        return PiecewiseLinearProfile([0.0, 1.0], [0.0, 0.0])
    xs = np.arange(N + 1) / N
    ys = np.concatenate([[0.0], np.cumsum(tau)]) / N
    return PiecewiseLinearProfile(xs, ys)

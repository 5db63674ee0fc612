"""Certified truncation of the gap (matrix index) space and banded chain helpers.

Both the matrix product route and the two-layer route sum over gap paths
g_0, ..., g_N with |g_j - g_{j-1}| <= 1, started with weight a^{g_0} and
closed with b^{g_N} (cd;q)_{g_N}/(q;q)_{g_N}.  Only g_0 is unbounded, so we
keep starting gaps g_0 <= G and all indices below M = G + N + 1.

Tail bound: each step weight is at most 1 (a flat step carries at most 2),
and tracking b^{g_N} = b^{g_0} prod b^{dg} gives a per-step factor of at most
b + 2 + 1/b.  With (cd;q)_g <= 1 this bounds the dropped mass by

    (ab)^{G+1} / (1 - ab) * ((1 + b)^2 / b)^N / (q;q)_inf.

When a = 0 only g_0 = 0 contributes and when b = 0 only g_N = 0 does (so
g_0 <= N); both cases are then exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import TruncationError
from .qkernel import qpochhammer_inf

__all__ = [
    "Cutoff",
    "tail_log_bound",
    "choose_cutoff",
    "refine_cutoff",
    "log_boundary_weights",
    "tilt_log",
    "band_step",
    "gap_bands",
]

MAX_DIM = 200_000


@dataclass(frozen=True)
class Cutoff:
    """Starting gaps kept are 0..G; matrices have dimension M.

    ``log_tail`` bounds the log of the omitted (unnormalized) mass, ``-inf``
    when the truncation is exact.  ``log_lower`` is the lower bound on log Z
    used to pick G.
    """

    G: int
    M: int
    log_tail: float
    log_lower: float

    @property
    def exact(self) -> bool:
        return self.log_tail == -math.inf

    def prob_error(self, logZ: float) -> float:
        """Absolute error certificate for any probability computed from Z_T."""
        if self.exact:
            return 0.0
        return math.exp(min(self.log_tail - logZ, 0.0))


def _log_qq_inf(q: float) -> float:
    return math.log(qpochhammer_inf(q, q)[0]) if q > 0 else 0.0


def tail_log_bound(p, N: int, G: int) -> float:
    a, b, q = float(p.a), float(p.b), float(p.q)
    if a == 0.0 or b == 0.0:
        return -math.inf if (a == 0.0 or G >= N) else math.inf
    ab = a * b
    return ((G + 1) * math.log(ab) - math.log1p(-ab)
            + N * (2.0 * math.log1p(b) - math.log(b)) - _log_qq_inf(q))


def log_boundary_weights(p, M: int):
    """log a^k and log b^k (cd;q)_k/(q;q)_k for k < M, as float arrays."""
    a, b, c, d, q = (float(p.a), float(p.b), float(p.c), float(p.d), float(p.q))
    k = np.arange(M, dtype=float)
    with np.errstate(divide="ignore"):
        la = np.where(k == 0, 0.0, k * math.log(a)) if a > 0 else np.where(k == 0, 0.0, -np.inf)
        lb = np.where(k == 0, 0.0, k * math.log(b)) if b > 0 else np.where(k == 0, 0.0, -np.inf)
    qj = q ** np.arange(M - 1, dtype=float)
    if q == 0.0:
        qj[0] = 1.0
    num = np.log1p(-c * d * qj)
    den = np.log1p(-q * qj)
    lr = np.concatenate([[0.0], np.cumsum(num - den)])
    return la, lb + lr


def tilt_log(p) -> float:
    """log of the similarity tilt t used by the float backend.

    Vectors are carried as v_k t^k so that neither a^k nor b^k is formed
    on its own.  The start and end weights become (at)^k and (b/t)^k; t is
    picked so that neither grows and the one belonging to the dominant side
    stays flat (a start weight that decays like (ab)^k would underflow long
    before the down-steps could bring it back).
    """
    a, b = float(p.a), float(p.b)
    if a > 1:
        return -math.log(a)
    if b > 1:
        return math.log(b)
    return 0.0


def band_step(v, diag, up, down):
    """Row vector(s) times a tridiagonal matrix, along the last axis.

    ``diag[k]`` is the k -> k weight, ``up[k]`` the k -> k+1 weight and
    ``down[k]`` the k+1 -> k weight.  Works on float and object arrays.
    """
    out = v * diag
    out[..., 1:] += v[..., :-1] * up
    out[..., :-1] += v[..., 1:] * down
    return out


def gap_bands(p, M: int, exact: bool = False):
    """Gap-chain coefficients from the step weights W.

    Returns (flat00, flat11, up, down) where flat00[k] = W(k|0,0),
    flat11[k] = W(k|1,1), up[k] = W(k+1|1,0), down[k] = W(k|0,1).
    """
    from .qkernel import stepWeightW

    if exact:
        q, c, d = p.q, p.c, p.d
        f00 = np.array([stepWeightW(k, 0, 0, q, c, d) for k in range(M)], dtype=object)
        f11 = np.array([stepWeightW(k, 1, 1, q, c, d) for k in range(M)], dtype=object)
        up = np.array([stepWeightW(k + 1, 1, 0, q, c, d) for k in range(M - 1)], dtype=object)
        down = np.array([stepWeightW(k, 0, 1, q, c, d) for k in range(M - 1)], dtype=object)
        return f00, f11, up, down
    q, c, d = float(p.q), float(p.c), float(p.d)
    qk = q ** np.arange(M, dtype=float)
    qk[0] = 1.0  # 0**0 == 1
    f00 = 1.0 + c * qk
    f11 = 1.0 + d * qk
    up = 1.0 - qk[1:]
    down = 1.0 - c * d * qk[:-1]
    return f00, f11, up, down


def _pilot_logZ(p, N: int) -> float:
    """log of the g_0 = 0 part of Z_N: a lower bound for every cutoff."""
    M = N + 1
    f00, f11, up, down = gap_bands(p, M)
    lt = tilt_log(p)
    up = up * math.exp(lt)
    down = down * math.exp(-lt)
    stay = f00 + f11
    v = np.zeros(M)
    v[0] = 1.0
    scale = 0.0
    for _ in range(N):
        v = band_step(v, stay, up, down)
        s = v.max()
        v /= s
        scale += math.log(s)
    _, lb = log_boundary_weights(p, M)
    with np.errstate(divide="ignore"):
        return scale + float(logsumexp(np.log(v) + lb - lt * np.arange(M)))


def choose_cutoff(p, N: int, tol: float, log_lower: float | None = None) -> Cutoff:
    """Smallest G whose certified tail is below ``tol`` times a lower bound on Z."""
    a, b = float(p.a), float(p.b)
    if a * b >= 1:
        raise TruncationError("no certified truncation outside the fan region")
    if a == 0.0:
        return Cutoff(0, N + 1, -math.inf, -math.inf)
    if b == 0.0:
        # g_N = 0 forces g_j <= N - j, so index N is never exceeded
        return Cutoff(N, N + 1, -math.inf, -math.inf)
    if log_lower is None:
        log_lower = _pilot_logZ(p, N)
    target = math.log(tol) + log_lower
    # tail(G) = (G + 1) log(ab) + rest
    rest = tail_log_bound(p, N, -1)
    G = max(0, math.ceil((target - rest) / math.log(a * b)) - 1)
    while tail_log_bound(p, N, G) > target:
        G += 1
    M = G + N + 1
    if M > MAX_DIM:
        raise TruncationError(f"certified truncation needs dimension {M} > {MAX_DIM}")
    return Cutoff(G, M, tail_log_bound(p, N, G), log_lower)


def refine_cutoff(p, N: int, tol: float, cut: Cutoff, log_quantity: float) -> Cutoff:
    """Raise G so that a quantity of size exp(log_quantity) is certified to ``tol``.

    ``log_quantity`` is the log of an unnormalized partial sum computed with
    ``cut``; since enlarging G only adds nonnegative terms it stays a valid
    lower bound for the refined computation.
    """
    if cut.exact or cut.log_tail <= math.log(tol) + log_quantity:
        return cut
    return choose_cutoff(p, N, tol, log_lower=log_quantity)

"""Height-profile rate function for the fan region.

Profiles are piecewise linear, so every integral below is a finite sum over
segments.  The closed form needs the lower convex envelope; the pair form
takes a second profile g and is minimized over g by a convex program.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceBudgetError, ScopeError
from .qkernel import currentJ, entropyH, xlog

__all__ = [
    "PiecewiseLinearProfile",
    "PinnedSpec",
    "convex_envelope",
    "rate_closed",
    "rate_pair",
    "rate_variational",
    "finite_dim_rate",
    "interior_perturbation",
    "line_profile",
]

SLOPE_TOL = 1e-12


class PiecewiseLinearProfile:
    """Continuous piecewise linear f on [0, 1] with f(0) = 0."""

    def __init__(self, breakpoints, values):
        x = np.asarray(breakpoints, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise DomainError("breakpoints and values must be 1-d arrays of equal length >= 2")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise DomainError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(x) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if y[0] != 0.0:
            raise DomainError("profile must vanish at 0")
        self.breakpoints = x
        self.values = y

    def __repr__(self):
        return f"PiecewiseLinearProfile({self.breakpoints.tolist()}, {self.values.tolist()})"

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def evaluate(self, x):
        return np.interp(x, self.breakpoints, self.values)

    __call__ = evaluate

    def admissible(self, tol: float = SLOPE_TOL) -> bool:
        s = self.slopes
        return bool(np.all(s >= -tol) and np.all(s <= 1 + tol))

    def entropy_integral(self) -> float:
        """int_0^1 H(f'), +inf when inadmissible."""
        s = np.clip(self.slopes, 0.0, 1.0) if self.admissible() else self.slopes
        return float(sum(L * entropyH(v) for L, v in zip(self.lengths, s)))


def line_profile(rho: float) -> PiecewiseLinearProfile:
    return PiecewiseLinearProfile([0.0, 1.0], [0.0, float(rho)])


@dataclass(frozen=True)
class PinnedSpec:
    """Pinned values f(theta_j) = x_j with 0 < theta_1 < ... < theta_{d+1} = 1."""

    thetas: tuple
    xs: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.thetas)
        x = tuple(float(v) for v in self.xs)
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "xs", x)
        if len(t) != len(x) or not t:
            raise DomainError("thetas and xs must have the same positive length")
        if t[-1] != 1.0 or t[0] <= 0 or any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("need 0 < theta_1 < ... < theta_{d+1} = 1")

    def _increments(self):
        t = np.concatenate([[0.0], self.thetas])
        x = np.concatenate([[0.0], self.xs])
        return np.diff(t), np.diff(x)

    def in_cone(self, tol: float = 1e-12) -> bool:
        dt, dx = self._increments()
        return bool(np.all(dx >= -tol) and np.all(dx <= dt + tol))

    def interior(self) -> bool:
        dt, dx = self._increments()
        return bool(np.all(dx > 0) and np.all(dx < dt))

    def interpolant(self) -> PiecewiseLinearProfile:
        return PiecewiseLinearProfile((0.0,) + self.thetas, (0.0,) + self.xs)


def convex_envelope(f: PiecewiseLinearProfile) -> PiecewiseLinearProfile:
    """Lower convex hull of the graph vertices (monotone chain)."""
    hull = []
    for px, py in zip(f.breakpoints, f.values):
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (ax - ox) * (py - oy) - (ay - oy) * (px - ox) <= 0:
                hull.pop()
            else:
                break
        hull.append((px, py))
    xs, ys = zip(*hull)
    return PiecewiseLinearProfile(xs, ys)


def _require_fan(a, b):
    a, b = float(a), float(b)
    if a < 0 or b < 0:
        raise DomainError("a, b must be nonnegative")
    if a * b >= 1:
        raise ScopeError(f"fan region requires ab < 1, got a*b = {a * b!r}")
    return a, b


def _envelope_term(s: float, a: float, b: float) -> float:
    G = min(max(s, a / (1 + a)), 1 / (1 + b))
    return xlog(s, G) + xlog(1 - s, 1 - G)


def rate_closed(f: PiecewiseLinearProfile, a, b) -> float:
    a, b = _require_fan(a, b)
    if not f.admissible():
        return math.inf
    env = convex_envelope(f)
    s_env = np.clip(env.slopes, 0.0, 1.0)
    second = sum(L * _envelope_term(s, a, b) for L, s in zip(env.lengths, s_env))
    return f.entropy_integral() + float(second) - math.log(currentJ(a, b))


def _diff_extremes(f, g):
    xs = np.union1d(f.breakpoints, g.breakpoints)
    d = f.evaluate(xs) - g.evaluate(xs)
    return float(d.min()), float(d[-1])


def rate_pair(f: PiecewiseLinearProfile, g: PiecewiseLinearProfile, a, b,
              tol: float = 1e-12) -> float:
    """Pair form, written as log(a) m + log(b) (m - (f(1) - g(1))) with m = min(f - g).

    Both coefficients are <= 0, so a = 0 (b = 0) makes the value infinite
    unless the corresponding coefficient vanishes; |coef| <= tol counts as 0.
    """
    a, b = _require_fan(a, b)
    if not (f.admissible() and g.admissible()):
        return math.inf
    m, d1 = _diff_extremes(f, g)
    ca = 0.0 if abs(m) <= tol else min(m, 0.0)
    cb = 0.0 if abs(m - d1) <= tol else min(m - d1, 0.0)
    return (f.entropy_integral() + g.entropy_integral() + xlog(ca, a) + xlog(cb, b)
            - math.log(currentJ(a, b)))


def _grid(K: int, extra=()):
    if K < 1:
        raise DomainError("grid resolution must be positive")
    return np.union1d(np.linspace(0.0, 1.0, K + 1), np.asarray(extra, dtype=float))


def _solve(problem):
    import cvxpy as cp

    # inaccurate solves are fine: callers re-evaluate the returned profile exactly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        try:
            problem.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            problem.solve(solver=cp.SCS, eps=1e-9, max_iters=200_000)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise ResourceBudgetError(f"convex solver failed with status {problem.status}")


def _pair_program(xs, a, b, f_fixed=None, pins=None):
    """Minimize the pair form over g (and f when ``f_fixed`` is None) on grid ``xs``."""
    import cvxpy as cp

    dx = np.diff(xs)
    n = dx.size
    sg = cp.Variable(n)
    m = cp.Variable()
    cons = [sg >= 0, sg <= 1]
    gv = cp.hstack([0.0, cp.cumsum(cp.multiply(dx, sg))])
    H = lambda s: -cp.entr(s) - cp.entr(1 - s)  # noqa: E731
    cost = dx @ H(sg)
    if f_fixed is None:
        sf = cp.Variable(n)
        cons += [sf >= 0, sf <= 1]
        fv = cp.hstack([0.0, cp.cumsum(cp.multiply(dx, sf))])
        cost = cost + dx @ H(sf)
        for t, x in pins:
            cons.append(fv[int(np.searchsorted(xs, t))] == x)
    else:
        sf = None
        fv = f_fixed
    cons.append(m <= fv - gv)
    d1 = fv[n] - gv[n]
    if a == 0:
        cons.append(m == 0)
    else:
        cost = cost + math.log(a) * m
    if b == 0:
        cons.append(m == d1)
    else:
        cost = cost + math.log(b) * (m - d1)
    prob = cp.Problem(cp.Minimize(cost), cons)
    _solve(prob)
    return prob, sf, sg


def _profile_from_slopes(xs, s) -> PiecewiseLinearProfile:
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return PiecewiseLinearProfile(xs, np.concatenate([[0.0], np.cumsum(np.diff(xs) * s)]))


def rate_variational(f: PiecewiseLinearProfile, a, b, gridK: int = 200,
                     return_g: bool = False, tol: float = 1e-7):
    """Upper bound on inf_g rate_pair(f, g) over g piecewise linear on a K-grid.

    The grid is the uniform K-grid together with the breakpoints of f.  The
    minimizer is re-evaluated with :func:`rate_pair`, so the value is attained
    by an explicit g.
    """
    a, b = _require_fan(a, b)
    if not f.admissible():
        return (math.inf, None) if return_g else math.inf
    xs = _grid(gridK, f.breakpoints)
    _, _, sg = _pair_program(xs, a, b, f_fixed=f.evaluate(xs))
    g = _profile_from_slopes(xs, sg.value)
    val = rate_pair(f, g, a, b, tol=tol)
    return (val, g) if return_g else val


def _fit_pins(xs, s, spec: PinnedSpec):
    """Shift slopes within each pinned segment so the pins hold exactly."""
    from scipy.optimize import brentq

    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    dx = np.diff(xs)
    out = s.copy()
    lo_t, lo_x = 0.0, 0.0
    for t, x in zip(spec.thetas, spec.xs):
        i0 = int(np.searchsorted(xs, lo_t))
        i1 = int(np.searchsorted(xs, t))
        seg, w = s[i0:i1], dx[i0:i1]
        target = x - lo_x
        mass = lambda c: float(w @ np.clip(seg + c, 0.0, 1.0)) - target  # noqa: E731
        if target <= 0:
            out[i0:i1] = 0.0
        elif target >= w.sum():
            out[i0:i1] = 1.0
        else:
            out[i0:i1] = np.clip(seg + brentq(mass, -1.0, 1.0, xtol=1e-15), 0.0, 1.0)
        lo_t, lo_x = t, x
    return out


def finite_dim_rate(spec: PinnedSpec, a, b, gridK: int = 200, return_f: bool = False):
    """inf of rate_closed over admissible f with f(theta_j) = x_j.

    +inf outside the cone.  Inside, f and g are optimized jointly on a grid
    containing the thetas (the pair form is jointly convex); the returned
    value is rate_closed of the optimal f, so it is attained.
    """
    a, b = _require_fan(a, b)
    if not spec.in_cone():
        return (math.inf, None) if return_f else math.inf
    xs = _grid(gridK, spec.thetas)
    _, sf, _ = _pair_program(xs, a, b, pins=list(zip(spec.thetas, spec.xs)))
    f = _profile_from_slopes(xs, _fit_pins(xs, sf.value, spec))
    val = rate_closed(f, a, b)
    return (val, f) if return_f else val


def interior_perturbation(f: PiecewiseLinearProfile, eps: float, thetas=None,
                          tol: float = 1e-12) -> PiecewiseLinearProfile:
    """Push pinned increments off the cone boundary.

    Over each pinned interval [theta_{j-1}, theta_j] (default: the breakpoints
    of f) where f is flat, slope 1 is added on the first eps of the interval;
    where f has slope 1, that slope is removed there instead.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not f.admissible():
        raise DomainError("profile must be admissible")
    knots = np.asarray(f.breakpoints if thetas is None else np.concatenate([[0.0], thetas]))
    if knots[0] != 0.0:
        knots = np.concatenate([[0.0], knots])
    xs = np.union1d(np.union1d(f.breakpoints, knots),
                    np.clip(knots[:-1] + eps, 0.0, 1.0))
    ys = f.evaluate(xs)
    s = np.diff(ys) / np.diff(xs)
    changed = False
    for t0, t1 in zip(knots[:-1], knots[1:]):
        inc = f.evaluate(t1) - f.evaluate(t0)
        if inc <= tol:
            sign = 1.0
        elif inc >= (t1 - t0) - tol:
            sign = -1.0
        else:
            continue
        if eps >= t1 - t0:
            raise DomainError(f"eps={eps} too large for the interval [{t0}, {t1}]")
        lo, hi = np.searchsorted(xs, t0), np.searchsorted(xs, t0 + eps)
        s[lo:hi] += sign
        changed = True
    if not changed:
        return f
    return PiecewiseLinearProfile(xs, np.concatenate([[0.0], np.cumsum(np.diff(xs) * s)]))

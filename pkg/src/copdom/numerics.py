"""Numerical kernels shared by the rest of the package.

Adaptive Simpson quadrature (1D and nested 2D), a bisection-based generalized
inverse for monotone functions, evaluation grids and the regularized
incomplete beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import betaln

__all__ = [
    "Tolerance",
    "Grid",
    "QuadratureError",
    "integrate",
    "integrate2d",
    "invert_monotone",
    "reg_incomplete_beta",
    "reg_incomplete_beta_array",
    "beta_pdf",
    "cumulative_simpson",
]


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-8
    rel_tol: float = 0.0
    max_subdivisions: int = 200_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.rel_tol < 0:
            raise ValueError(f"rel_tol must be nonnegative, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def scaled(self, factor: float) -> "Tolerance":
        return Tolerance(self.abs_tol * factor, self.rel_tol, self.max_subdivisions)


QUAD_TOL = Tolerance()


@dataclass(frozen=True)
class Grid:
    """Strictly increasing evaluation points inside ``[lo, hi]``."""

    points: tuple
    lo: float
    hi: float

    def __post_init__(self):
        pts = self.points
        if len(pts) == 0:
            raise ValueError("grid must contain at least one point")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] < self.lo or pts[-1] > self.hi:
            raise ValueError("grid points must lie inside the declared interval")

    @property
    def resolution(self) -> int:
        return len(self.points)

    @classmethod
    def open_unit(cls, n: int = 201) -> "Grid":
        """``n`` equispaced interior points of (0, 1), i/(n+1)."""
        return cls.open_interval(0.0, 1.0, n)

    @classmethod
    def open_interval(cls, lo: float, hi: float, n: int) -> "Grid":
        if n < 1:
            raise ValueError("resolution must be positive")
        step = (hi - lo) / (n + 1)
        return cls(tuple(lo + step * i for i in range(1, n + 1)), lo, hi)

    @classmethod
    def closed_interval(cls, lo: float, hi: float, n: int) -> "Grid":
        if n < 2:
            raise ValueError("closed grids need at least two points")
        pts = np.linspace(lo, hi, n)
        return cls(tuple(float(p) for p in pts), lo, hi)

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "Grid":
        pts = tuple(float(p) for p in points)
        return cls(pts, pts[0], pts[-1])

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error!r})")
        self.estimate = estimate
        self.error = error


# ---------------------------------------------------------------------------
# 1D quadrature


def _simpson_panel(f, a, b, fa, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, b, eps, budget):
    """Iterative adaptive Simpson on a finite interval.

    ``budget`` is a one-element list holding the remaining number of
    subdivisions; it is shared across the pieces of one call to ``integrate``.
    Returns (estimate, error bound).
    """
    width = b - a
    if width == 0.0:
        return 0.0, 0.0
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson_panel(f, a, b, fa, fb)
    # force a few levels of refinement so narrow features are not skipped
    stack = [(a, b, fa, fm, fb, whole, 0)]
    total = 0.0
    err_total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, s, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, flm, s_left = _simpson_panel(f, lo, mid, flo, fmid)
        rm, frm, s_right = _simpson_panel(f, mid, hi, fmid, fhi)
        s2 = s_left + s_right
        local_eps = eps * (hi - lo) / width
        diff = s2 - s
        if depth >= 3 and (abs(diff) <= 15.0 * local_eps or mid <= lo or mid >= hi):
            total += s2 + diff / 15.0
            err_total += abs(diff) / 15.0
            continue
        if budget[0] <= 0:
            total += s2
            err_total += abs(diff) / 15.0
            for item in stack:
                total += item[5]
            raise QuadratureError("adaptive Simpson did not converge", total, err_total)
        budget[0] -= 1
        stack.append((mid, hi, fmid, frm, fhi, s_right, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, s_left, depth + 1))
    return total, err_total


def _finite_pieces(f, a, b):
    """Map an integral with possibly infinite limits to finite ones.

    Yields (g, lo, hi) triples whose integrals sum to the original.
    Uses x = c + t/(1-t) on [0, 1) for semi-infinite tails.
    """
    if math.isinf(a) and math.isinf(b):
        yield from _finite_pieces(f, a, 0.0)
        yield from _finite_pieces(f, 0.0, b)
        return
    if math.isinf(b):
        c = a

        def upper(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(c + t / s) / (s * s)

        yield upper, 0.0, 1.0
        return
    if math.isinf(a):
        c = b

        def lower(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(c - t / s) / (s * s)

        yield lower, 0.0, 1.0
        return
    yield f, a, b


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = QUAD_TOL,
    breakpoints: Sequence[float] | None = None,
) -> float:
    """Integrate ``f`` over ``[a, b]`` with adaptive Simpson.

    Infinite limits are handled by the substitution x = t/(1-t).
    ``breakpoints`` split the interval so subdivision aligns with kinks
    and jumps of the integrand.
    """
    if math.isnan(a) or math.isnan(b):
        raise ValueError("integration limits must not be NaN")
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, tol, breakpoints)
    cuts = sorted({float(p) for p in (breakpoints or ()) if a < p < b and math.isfinite(p)})
    edges = [a, *cuts, b]
    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        pieces.extend(_finite_pieces(f, lo, hi))

    eps = tol.abs_tol
    if tol.rel_tol > 0:
        # a coarse first pass fixes the relative part of the target error
        crude = sum((hi - lo) / 6.0 * (g(lo) + 4.0 * g(0.5 * (lo + hi)) + g(hi)) for g, lo, hi in pieces)
        eps = max(eps, tol.rel_tol * abs(crude))
    total_width = sum(hi - lo for _, lo, hi in pieces)
    budget = [tol.max_subdivisions]
    result = 0.0
    for g, lo, hi in pieces:
        value, _ = _adaptive_simpson(g, lo, hi, eps * (hi - lo) / total_width, budget)
        result += value
    return result


def integrate2d(
    f: Callable[[float, float], float],
    tol: Tolerance = QUAD_TOL,
    x_range: tuple[float, float] = (0.0, 1.0),
    y_range: tuple[float, float] = (0.0, 1.0),
    x_breaks: Sequence[float] | None = None,
    y_breaks: Sequence[float] | None = None,
) -> float:
    """Nested adaptive integral of ``f(x, y)``; the unit square by default."""
    inner_tol = tol.scaled(0.1)
    y0, y1 = y_range

    def inner(x):
        return integrate(lambda y: f(x, y), y0, y1, inner_tol, y_breaks)

    return integrate(inner, x_range[0], x_range[1], tol, x_breaks)


# ---------------------------------------------------------------------------
# inversion


def invert_monotone(
    g: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: Tolerance = QUAD_TOL,
) -> float:
    """Generalized inverse ``inf{x in [lo, hi] : g(x) >= target}`` by bisection.

    ``g`` must be nondecreasing on the bracket. Flat segments resolve to the
    leftmost point, matching the quantile convention.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    g_lo, g_hi = g(lo), g(hi)
    if target < g_lo - tol.abs_tol or target > g_hi + tol.abs_tol:
        raise ValueError(
            f"target {target!r} outside [g({lo!r}), g({hi!r})] = [{g_lo!r}, {g_hi!r}]"
        )
    if g_lo >= target:
        return lo
    if g_hi < target:
        return hi
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if g(m) >= target:
            b = m
        else:
            a = m
    return b


# ---------------------------------------------------------------------------
# incomplete beta

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 500


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    if x <= a / (a + b):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def _betacf_array(a, b, x):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _CF_EPS
        if done.all():
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def reg_incomplete_beta_array(a, b, x) -> np.ndarray:
    """Vectorized I_x(a, b); arguments broadcast against each other."""
    a, b, x = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(x, dtype=float)
    )
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("shape parameters must be positive")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    out = np.empty(x.shape)
    edge0, edge1 = x == 0.0, x == 1.0
    out[edge0] = 0.0
    out[edge1] = 1.0
    inner = ~(edge0 | edge1)
    if not inner.any():
        return out
    ai, bi, xi = a[inner], b[inner], x[inner]
    log_front = ai * np.log(xi) + bi * np.log1p(-xi) - betaln(ai, bi)
    front = np.exp(log_front)
    direct = xi <= ai / (ai + bi)
    res = np.empty(xi.shape)
    if direct.any():
        res[direct] = front[direct] * _betacf_array(ai[direct], bi[direct], xi[direct]) / ai[direct]
    flip = ~direct
    if flip.any():
        res[flip] = 1.0 - front[flip] * _betacf_array(
            bi[flip], ai[flip], 1.0 - xi[flip]
        ) / bi[flip]
    out[inner] = res
    return out


def beta_pdf(a, b, x):
    """Beta(a, b) density, vectorized; zero outside [0, 1]."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)
        p = np.exp(logp)
    p = np.where((x < 0) | (x > 1), 0.0, p)
    return np.nan_to_num(p, nan=0.0, posinf=np.inf)


def cumulative_simpson(y: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Running Simpson integral at every even node of an equispaced sample.

    ``y`` has an odd number of samples along ``axis``; the result holds the
    integral from the first node to nodes 0, 2, 4, ...
    """
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    n = y.shape[-1]
    if n % 2 == 0:
        raise ValueError("cumulative_simpson needs an odd number of samples")
    panels = h / 3.0 * (y[..., 0:-1:2] + 4.0 * y[..., 1::2] + y[..., 2::2])
    out = np.concatenate([np.zeros(y.shape[:-1] + (1,)), np.cumsum(panels, axis=-1)], axis=-1)
    return np.moveaxis(out, -1, axis)

"""Bivariate copulas: closed-form families, transforms and piecewise constructions.

All evaluators take scalar ``(u, v)`` in the unit square. ``partial2`` is the
derivative in the second argument (analytic where a closed form exists);
``partial1`` is used for conditional-inversion sampling. ``u_breaks`` and
``v_breaks`` list kink locations for quadrature alignment.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import betaln

from .numerics import (
    Tolerance,
    beta_pdf,
    cumulative_simpson,
    integrate,
    reg_incomplete_beta,
    reg_incomplete_beta_array,
)

__all__ = [
    "Copula",
    "Product",
    "FrechetUpper",
    "FrechetLower",
    "FGM",
    "Generator",
    "Archimedean",
    "clayton_generator",
    "gumbel_generator",
    "SurvivalCopula",
    "ReflectedCopula",
    "PiecewiseUniformCopula",
    "Example1Copula",
    "Example2Copula",
    "TabulatedCopula",
    "survival_copula",
    "reflect_second",
    "make_product",
    "make_frechet_upper",
    "make_frechet_lower",
    "make_fgm",
    "make_archimedean",
    "make_clayton",
    "make_gumbel",
    "make_example1",
    "make_example2",
    "make_example3",
    "partial2",
    "sample",
    "make_copula",
    "load_grid_copula",
    "invariant_violations",
    "BreakpointCollision",
]

FD_STEP = 1e-5

# Gauss-Legendre rule on [0, 1]
_gl_x, _gl_w = np.polynomial.legendre.leggauss(24)
_GL_NODES = 0.5 * (_gl_x + 1.0)
_GL_WEIGHTS = 0.5 * _gl_w


class BreakpointCollision(ValueError):
    """A finite difference stencil straddles a declared kink."""


def _clip01(x):
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


class Copula:
    family = "abstract"
    u_breaks: tuple = ()
    v_breaks: tuple = ()
    analytic_partial2 = False
    # evaluated through tables or quadrature rather than a closed form
    quadrature_backed = False

    def cdf(self, u: float, v: float) -> float:
        raise NotImplementedError

    def __call__(self, u, v):
        return self.cdf(u, v)

    @property
    def has_density(self) -> bool:
        return False

    def density(self, u: float, v: float) -> float:
        raise NotImplementedError(f"{self.family} copula is not absolutely continuous")

    def partial2(self, u: float, v: float) -> float:
        return fd_partial2(self, u, v)

    def partial1(self, u: float, v: float) -> float:
        h = FD_STEP
        lo, hi = max(0.0, u - h), min(1.0, u + h)
        return _clip01((self.cdf(hi, v) - self.cdf(lo, v)) / (hi - lo))

    def params(self) -> dict:
        return {}

    def to_spec(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def conditional_inverse(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Solve partial1(u, v) = w for v, elementwise, by bisection."""
        v_lo = np.zeros_like(u)
        v_hi = np.ones_like(u)
        p1 = np.vectorize(self.partial1, otypes=[float])
        for _ in range(48):
            mid = 0.5 * (v_lo + v_hi)
            above = p1(u, mid) >= w
            v_hi = np.where(above, mid, v_hi)
            v_lo = np.where(above, v_lo, mid)
        return 0.5 * (v_lo + v_hi)

    def sample_uv(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        w = rng.random(n)
        return np.column_stack([u, self.conditional_inverse(u, w)])

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"


def fd_partial2(c: Copula, u: float, v: float, h: float = FD_STEP) -> float:
    """Finite-difference derivative of C in v.

    Centered when the stencil fits in (0, 1) without crossing a declared
    v-breakpoint, one-sided otherwise.
    """
    near_left = v - h < 0.0 or any(v - h < b <= v for b in c.v_breaks)
    near_right = v + h > 1.0 or any(v <= b < v + h for b in c.v_breaks)
    if near_left and near_right:
        raise BreakpointCollision(f"no clean stencil at v={v} with h={h}")
    if near_left:
        val = (-3 * c.cdf(u, v) + 4 * c.cdf(u, v + h) - c.cdf(u, v + 2 * h)) / (2 * h)
    elif near_right:
        val = (3 * c.cdf(u, v) - 4 * c.cdf(u, v - h) + c.cdf(u, v - 2 * h)) / (2 * h)
    else:
        val = (c.cdf(u, v + h) - c.cdf(u, v - h)) / (2 * h)
    return val


def partial2(c: Copula, u: float, v: float, h: float | None = None) -> float:
    """Derivative of ``c`` in its second argument at ``(u, v)``."""
    if h is None and c.analytic_partial2:
        return c.partial2(u, v)
    return fd_partial2(c, u, v, FD_STEP if h is None else h)


# ---------------------------------------------------------------------------
# closed-form families


class Product(Copula):
    family = "product"
    analytic_partial2 = True

    def cdf(self, u, v):
        return u * v

    @property
    def has_density(self):
        return True

    def density(self, u, v):
        return 1.0

    def partial2(self, u, v):
        return u

    def partial1(self, u, v):
        return v

    def conditional_inverse(self, u, w):
        return w.copy()


class FrechetUpper(Copula):
    family = "frechet-upper"
    analytic_partial2 = True

    def cdf(self, u, v):
        return min(u, v)

    def partial2(self, u, v):
        return 1.0 if v < u else 0.0

    def partial1(self, u, v):
        return 1.0 if u < v else 0.0

    def conditional_inverse(self, u, w):
        return u.copy()


class FrechetLower(Copula):
    family = "frechet-lower"
    analytic_partial2 = True

    def cdf(self, u, v):
        return max(u + v - 1.0, 0.0)

    def partial2(self, u, v):
        return 1.0 if u + v > 1.0 else 0.0

    def partial1(self, u, v):
        return 1.0 if u + v > 1.0 else 0.0

    def conditional_inverse(self, u, w):
        return 1.0 - u


class FGM(Copula):
    family = "fgm"
    analytic_partial2 = True

    def __init__(self, theta: float):
        if not -1.0 <= theta <= 1.0:
            raise ValueError(f"FGM parameter must lie in [-1, 1], got {theta}")
        self.theta = float(theta)

    def cdf(self, u, v):
        return u * v * (1.0 + self.theta * (1.0 - u) * (1.0 - v))

    @property
    def has_density(self):
        return True

    def density(self, u, v):
        return 1.0 + self.theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)

    def partial2(self, u, v):
        return u + self.theta * u * (1.0 - u) * (1.0 - 2.0 * v)

    def partial1(self, u, v):
        return v + self.theta * v * (1.0 - v) * (1.0 - 2.0 * u)

    def conditional_inverse(self, u, w):
        a = self.theta * (1.0 - 2.0 * u)
        small = np.abs(a) < 1e-12
        safe = np.where(small, 1.0, a)
        disc = np.sqrt(np.maximum((1.0 + a) ** 2 - 4.0 * a * w, 0.0))
        root = 2.0 * w / ((1.0 + safe) + disc)  # cancellation-free quadratic root
        return np.where(small, w, root)

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class Generator:
    """Strict Archimedean generator with its inverse and derivatives."""

    name: str
    theta: float
    psi: Callable[[float], float]
    psi_inv: Callable[[float], float]
    dpsi: Callable[[float], float]
    d2psi: Callable[[float], float] | None = None


def clayton_generator(theta: float) -> Generator:
    if not theta > 0:
        raise ValueError(f"Clayton generator is strict only for theta > 0, got {theta}")

    def psi(t):
        if t <= 0.0:
            return math.inf
        try:
            return math.expm1(-theta * math.log(t)) / theta
        except OverflowError:
            return math.inf

    def psi_inv(s):
        if math.isinf(s):
            return 0.0
        return math.exp(-math.log1p(theta * s) / theta)

    def dpsi(t):
        try:
            return -(t ** (-theta - 1.0))
        except (OverflowError, ZeroDivisionError):
            return -math.inf

    def d2psi(t):
        return (theta + 1.0) * t ** (-theta - 2.0)

    return Generator("clayton", float(theta), psi, psi_inv, dpsi, d2psi)


def gumbel_generator(theta: float) -> Generator:
    if not theta >= 1:
        raise ValueError(f"Gumbel generator needs theta >= 1, got {theta}")

    def psi(t):
        if t <= 0.0:
            return math.inf
        return (-math.log(t)) ** theta

    def psi_inv(s):
        return math.exp(-(s ** (1.0 / theta)))

    def dpsi(t):
        return -theta * (-math.log(t)) ** (theta - 1.0) / t

    def d2psi(t):
        L = -math.log(t)
        return theta / (t * t) * ((theta - 1.0) * L ** (theta - 2.0) + L ** (theta - 1.0)) if L > 0 else math.inf

    return Generator("gumbel", float(theta), psi, psi_inv, dpsi, d2psi)


class Archimedean(Copula):
    analytic_partial2 = True

    def __init__(self, generator: Generator):
        self.generator = generator
        self.family = generator.name

    def cdf(self, u, v):
        if u <= 0.0 or v <= 0.0:
            return 0.0
        if u >= 1.0:
            return min(v, 1.0)
        if v >= 1.0:
            return u
        g = self.generator
        return g.psi_inv(g.psi(u) + g.psi(v))

    def _partial(self, fixed, moving):
        if fixed <= 0.0:
            return 0.0
        if fixed >= 1.0:
            return 1.0
        moving = min(max(moving, 1e-300), 1.0)
        g = self.generator
        c = g.psi_inv(g.psi(fixed) + g.psi(moving))
        if c <= 0.0:
            return 0.0
        return _clip01(g.dpsi(moving) / g.dpsi(c))

    def partial2(self, u, v):
        return self._partial(u, v)

    def partial1(self, u, v):
        return self._partial(v, u)

    @property
    def has_density(self):
        return self.generator.d2psi is not None

    def density(self, u, v):
        g = self.generator
        c = self.cdf(u, v)
        return -g.d2psi(c) * g.dpsi(u) * g.dpsi(v) / g.dpsi(c) ** 3

    def conditional_inverse(self, u, w):
        if self.family == "clayton":
            th = self.generator.theta
            return ((w ** (-th / (1.0 + th)) - 1.0) * u ** (-th) + 1.0) ** (-1.0 / th)
        return super().conditional_inverse(u, w)

    def params(self):
        return {"theta": self.generator.theta}


# ---------------------------------------------------------------------------
# transforms


class SurvivalCopula(Copula):
    """u + v - 1 + C(1-u, 1-v): the copula of (1-U, 1-V)."""

    family = "survival"

    def __init__(self, base: Copula):
        self.base = base
        self.analytic_partial2 = base.analytic_partial2
        self.u_breaks = tuple(sorted(1.0 - b for b in base.u_breaks))
        self.v_breaks = tuple(sorted(1.0 - b for b in base.v_breaks))

    @property
    def quadrature_backed(self):
        return self.base.quadrature_backed

    def cdf(self, u, v):
        return u + v - 1.0 + self.base.cdf(1.0 - u, 1.0 - v)

    @property
    def has_density(self):
        return self.base.has_density

    def density(self, u, v):
        return self.base.density(1.0 - u, 1.0 - v)

    def partial2(self, u, v):
        if not self.analytic_partial2:
            return fd_partial2(self, u, v)
        return 1.0 - self.base.partial2(1.0 - u, 1.0 - v)

    def partial1(self, u, v):
        return 1.0 - self.base.partial1(1.0 - u, 1.0 - v)

    def sample_uv(self, n, rng):
        return 1.0 - self.base.sample_uv(n, rng)

    def params(self):
        return {"base": self.base.to_spec()}


class ReflectedCopula(Copula):
    """u - C(u, 1-v): the copula of (U, 1-V)."""

    family = "reflect"

    def __init__(self, base: Copula):
        self.base = base
        self.analytic_partial2 = base.analytic_partial2
        self.u_breaks = base.u_breaks
        self.v_breaks = tuple(sorted(1.0 - b for b in base.v_breaks))

    @property
    def quadrature_backed(self):
        return self.base.quadrature_backed

    def cdf(self, u, v):
        return u - self.base.cdf(u, 1.0 - v)

    @property
    def has_density(self):
        return self.base.has_density

    def density(self, u, v):
        return self.base.density(u, 1.0 - v)

    def partial2(self, u, v):
        if not self.analytic_partial2:
            return fd_partial2(self, u, v)
        return self.base.partial2(u, 1.0 - v)

    def partial1(self, u, v):
        return 1.0 - self.base.partial1(u, 1.0 - v)

    def sample_uv(self, n, rng):
        s = self.base.sample_uv(n, rng)
        s[:, 1] = 1.0 - s[:, 1]
        return s

    def params(self):
        return {"base": self.base.to_spec()}


def survival_copula(c: Copula) -> Copula:
    return SurvivalCopula(c)


def reflect_second(c: Copula) -> Copula:
    return ReflectedCopula(c)


# ---------------------------------------------------------------------------
# piecewise-uniform constructions


def _overlap(x, lo, hi):
    if x <= lo:
        return 0.0
    return (x if x < hi else hi) - lo


class PiecewiseUniformCopula(Copula):
    """Copula with a density that is constant on finitely many rectangles.

    Each rectangle is ``(u0, u1, v0, v1, density)``; the CDF is evaluated by
    exact rectangle overlaps.
    """

    family = "piecewise"
    analytic_partial2 = True

    def __init__(self, rects: Sequence[tuple], check: bool = True):
        rects = [tuple(float(x) for x in r) for r in rects]
        self.rects = tuple(r for r in rects if r[1] > r[0] and r[3] > r[2] and r[4] != 0.0)
        self.u_breaks = tuple(sorted({x for r in self.rects for x in r[:2]} - {0.0, 1.0}))
        self.v_breaks = tuple(sorted({x for r in self.rects for x in r[2:4]} - {0.0, 1.0}))
        masses = np.array([(r[1] - r[0]) * (r[3] - r[2]) * r[4] for r in self.rects])
        self._mass = masses
        if check:
            if any(r[4] < 0 for r in self.rects):
                raise ValueError("rectangle densities must be nonnegative")
            if abs(masses.sum() - 1.0) > 1e-12:
                raise ValueError(f"rectangle masses sum to {masses.sum()}, not 1")
            for x in (0.25, 0.5, 0.75, *self.u_breaks, *self.v_breaks):
                if abs(self.cdf(x, 1.0) - x) > 1e-12 or abs(self.cdf(1.0, x) - x) > 1e-12:
                    raise ValueError("rectangles do not have uniform marginals")

    def cdf(self, u, v):
        total = 0.0
        for u0, u1, v0, v1, d in self.rects:
            if u <= u0 or v <= v0:
                continue
            total += d * _overlap(u, u0, u1) * _overlap(v, v0, v1)
        return total

    @property
    def has_density(self):
        return True

    def density(self, u, v):
        return sum(d for u0, u1, v0, v1, d in self.rects if u0 <= u < u1 and v0 <= v < v1)

    def partial2(self, u, v):
        return sum(d * _overlap(u, u0, u1) for u0, u1, v0, v1, d in self.rects if v0 <= v < v1)

    def partial1(self, u, v):
        return sum(d * _overlap(v, v0, v1) for u0, u1, v0, v1, d in self.rects if u0 <= u < u1)

    def sample_uv(self, n, rng):
        idx = rng.choice(len(self.rects), size=n, p=self._mass / self._mass.sum())
        r = np.asarray(self.rects)[idx]
        u = r[:, 0] + (r[:, 1] - r[:, 0]) * rng.random(n)
        v = r[:, 2] + (r[:, 3] - r[:, 2]) * rng.random(n)
        return np.column_stack([u, v])

    def params(self):
        return {"rects": [list(r) for r in self.rects]}


_EX2_RECTS = (
    (0.0, 0.5, 0.0, 0.25, 2.0),
    (0.0, 0.5, 0.75, 1.0, 2.0),
    (0.5, 1.0, 0.25, 0.75, 2.0),
)


class Example2Copula(PiecewiseUniformCopula):
    """Uniform density 2 on (0,1/2)x(0,1/4), (0,1/2)x(3/4,1), (1/2,1)x(1/4,3/4)."""

    family = "example2"

    def __init__(self):
        super().__init__(_EX2_RECTS)

    def cdf(self, u, v):
        if u <= 0.0 or v <= 0.0:
            return 0.0
        u, v = min(u, 1.0), min(v, 1.0)
        if u <= 0.5:
            if v <= 0.25:
                return 2 * u * v
            if v <= 0.75:
                return 0.5 * u
            return 2 * u * v - u
        if v <= 0.25:
            return v
        if v <= 0.75:
            return 0.5 + 2 * u * v - 0.5 * u - v
        return u + v - 1.0

    def params(self):
        return {}


def _example3_rects(delta):
    return (
        (0.0, 0.5, 0.0, 0.25 + delta, 2.0),
        (0.0, 0.5, 0.75 + delta, 1.0, 2.0),
        (0.5, 1.0, 0.25 + delta, 0.75 + delta, 2.0),
    )


class Example3Copula(PiecewiseUniformCopula):
    family = "example3"

    def __init__(self, delta: float):
        if not 0.0 <= delta <= 0.25:
            raise ValueError(f"delta must lie in [0, 1/4], got {delta}")
        self.delta = float(delta)
        super().__init__(_example3_rects(self.delta))

    def params(self):
        return {"delta": self.delta}


# ---------------------------------------------------------------------------
# tabulated copulas


class TabulatedCopula(Copula):
    """Bilinear interpolation of C on a rectilinear node grid covering [0,1]^2."""

    family = "grid"
    analytic_partial2 = True
    quadrature_backed = True

    def __init__(self, u_nodes, v_nodes, table, tol: float = 1e-8):
        un = np.asarray(u_nodes, dtype=float)
        vn = np.asarray(v_nodes, dtype=float)
        tab = np.asarray(table, dtype=float)
        if tab.shape != (un.size, vn.size):
            raise ValueError(f"table shape {tab.shape} does not match nodes {(un.size, vn.size)}")
        if un[0] != 0.0 or un[-1] != 1.0 or vn[0] != 0.0 or vn[-1] != 1.0:
            raise ValueError("node grids must include 0 and 1")
        if np.any(np.diff(un) <= 0) or np.any(np.diff(vn) <= 0):
            raise ValueError("node grids must be strictly increasing")
        if (
            np.abs(tab[0, :]).max() > tol
            or np.abs(tab[:, 0]).max() > tol
            or np.abs(tab[-1, :] - vn).max() > tol
            or np.abs(tab[:, -1] - un).max() > tol
        ):
            raise ValueError("tabulated values violate the copula boundary conditions")
        rect = tab[1:, 1:] - tab[1:, :-1] - tab[:-1, 1:] + tab[:-1, :-1]
        if rect.min() < -tol:
            raise ValueError(f"tabulated values are not 2-increasing (min rectangle mass {rect.min()})")
        self.u_nodes, self.v_nodes, self.table = un, vn, tab
        self._ul, self._vl = un.tolist(), vn.tolist()
        self._tl = tab.tolist()

    @staticmethod
    def _cell(nodes, x):
        i = bisect.bisect_right(nodes, x) - 1
        return min(max(i, 0), len(nodes) - 2)

    def _bilinear(self, tab, u, v):
        u, v = _clip01(u), _clip01(v)
        i, j = self._cell(self._ul, u), self._cell(self._vl, v)
        u0, u1 = self._ul[i], self._ul[i + 1]
        v0, v1 = self._vl[j], self._vl[j + 1]
        s, t = (u - u0) / (u1 - u0), (v - v0) / (v1 - v0)
        r0, r1 = tab[i], tab[i + 1]
        return (1 - s) * ((1 - t) * r0[j] + t * r0[j + 1]) + s * ((1 - t) * r1[j] + t * r1[j + 1])

    def cdf(self, u, v):
        return self._bilinear(self._tl, u, v)

    def partial2(self, u, v):
        u, v = _clip01(u), _clip01(v)
        i, j = self._cell(self._ul, u), self._cell(self._vl, v)
        u0, u1 = self._ul[i], self._ul[i + 1]
        s = (u - u0) / (u1 - u0)
        dv = self._vl[j + 1] - self._vl[j]
        r0, r1 = self._tl[i], self._tl[i + 1]
        return ((1 - s) * (r0[j + 1] - r0[j]) + s * (r1[j + 1] - r1[j])) / dv

    def table_nodes(self):
        """Node grid on which C is exactly bilinear cell by cell."""
        return self.u_nodes, self.v_nodes

    def params(self):
        return {"u": self.u_nodes.tolist(), "v": self.v_nodes.tolist(), "table": self.table.tolist()}


def load_grid_copula(path) -> TabulatedCopula:
    """Read a CSV with rows ``u, v, C(u,v)`` covering a full rectilinear grid."""
    rows = []
    with open(Path(path), newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().lower() in ("u", "#"):
                continue
            rows.append(tuple(float(x) for x in rec[:3]))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    us = sorted({r[0] for r in rows})
    vs = sorted({r[1] for r in rows})
    table = np.full((len(us), len(vs)), np.nan)
    ui = {u: i for i, u in enumerate(us)}
    vi = {v: j for j, v in enumerate(vs)}
    for u, v, c in rows:
        table[ui[u], vi[v]] = c
    if np.isnan(table).any():
        raise ValueError(f"{path}: grid is incomplete")
    return TabulatedCopula(us, vs, table)


class Example1Copula(Copula):
    """Conditional law of V given U=u is Beta(a_u, a_u), a_u = 1 + (1/2 - u)^2,
    for u <= 1/2, and has density 2 - f_u(v) for u > 1/2.

    C and its v-derivative are tabulated on an ``n+1`` node grid (running
    Simpson integrals over u of beta CDFs / densities) and interpolated
    bilinearly; ``cdf_exact`` integrates directly for spot checks.
    """

    family = "example1"
    analytic_partial2 = True
    quadrature_backed = True

    def __init__(self, n: int = 200, refine: int = 20):
        if n % 2:
            raise ValueError("node count must be even so u = 1/2 is a node")
        self.n = n
        nodes = np.linspace(0.0, 1.0, n + 1)
        half = n // 2
        # running integrals over x in [0, 1/2]; u-node k sits at fine index refine*k
        xs = np.linspace(0.0, 0.5, half * refine + 1)
        shape = 1.0 + (0.5 - xs) ** 2
        A = shape[:, None]
        V = nodes[None, :]
        cdfs = reg_incomplete_beta_array(A, A, np.broadcast_to(V, (xs.size, nodes.size)))
        pdfs = beta_pdf(A, A, V)
        h = xs[1] - xs[0]
        run_c = cumulative_simpson(cdfs, h, axis=0)[:: refine // 2]
        run_p = cumulative_simpson(pdfs, h, axis=0)[:: refine // 2]
        assert run_c.shape[0] == half + 1
        tab_c = np.empty((n + 1, n + 1))
        tab_p = np.empty((n + 1, n + 1))
        tab_c[: half + 1] = run_c
        tab_p[: half + 1] = run_p
        for k in range(half + 1, n + 1):
            u = nodes[k]
            tab_c[k] = 2 * u * nodes - nodes + run_c[n - k]
            tab_p[k] = 2 * u - 1 + run_p[n - k]
        # exact boundary values
        tab_c[0, :] = 0.0
        tab_c[:, 0] = 0.0
        tab_c[-1, :] = nodes
        tab_c[:, -1] = nodes
        self._grid = TabulatedCopula(nodes, nodes, tab_c, tol=1e-10)
        self._p2 = tab_p.tolist()
        self.u_breaks = (0.5,)

    def cdf(self, u, v):
        return self._grid.cdf(u, v)

    def table_nodes(self):
        return self._grid.table_nodes()

    def partial2(self, u, v):
        """d/dv C(u, v) = int_0^u f_x(v) dx (u <= 1/2), 2u - 1 + int_0^{1-u} f_x(v) dx (u > 1/2).

        Fixed Gauss-Legendre in x; f_x(v) is smooth in x for every v in (0, 1),
        whereas interpolating in v would miss the v**((1/2 - x)**2) cusps.
        """
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return 1.0
        if v <= 0.0 or v >= 1.0:
            return _clip01(self._grid._bilinear(self._p2, u, v))
        upper = u > 0.5
        reach = 1.0 - u if upper else u
        xs = reach * _GL_NODES
        a = 1.0 + (0.5 - xs) ** 2
        dens = np.exp((a - 1.0) * (math.log(v) + math.log1p(-v)) - betaln(a, a))
        val = reach * float(_GL_WEIGHTS @ dens)
        return _clip01(2.0 * u - 1.0 + val if upper else val)

    @staticmethod
    def shape(u: float) -> float:
        return 1.0 + (0.5 - u) ** 2

    def conditional_cdf(self, x: float, v: float) -> float:
        """F_x(v) for x in (0, 1/2]."""
        a = self.shape(x)
        return reg_incomplete_beta(a, a, v)

    def cdf_exact(self, u: float, v: float, tol: Tolerance = Tolerance(1e-12)) -> float:
        if u <= 0.0 or v <= 0.0:
            return 0.0
        u, v = min(u, 1.0), min(v, 1.0)
        f = lambda x: self.conditional_cdf(x, v) if x > 0 else v  # noqa: E731
        if u <= 0.5:
            return integrate(f, 0.0, u, tol)
        return 2 * u * v - v + integrate(f, 0.0, 1.0 - u, tol)

    @property
    def has_density(self):
        return True

    def density(self, u, v):
        fu = float(beta_pdf(self.shape(u), self.shape(u), v))
        return fu if u <= 0.5 else 2.0 - fu

    def sample_uv(self, n, rng):
        u = rng.random(n)
        a = self.shape(u)
        v = rng.beta(a, a)
        upper = u > 0.5
        # density 2 - f_u on the upper half: rejection from the uniform proposal
        idx = np.flatnonzero(upper)
        while idx.size:
            cand = rng.random(idx.size)
            accept = rng.random(idx.size) * 2.0 <= 2.0 - beta_pdf(a[idx], a[idx], cand)
            v[idx[accept]] = cand[accept]
            idx = idx[~accept]
        return np.column_stack([u, v])


# ---------------------------------------------------------------------------
# constructors


def make_product() -> Copula:
    return Product()


def make_frechet_upper() -> Copula:
    return FrechetUpper()


def make_frechet_lower() -> Copula:
    return FrechetLower()


def make_fgm(theta: float) -> Copula:
    return FGM(theta)


def make_archimedean(generator: Generator) -> Copula:
    return Archimedean(generator)


def make_clayton(theta: float) -> Copula:
    return Archimedean(clayton_generator(theta))


def make_gumbel(theta: float) -> Copula:
    return Archimedean(gumbel_generator(theta))


_EX1_CACHE: dict = {}


def make_example1(n: int = 200) -> Example1Copula:
    # the tabulation is immutable, so one instance per resolution is shared
    if n not in _EX1_CACHE:
        _EX1_CACHE[n] = Example1Copula(n)
    return _EX1_CACHE[n]


def make_example2() -> Copula:
    return Example2Copula()


def make_example3(delta: float) -> Copula:
    return Example3Copula(delta)


def sample(c: Copula, n: int, seed: int) -> np.ndarray:
    """``n`` draws (u, v) from ``c``; deterministic for a given seed."""
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    rng = np.random.default_rng(seed)
    return c.sample_uv(n, rng)


def _param(params, name, pos=0):
    if isinstance(params, dict):
        return params[name]
    return params[pos]


def make_copula(family: str, params=None) -> Copula:
    """Build a copula from a family name and a parameter list or mapping."""
    params = [] if params is None else params
    fam = family.lower()
    if fam in ("product", "independence", "pi"):
        return make_product()
    if fam in ("frechet-upper", "m", "comonotone"):
        return make_frechet_upper()
    if fam in ("frechet-lower", "w", "countermonotone"):
        return make_frechet_lower()
    if fam == "fgm":
        return make_fgm(float(_param(params, "theta")))
    if fam == "clayton":
        return make_clayton(float(_param(params, "theta")))
    if fam == "gumbel":
        return make_gumbel(float(_param(params, "theta")))
    if fam == "example1":
        return make_example1()
    if fam == "example2":
        return make_example2()
    if fam == "example3":
        return make_example3(float(_param(params, "delta")))
    if fam == "piecewise":
        return PiecewiseUniformCopula(_param(params, "rects"))
    if fam in ("survival", "reflect"):
        base = _param(params, "base")
        inner = make_copula(base["family"], base.get("params"))
        return survival_copula(inner) if fam == "survival" else reflect_second(inner)
    if fam == "grid":
        if isinstance(params, dict) and "path" in params:
            return load_grid_copula(params["path"])
        if isinstance(params, (list, tuple)) and len(params) == 1 and isinstance(params[0], str):
            return load_grid_copula(params[0])
        return TabulatedCopula(params["u"], params["v"], params["table"])
    raise ValueError(f"unknown copula family {family!r}")


def invariant_violations(c: Copula, n: int = 101) -> dict:
    """Largest violations of the boundary, 2-increasing and Frechet-bound conditions."""
    nodes = np.linspace(0.0, 1.0, n)
    tab = np.array([[c.cdf(u, v) for v in nodes] for u in nodes])
    rect = tab[1:, 1:] - tab[1:, :-1] - tab[:-1, 1:] + tab[:-1, :-1]
    U, V = np.meshgrid(nodes, nodes, indexing="ij")
    return {
        "boundary": float(
            max(
                np.abs(tab[0, :]).max(),
                np.abs(tab[:, 0]).max(),
                np.abs(tab[-1, :] - nodes).max(),
                np.abs(tab[:, -1] - nodes).max(),
            )
        ),
        "two_increasing": float(max(0.0, -rect.min())),
        "frechet": float(max(0.0, (np.maximum(U + V - 1, 0) - tab).max(), (tab - np.minimum(U, V)).max())),
    }

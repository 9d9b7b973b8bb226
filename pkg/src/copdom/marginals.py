"""One-dimensional distributions, tail integrals and skew classification.

Every marginal exposes ``cdf``, ``survival``, ``quantile`` and (when it has
one) ``pdf``, together with its support and the locations of atoms and
density kinks, which quadrature uses as breakpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator, PPoly

from .numerics import (
    Grid,
    QuadratureError,
    Tolerance,
    integrate,
    invert_monotone,
    reg_incomplete_beta,
)

__all__ = [
    "Marginal",
    "Uniform",
    "Exponential",
    "Normal",
    "Beta",
    "Triangular",
    "PointMass",
    "Power",
    "Affine",
    "GridMarginal",
    "SkewVerdict",
    "DivergentTailError",
    "make_marginal",
    "mean",
    "stop_loss",
    "integrated_cdf",
    "classify_skew",
    "MARGINAL_FAMILIES",
]

TAIL_TOL = Tolerance(1e-10)
# infinite supports are truncated at these quantiles when a finite range is needed
TRUNCATION = 1e-10


class DivergentTailError(ArithmeticError):
    """A tail integral needed for a mean or stop-loss value does not converge."""


class Marginal:
    """Base class for univariate distributions.

    Subclasses implement ``cdf`` and ``support``; everything else has a
    generic fallback.
    """

    family: str = "abstract"

    def cdf(self, t: float) -> float:
        raise NotImplementedError

    def survival(self, t: float) -> float:
        return 1.0 - self.cdf(t)

    def cdf_left(self, t: float) -> float:
        """P(X < t); equals ``cdf`` except at atoms."""
        return self.cdf(t)

    @property
    def has_density(self) -> bool:
        return True

    def pdf(self, t: float) -> float:
        raise NotImplementedError(f"{self.family} marginal has no density")

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def atoms(self) -> tuple[float, ...]:
        return ()

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density jumps or has a kink."""
        lo, hi = self.support
        return tuple(p for p in (lo, hi) if math.isfinite(p))

    def params(self) -> dict:
        return {}

    def to_spec(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {p}")
        lo, hi = self.effective_range(min(p, 1 - p) * 0.5)
        return invert_monotone(self.cdf, p, lo, hi, Tolerance(1e-14))

    def effective_range(self, level: float = TRUNCATION) -> tuple[float, float]:
        """Support, with infinite ends replaced by the level / 1-level quantiles."""
        lo, hi = self.support
        if math.isinf(lo):
            lo = self._expand(-1.0, level)
        if math.isinf(hi):
            hi = self._expand(1.0, level)
        return lo, hi

    def _expand(self, direction: float, level: float) -> float:
        x = direction
        for _ in range(200):
            if direction < 0 and self.cdf(x) <= level:
                return x
            if direction > 0 and self.survival(x) <= level:
                return x
            x *= 2.0
        raise DivergentTailError(f"{self.family}: could not bracket the {level} tail")

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_spec() == other.to_spec()

    def __hash__(self):
        return hash(repr(self))


class Uniform(Marginal):
    family = "uniform"

    def __init__(self, a: float = 0.0, b: float = 1.0):
        if not a < b:
            raise ValueError(f"uniform needs a < b, got ({a}, {b})")
        self.a, self.b = float(a), float(b)

    def cdf(self, t):
        if t <= self.a:
            return 0.0
        if t >= self.b:
            return 1.0
        return (t - self.a) / (self.b - self.a)

    def survival(self, t):
        if t <= self.a:
            return 1.0
        if t >= self.b:
            return 0.0
        return (self.b - t) / (self.b - self.a)

    def pdf(self, t):
        return 1.0 / (self.b - self.a) if self.a <= t <= self.b else 0.0

    def quantile(self, p):
        return self.a + p * (self.b - self.a)

    @property
    def support(self):
        return self.a, self.b

    def params(self):
        return {"a": self.a, "b": self.b}


class Exponential(Marginal):
    family = "exponential"

    def __init__(self, rate: float = 1.0):
        if not rate > 0:
            raise ValueError(f"exponential rate must be positive, got {rate}")
        self.rate = float(rate)

    def cdf(self, t):
        return -math.expm1(-self.rate * t) if t > 0 else 0.0

    def survival(self, t):
        return math.exp(-self.rate * t) if t > 0 else 1.0

    def pdf(self, t):
        return self.rate * math.exp(-self.rate * t) if t >= 0 else 0.0

    def quantile(self, p):
        return -math.log1p(-p) / self.rate

    @property
    def support(self):
        return 0.0, math.inf

    def params(self):
        return {"rate": self.rate}


class Normal(Marginal):
    family = "normal"

    def __init__(self, mu: float = 0.0, sigma: float = 1.0):
        if not sigma > 0:
            raise ValueError(f"normal sigma must be positive, got {sigma}")
        self.mu, self.sigma = float(mu), float(sigma)
        self._dist = NormalDist(self.mu, self.sigma)

    def cdf(self, t):
        return 0.5 * math.erfc(-(t - self.mu) / (self.sigma * math.sqrt(2.0)))

    def survival(self, t):
        return 0.5 * math.erfc((t - self.mu) / (self.sigma * math.sqrt(2.0)))

    def pdf(self, t):
        return self._dist.pdf(t)

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {p}")
        return self._dist.inv_cdf(p)

    @property
    def support(self):
        return -math.inf, math.inf

    def breakpoints(self):
        return (self.mu,)

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


class Beta(Marginal):
    family = "beta"

    def __init__(self, a: float, b: float):
        if not (a > 0 and b > 0):
            raise ValueError(f"beta shapes must be positive, got ({a}, {b})")
        self.a, self.b = float(a), float(b)
        self._log_norm = math.lgamma(self.a + self.b) - math.lgamma(self.a) - math.lgamma(self.b)

    def cdf(self, t):
        if t <= 0:
            return 0.0
        if t >= 1:
            return 1.0
        return reg_incomplete_beta(self.a, self.b, t)

    def pdf(self, t):
        if not 0.0 < t < 1.0:
            return 0.0
        return math.exp(self._log_norm + (self.a - 1) * math.log(t) + (self.b - 1) * math.log1p(-t))

    @property
    def support(self):
        return 0.0, 1.0

    def params(self):
        return {"a": self.a, "b": self.b}


class Triangular(Marginal):
    family = "triangular"

    def __init__(self, lo: float, mode: float, hi: float):
        if not (lo <= mode <= hi and lo < hi):
            raise ValueError(f"triangular needs lo <= mode <= hi, lo < hi; got ({lo}, {mode}, {hi})")
        self.lo, self.mode, self.hi = float(lo), float(mode), float(hi)

    def cdf(self, t):
        lo, c, hi = self.lo, self.mode, self.hi
        if t <= lo:
            return 0.0
        if t >= hi:
            return 1.0
        if t <= c:
            return (t - lo) ** 2 / ((hi - lo) * (c - lo))
        return 1.0 - (hi - t) ** 2 / ((hi - lo) * (hi - c))

    def survival(self, t):
        lo, c, hi = self.lo, self.mode, self.hi
        if t <= lo:
            return 1.0
        if t >= hi:
            return 0.0
        if t > c:
            return (hi - t) ** 2 / ((hi - lo) * (hi - c))
        return 1.0 - (t - lo) ** 2 / ((hi - lo) * (c - lo))

    def pdf(self, t):
        lo, c, hi = self.lo, self.mode, self.hi
        if t < lo or t > hi:
            return 0.0
        if t < c or (t == c and c > lo):
            return 2.0 * (t - lo) / ((hi - lo) * (c - lo))
        return 2.0 * (hi - t) / ((hi - lo) * (hi - c))

    def quantile(self, p):
        lo, c, hi = self.lo, self.mode, self.hi
        split = (c - lo) / (hi - lo)
        if p <= split:
            return lo + math.sqrt(p * (hi - lo) * (c - lo))
        return hi - math.sqrt((1.0 - p) * (hi - lo) * (hi - c))

    @property
    def support(self):
        return self.lo, self.hi

    def breakpoints(self):
        return (self.lo, self.mode, self.hi)

    def params(self):
        return {"lo": self.lo, "mode": self.mode, "hi": self.hi}


class PointMass(Marginal):
    family = "point"

    def __init__(self, at: float = 0.0):
        self.at = float(at)

    def cdf(self, t):
        return 1.0 if t >= self.at else 0.0

    def cdf_left(self, t):
        return 1.0 if t > self.at else 0.0

    @property
    def has_density(self):
        return False

    def quantile(self, p):
        return self.at

    @property
    def support(self):
        return self.at, self.at

    def atoms(self):
        return (self.at,)

    def breakpoints(self):
        return (self.at,)

    def params(self):
        return {"at": self.at}


class Power(Marginal):
    """Law of U**k for U standard uniform; CDF t**(1/k) on [0, 1]."""

    family = "power"

    def __init__(self, k: float):
        if not k > 0:
            raise ValueError(f"power exponent must be positive, got {k}")
        self.k = float(k)

    def cdf(self, t):
        if t <= 0:
            return 0.0
        if t >= 1:
            return 1.0
        return t ** (1.0 / self.k)

    def pdf(self, t):
        if not 0.0 < t <= 1.0:
            return 0.0
        return t ** (1.0 / self.k - 1.0) / self.k

    def quantile(self, p):
        return p**self.k

    @property
    def support(self):
        return 0.0, 1.0

    def params(self):
        return {"k": self.k}


class Affine(Marginal):
    """Law of ``loc + scale * base`` with ``scale > 0``."""

    family = "affine"

    def __init__(self, base: Marginal, loc: float = 0.0, scale: float = 1.0):
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.base, self.loc, self.scale = base, float(loc), float(scale)

    def _std(self, t):
        return (t - self.loc) / self.scale

    def cdf(self, t):
        return self.base.cdf(self._std(t))

    def survival(self, t):
        return self.base.survival(self._std(t))

    def cdf_left(self, t):
        return self.base.cdf_left(self._std(t))

    @property
    def has_density(self):
        return self.base.has_density

    def pdf(self, t):
        return self.base.pdf(self._std(t)) / self.scale

    def quantile(self, p):
        return self.loc + self.scale * self.base.quantile(p)

    @property
    def support(self):
        lo, hi = self.base.support
        return self.loc + self.scale * lo, self.loc + self.scale * hi

    def atoms(self):
        return tuple(self.loc + self.scale * a for a in self.base.atoms())

    def breakpoints(self):
        return tuple(self.loc + self.scale * a for a in self.base.breakpoints())

    def params(self):
        return {"base": self.base.to_spec(), "loc": self.loc, "scale": self.scale}


def _monotone_cubic(x, f, interpolation):
    """Interpolant of nondecreasing data on one kink-free piece, as a PPoly."""
    if interpolation == "linear" or x.size == 2:
        return PPoly(np.vstack([np.zeros((2, x.size - 1)), np.diff(f) / np.diff(x), f[:-1]]), x)
    if interpolation == "spline" and x.size >= 4:
        cs = CubicSpline(x, f)
        # derivative 3a t^2 + 2b t + c on [0, h]: minimum at an end or the vertex
        a3, b2, c1 = 3 * cs.c[0], 2 * cs.c[1], cs.c[2]
        h = np.diff(x)
        d_end = a3 * h * h + b2 * h + c1
        lowest = np.minimum(c1, d_end)
        with np.errstate(divide="ignore", invalid="ignore"):
            tv = -b2 / (2 * a3)
            inside = (a3 > 0) & (tv > 0) & (tv < h)
            lowest = np.where(inside, np.minimum(lowest, c1 - b2 * b2 / (4 * a3)), lowest)
        # roundoff leaves slopes like -1e-17 where the true slope is zero
        if lowest.min() >= -1e-12 * max(np.abs(c1).max(), 1.0):
            return PPoly(cs.c, cs.x)
    p = PchipInterpolator(x, f)
    return PPoly(p.c, p.x)


def _piecewise_curve(ys, fs, interpolation, knots) -> PPoly:
    cut = [0] + [int(np.searchsorted(ys, k)) for k in knots] + [ys.size - 1]
    coefs, edges = [], [ys[:1]]
    for i, k in zip(cut, cut[1:]):
        piece = _monotone_cubic(ys[i : k + 1], fs[i : k + 1], interpolation)
        coefs.append(piece.c)
        edges.append(piece.x[1:])
    return PPoly(np.hstack(coefs), np.concatenate(edges), extrapolate=False)


class GridMarginal(Marginal):
    """Continuous law with a CDF interpolated through tabulated nodes.

    Below the first node the CDF is 0 and above the last it is 1, so the
    tabulated values at the ends must be 0 and 1 (within ``end_tol``).

    ``interpolation``:

    * ``"spline"`` (default): not-a-knot cubic splines fitted separately
      between consecutive ``knots`` (nodes where the law may have a kink);
      a piece whose spline would decrease falls back to monotone PCHIP.
    * ``"pchip"``: monotone cubic on each piece.
    * ``"linear"``: piecewise linear.
    """

    family = "grid"

    def __init__(
        self,
        points: Sequence[float],
        cdf_values: Sequence[float],
        end_tol: float = 1e-6,
        interpolation: str = "spline",
        knots: Sequence[float] = (),
    ):
        ys = np.asarray(points, dtype=float)
        fs = np.asarray(cdf_values, dtype=float)
        if ys.ndim != 1 or ys.shape != fs.shape or ys.size < 2:
            raise ValueError("grid marginal needs matching 1D arrays of length >= 2")
        if np.any(np.diff(ys) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(np.diff(fs) < 0):
            raise ValueError("tabulated CDF must be nondecreasing")
        if fs[0] > end_tol or fs[-1] < 1.0 - end_tol:
            raise ValueError(f"tabulated CDF must run from 0 to 1, got [{fs[0]}, {fs[-1]}]")
        if interpolation not in ("spline", "pchip", "linear"):
            raise ValueError(f"unknown interpolation {interpolation!r}")
        fs = fs.copy()
        fs[0], fs[-1] = 0.0, 1.0
        self.points = ys
        self.values = fs
        self.interpolation = interpolation
        self.knots = tuple(sorted(float(k) for k in knots if ys[0] < k < ys[-1] and k in set(ys.tolist())))
        self._curve = _piecewise_curve(ys, fs, interpolation, self.knots)
        self._deriv = self._curve.derivative()
        self._anti = self._curve.antiderivative()
        self._anti_hi = float(self._anti(ys[-1]))

    def cdf(self, t):
        ys = self.points
        if t <= ys[0]:
            return 0.0
        if t >= ys[-1]:
            return 1.0
        return min(1.0, max(0.0, float(self._curve(t))))

    def pdf(self, t):
        ys = self.points
        if t < ys[0] or t > ys[-1]:
            return 0.0
        return max(0.0, float(self._deriv(t)))

    @property
    def support(self):
        return float(self.points[0]), float(self.points[-1])

    def breakpoints(self):
        return tuple(float(p) for p in self.points)

    def params(self):
        out = {"points": self.points.tolist(), "cdf": self.values.tolist()}
        if self.interpolation != "spline":
            out["interpolation"] = self.interpolation
        if self.knots:
            out["knots"] = list(self.knots)
        return out

    def cdf_integral(self, t: float) -> float:
        """Exact integral of the interpolated CDF from the first node to ``t``."""
        lo, hi = self.support
        if t <= lo:
            return 0.0
        if t >= hi:
            return self._anti_hi + (t - hi)
        return float(self._anti(t))

    def stop_loss_exact(self, t: float) -> float:
        lo, hi = self.support
        if t >= hi:
            return 0.0
        if t <= lo:
            return (lo - t) + (hi - lo) - self._anti_hi
        return (hi - t) - (self._anti_hi - float(self._anti(t)))

    def stop_loss_nodes(self) -> np.ndarray:
        """Stop-loss values at the nodes."""
        hi = self.points[-1]
        anti = self._anti(self.points)
        out = (hi - self.points) - (self._anti_hi - anti)
        out[-1] = 0.0
        return np.maximum(out, 0.0)

    def integrated_cdf_nodes(self) -> np.ndarray:
        out = np.asarray(self._anti(self.points), dtype=float)
        out[0] = 0.0
        return out


MARGINAL_FAMILIES = {
    "uniform": Uniform,
    "exponential": Exponential,
    "normal": Normal,
    "beta": Beta,
    "triangular": Triangular,
    "point": PointMass,
    "power": Power,
}


def make_marginal(family: str, params=None) -> Marginal:
    """Build a marginal from a family name and a parameter list or mapping."""
    params = {} if params is None else params
    if family == "affine":
        p = dict(params)
        base = p.pop("base")
        base = make_marginal(base["family"], base.get("params"))
        return Affine(base, **p)
    if family == "grid":
        return GridMarginal(
            params["points"],
            params["cdf"],
            interpolation=params.get("interpolation", "spline"),
            knots=params.get("knots", ()),
        )
    try:
        cls = MARGINAL_FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown marginal family {family!r}") from None
    if isinstance(params, dict):
        return cls(**params)
    return cls(*params)


# ---------------------------------------------------------------------------
# tail integrals


def _check_tail(m: Marginal, side: float) -> None:
    # t * tail(t) must vanish for the tail integral to converge
    lo, hi = m.support
    if side > 0 and math.isinf(hi):
        for t in (1e6, 1e9):
            if t * m.survival(t) > 1e-3:
                raise DivergentTailError(f"upper tail of {m!r} is not integrable")
    if side < 0 and math.isinf(lo):
        for t in (-1e6, -1e9):
            if -t * m.cdf(t) > 1e-3:
                raise DivergentTailError(f"lower tail of {m!r} is not integrable")


def _integrate_on_support(f, m: Marginal, a, b, tol):
    brk = [p for p in (*m.breakpoints(), *m.atoms()) if a < p < b]
    try:
        return integrate(f, a, b, tol, brk)
    except QuadratureError as exc:
        raise DivergentTailError(f"tail integral of {m!r} did not converge: {exc}") from exc


def stop_loss(m: Marginal, t: float, tol: Tolerance = TAIL_TOL) -> float:
    """pi(t): integral of the survival function from t to infinity."""
    if isinstance(m, GridMarginal):
        return m.stop_loss_exact(t)
    _check_tail(m, 1.0)
    lo, hi = m.support
    if t >= hi:
        return 0.0
    flat = 0.0
    if t < lo:
        flat, t = lo - t, lo
    if lo == hi:
        return flat
    return flat + _integrate_on_support(m.survival, m, t, hi, tol)


def integrated_cdf(m: Marginal, t: float, tol: Tolerance = TAIL_TOL) -> float:
    """Integral of the CDF from minus infinity to t."""
    if isinstance(m, GridMarginal):
        return m.cdf_integral(t)
    _check_tail(m, -1.0)
    lo, hi = m.support
    if t <= lo:
        return 0.0
    flat = 0.0
    if t > hi:
        flat, t = t - hi, hi
    if lo == hi:
        return flat
    return flat + _integrate_on_support(m.cdf, m, lo, t, tol)


def mean(m: Marginal, tol: Tolerance = TAIL_TOL) -> float:
    """Mean as the difference of the positive and negative tail integrals."""
    try:
        mu_plus = stop_loss(m, 0.0, tol)
    except DivergentTailError as exc:
        raise DivergentTailError(f"positive part diverges: {exc}") from exc
    try:
        mu_minus = integrated_cdf(m, 0.0, tol)
    except DivergentTailError as exc:
        raise DivergentTailError(f"negative part diverges: {exc}") from exc
    return mu_plus - mu_minus


# ---------------------------------------------------------------------------
# skew classification


@dataclass(frozen=True)
class SkewVerdict:
    direction: str  # symmetric | right | left | none
    center: float
    max_violation: float
    witness: float | None = None
    min_gap: float = 0.0
    max_gap: float = 0.0
    tolerance: float = 0.0

    @property
    def is_right(self) -> bool:
        return self.direction in ("symmetric", "right")

    @property
    def is_left(self) -> bool:
        return self.direction in ("symmetric", "left")

    @property
    def is_symmetric(self) -> bool:
        return self.direction == "symmetric"

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "center": self.center,
            "max_violation": self.max_violation,
            "witness": self.witness,
            "min_gap": self.min_gap,
            "max_gap": self.max_gap,
            "tolerance": self.tolerance,
        }


def default_skew_grid(m: Marginal, center: float, n: int = 401) -> Grid:
    lo, hi = m.effective_range()
    reach = max(hi - center, center - lo, 0.0)
    if reach == 0.0:
        reach = 1.0
    return Grid.closed_interval(0.0, reach * 1.05, n)


def classify_skew(
    m: Marginal, center: float = 0.0, grid: Grid | None = None, tol: float = 1e-9
) -> SkewVerdict:
    """Compare the left and right tails of ``m - center`` on a grid of z >= 0.

    The gap 1 - G(c+z) - G(c-z) is nonnegative for right skew and
    nonpositive for left skew; points where either side sits on an atom
    are skipped.
    """
    grid = grid or default_skew_grid(m, center)
    atoms = m.atoms()
    min_gap, max_gap = math.inf, -math.inf
    argmin = argmax = None
    for z in grid:
        if z < 0:
            continue
        if any(abs(center + z - a) <= 1e-12 or abs(center - z - a) <= 1e-12 for a in atoms):
            continue
        gap = m.survival(center + z) - m.cdf(center - z)
        if gap < min_gap:
            min_gap, argmin = gap, z
        if gap > max_gap:
            max_gap, argmax = gap, z
    if argmin is None:
        return SkewVerdict("symmetric", center, 0.0, None, 0.0, 0.0, tol)
    right_ok = min_gap >= -tol
    left_ok = max_gap <= tol
    if right_ok and left_ok:
        direction = "symmetric"
        violation, witness = max(-min_gap, max_gap), argmin if -min_gap >= max_gap else argmax
    elif right_ok:
        direction, violation, witness = "right", max(0.0, -min_gap), argmin
    elif left_ok:
        direction, violation, witness = "left", max(0.0, max_gap), argmax
    else:
        direction = "none"
        violation, witness = min(-min_gap, max_gap), argmin if -min_gap <= max_gap else argmax
    return SkewVerdict(direction, center, violation, witness, min_gap, max_gap, tol)

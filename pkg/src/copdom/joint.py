"""A copula coupled with two marginals.

Conditional expectations of Z given upper or lower X-sets, the distribution
of X + Z (C-convolution) and joint sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .copulas import Copula, partial2, sample, survival_copula
from .marginals import Affine, GridMarginal, Marginal, PointMass, TRUNCATION
from .numerics import Grid, Tolerance, integrate

__all__ = [
    "JointModel",
    "ConditioningOnNullError",
    "UnsupportedModelError",
    "InconsistentTabulationError",
    "cond_mean_z_given_x_gt",
    "cond_mean_z_given_x_le",
    "cond_stop_loss_z_given_x_gt",
    "total_expectation_gap",
    "sum_survival",
    "sum_distribution",
    "default_sum_grid",
    "sum_kinks",
    "sample_joint",
]

JOINT_TOL = Tolerance(1e-9)


class ConditioningOnNullError(ValueError):
    """The conditioning event has (numerically) zero probability."""


class UnsupportedModelError(ValueError):
    """The requested operation needs structure the model does not have."""


class InconsistentTabulationError(ArithmeticError):
    """Monotone repair of a tabulated distribution exceeded its budget."""


@dataclass(frozen=True)
class JointModel:
    copula: Copula
    marginal_x: Marginal
    marginal_z: Marginal

    def joint_cdf(self, x: float, z: float) -> float:
        return self.copula.cdf(self.marginal_x.cdf(x), self.marginal_z.cdf(z))

    def joint_survival(self, x: float, z: float) -> float:
        """P(X > x, Z > z) through the survival copula."""
        u, v = self.marginal_x.survival(x), self.marginal_z.survival(z)
        return u + v - 1.0 + self.copula.cdf(1.0 - u, 1.0 - v)

    def z_breakpoints(self) -> list[float]:
        """Z-values where conditional laws of Z may have kinks or jumps."""
        mz = self.marginal_z
        pts = list(mz.breakpoints()) + list(mz.atoms())
        for b in self.copula.v_breaks:
            if 0.0 < b < 1.0:
                pts.append(mz.quantile(b))
        return pts

    def x_breakpoints(self) -> list[float]:
        mx = self.marginal_x
        pts = list(mx.breakpoints()) + list(mx.atoms())
        for b in self.copula.u_breaks:
            if 0.0 < b < 1.0:
                pts.append(mx.quantile(b))
        return pts

    def to_spec(self) -> dict:
        return {
            "copula": self.copula.to_spec(),
            "marginal_x": self.marginal_x.to_spec(),
            "marginal_z": self.marginal_z.to_spec(),
        }


def _mean_from_survival(surv, lo, hi, breaks, tol):
    """Mean of a law on [lo, hi] from its survival function.

    Positive part minus negative part, with the constant stretches outside
    the support added exactly.
    """
    pos = 0.0
    if hi > 0.0:
        start = max(lo, 0.0)
        pos = start + integrate(surv, start, hi, tol, breaks)
    neg = 0.0
    if lo < 0.0:
        stop = min(hi, 0.0)
        neg = -stop + integrate(lambda z: 1.0 - surv(z), lo, stop, tol, breaks)
    return pos - neg


def _null_check(p, tol, what):
    if p <= tol.abs_tol:
        raise ConditioningOnNullError(f"P({what}) = {p!r} is too small to condition on")


def cond_mean_z_given_x_gt(j: JointModel, x: float, tol: Tolerance = JOINT_TOL) -> float:
    """E(Z | X > x) from the survival copula, P(Z>z | X>x) = Chat(Fbar(x), Gbar(z)) / Fbar(x)."""
    p = j.marginal_x.survival(x)
    _null_check(p, tol, f"X > {x}")
    mz, cop = j.marginal_z, j.copula
    q = 1.0 - p

    def surv(z):
        g = mz.survival(z)
        return (p + g - 1.0 + cop.cdf(q, 1.0 - g)) / p

    lo, hi = mz.support
    return _mean_from_survival(surv, lo, hi, j.z_breakpoints(), tol)


def cond_mean_z_given_x_le(j: JointModel, x: float, tol: Tolerance = JOINT_TOL) -> float:
    """E(Z | X <= x) with P(Z <= z | X <= x) = C(F(x), G(z)) / F(x)."""
    p = j.marginal_x.cdf(x)
    _null_check(p, tol, f"X <= {x}")
    mz, cop = j.marginal_z, j.copula

    def surv(z):
        return 1.0 - cop.cdf(p, mz.cdf(z)) / p

    lo, hi = mz.support
    return _mean_from_survival(surv, lo, hi, j.z_breakpoints(), tol)


def cond_stop_loss_z_given_x_gt(j: JointModel, x: float, t: float, tol: Tolerance = JOINT_TOL) -> float:
    """Stop-loss value at ``t`` of the law of Z given X > x."""
    p = j.marginal_x.survival(x)
    _null_check(p, tol, f"X > {x}")
    mz, cop = j.marginal_z, j.copula
    q = 1.0 - p

    def surv(z):
        g = mz.survival(z)
        return (p + g - 1.0 + cop.cdf(q, 1.0 - g)) / p

    lo, hi = mz.support
    if t >= hi:
        return 0.0
    flat = 0.0
    if t < lo:
        flat, t = lo - t, lo
    return flat + integrate(surv, t, hi, tol, j.z_breakpoints())


def total_expectation_gap(j: JointModel, x: float, tol: Tolerance = JOINT_TOL) -> float:
    """F(x) E(Z|X<=x) + Fbar(x) E(Z|X>x) - E(Z); zero up to quadrature error."""
    from .marginals import mean

    f = j.marginal_x.cdf(x)
    total = 0.0
    if f > tol.abs_tol:
        total += f * cond_mean_z_given_x_le(j, x, tol)
    if 1.0 - f > tol.abs_tol:
        total += (1.0 - f) * cond_mean_z_given_x_gt(j, x, tol)
    return total - mean(j.marginal_z, tol)


# ---------------------------------------------------------------------------
# C-convolution


def _degenerate_shift(mz: Marginal):
    if isinstance(mz, PointMass):
        return mz.at
    lo, hi = mz.support
    if lo == hi:
        return lo
    return None


def sum_survival(j: JointModel, y: float, tol: Tolerance = JOINT_TOL) -> float:
    """P(X + Z > y) = integral of g(z) d2Chat(Fbar(y - z), Gbar(z)) dz."""
    mx, mz = j.marginal_x, j.marginal_z
    shift = _degenerate_shift(mz)
    if shift is not None:
        return mx.survival(y - shift)
    if not mz.has_density:
        raise UnsupportedModelError(f"C-convolution needs a density for Z; {mz!r} has none")
    lo, hi = mz.support
    # P(X > y - sup Z) >= P(X + Z > y) >= P(X > y - inf Z); settle within tolerance
    upper = mx.survival(y - hi) if math.isfinite(hi) else 1.0
    lower = mx.survival(y - lo) if math.isfinite(lo) else 0.0
    if upper - lower <= tol.abs_tol:
        return 0.5 * (upper + lower)
    hat = survival_copula(j.copula)

    def integrand(z):
        g = mz.pdf(z)
        if g == 0.0:
            return 0.0
        return g * partial2(hat, mx.survival(y - z), mz.survival(z))

    breaks = j.z_breakpoints()
    breaks += [y - b for b in j.x_breakpoints()]
    val = integrate(integrand, lo, hi, tol, breaks)
    return min(1.0, max(0.0, val))


def default_sum_grid(j: JointModel, n: int = 401) -> Grid:
    """Equispaced grid over the (truncated) support of X + Z.

    Sums of X and Z breakpoints are added as extra nodes so interpolation
    never straddles a kink of the law of X + Z.
    """
    xl, xh = j.marginal_x.effective_range(TRUNCATION)
    zl, zh = j.marginal_z.effective_range(TRUNCATION)
    lo, hi = xl + zl, xh + zh
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    base = np.linspace(lo, hi, n)
    step = (hi - lo) / (n - 1)
    kinks = [k for k in sum_kinks(j) if lo < k < hi]
    if kinks:
        near = np.zeros(n, dtype=bool)
        for k in kinks:
            near |= np.abs(base - k) < 0.25 * step
        near[[0, -1]] = False
        base = np.union1d(base[~near], kinks)
    return Grid.from_points(base)


def _repair(raw, budget):
    clipped = np.clip(raw, 0.0, 1.0)
    repaired = isotonic_regression(clipped, increasing=False).x
    max_repair = float(np.max(np.abs(repaired - raw)))
    if max_repair > budget:
        raise InconsistentTabulationError(
            f"monotone repair of {max_repair:.3g} exceeds the budget {budget:.3g}"
        )
    return repaired, max_repair


def sum_kinks(j: JointModel) -> list[float]:
    """Points where the law of X + Z may have kinks: sums of X and Z breakpoints."""
    kinks = {a + b for a in j.x_breakpoints() for b in j.z_breakpoints()}
    return sorted(k for k in kinks if math.isfinite(k))


def sum_distribution(
    j: JointModel,
    y_grid: Grid | None = None,
    tol: Tolerance = JOINT_TOL,
    repair_budget: float | None = None,
) -> Marginal:
    """Tabulated law of X + Z on ``y_grid`` as a grid-defined marginal.

    Survival values are clipped to [0, 1] and made nonincreasing with a
    pool-adjacent-violators pass; the largest repair is stored on the result
    as ``max_repair``. A repair larger than ``repair_budget`` (default ten
    times the quadrature tolerance) raises.
    """
    shift = _degenerate_shift(j.marginal_z)
    if shift is not None:
        return j.marginal_x if shift == 0.0 else Affine(j.marginal_x, loc=shift)
    grid = y_grid or default_sum_grid(j)
    ys = grid.as_array()
    raw = np.array([sum_survival(j, float(y), tol) for y in ys])
    budget = 10.0 * tol.abs_tol if repair_budget is None else repair_budget
    repaired, max_repair = _repair(raw, budget)
    out = GridMarginal(ys, 1.0 - repaired, end_tol=max(1e-6, 10 * budget), knots=sum_kinks(j))
    out.max_repair = max_repair
    out.raw_survival = raw
    return out


def sample_joint(j: JointModel, n: int, seed: int) -> np.ndarray:
    """``n`` draws (x, z): a copula sample pushed through the marginal quantiles."""
    uv = sample(j.copula, n, seed)
    # keep levels strictly inside (0, 1) for quantile functions
    uv = np.clip(uv, 1e-16, 1.0 - 1e-16)
    qx = np.vectorize(j.marginal_x.quantile, otypes=[float])
    qz = np.vectorize(j.marginal_z.quantile, otypes=[float])
    return np.column_stack([qx(uv[:, 0]), qz(uv[:, 1])])

"""Stochastic-order comparisons between two distributions on a shared grid.

ST compares survival functions, ICX compares stop-loss transforms
pi(t) = int_t^inf Fbar, ICV compares integrated CDFs, and CX is ICX plus
equal means. All verdicts are grid certificates with a witness.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .marginals import GridMarginal, Marginal, TRUNCATION, integrated_cdf, mean, stop_loss
from .numerics import QUAD_TOL, Grid, Tolerance, integrate

__all__ = [
    "ORDER_SLACK",
    "OrderVerdict",
    "Comparison",
    "default_t_grid",
    "st_leq",
    "icx_leq",
    "icv_leq",
    "cx_leq",
]

ORDER_SLACK = 1e-6
# means of tabulated sums carry accumulated quadrature error
CX_MEAN_TOL = 10 * QUAD_TOL.abs_tol


@dataclass(frozen=True)
class OrderVerdict:
    order: str
    holds: bool
    min_slack: float
    witness: float
    grid: int
    tolerance: float
    mean_gap: float | None = None
    mean_tol: float | None = None

    def to_dict(self) -> dict:
        out = {
            "order": self.order,
            "holds": self.holds,
            "min_slack": self.min_slack,
            "witness": self.witness,
            "grid": self.grid,
            "tolerance": self.tolerance,
        }
        if self.mean_gap is not None:
            out["mean_gap"] = self.mean_gap
            out["mean_tol"] = self.mean_tol
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "OrderVerdict":
        return cls(
            order=d["order"],
            holds=bool(d["holds"]),
            min_slack=float(d["min_slack"]),
            witness=float(d["witness"]),
            grid=int(d["grid"]),
            tolerance=float(d["tolerance"]),
            mean_gap=None if d.get("mean_gap") is None else float(d["mean_gap"]),
            mean_tol=None if d.get("mean_tol") is None else float(d["mean_tol"]),
        )


def default_t_grid(a: Marginal, b: Marginal, n: int = 401) -> Grid:
    """Equispaced grid over the union of the two effective ranges."""
    al, ah = a.effective_range(TRUNCATION)
    bl, bh = b.effective_range(TRUNCATION)
    lo, hi = min(al, bl), max(ah, bh)
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    return Grid.closed_interval(lo, hi, n)


def _stop_loss_curve(m: Marginal, ts: np.ndarray, tol: Tolerance) -> np.ndarray:
    """pi(t) on an increasing grid, accumulated right to left segment by segment."""
    if isinstance(m, GridMarginal):
        return np.array([m.stop_loss_exact(float(t)) for t in ts])
    out = np.empty_like(ts)
    out[-1] = stop_loss(m, float(ts[-1]), tol)
    seg_tol = tol.scaled(1.0 / len(ts))
    breaks = list(m.breakpoints()) + list(m.atoms())
    lo, hi = m.support
    for k in range(len(ts) - 2, -1, -1):
        a, b = float(ts[k]), float(ts[k + 1])
        piece = _flat_aware(m.survival, a, b, lo, hi, 1.0, 0.0, seg_tol, breaks)
        out[k] = out[k + 1] + piece
    return out


def _integrated_cdf_curve(m: Marginal, ts: np.ndarray, tol: Tolerance) -> np.ndarray:
    if isinstance(m, GridMarginal):
        return np.array([m.cdf_integral(float(t)) for t in ts])
    out = np.empty_like(ts)
    out[0] = integrated_cdf(m, float(ts[0]), tol)
    seg_tol = tol.scaled(1.0 / len(ts))
    breaks = list(m.breakpoints()) + list(m.atoms())
    lo, hi = m.support
    for k in range(1, len(ts)):
        a, b = float(ts[k - 1]), float(ts[k])
        out[k] = out[k - 1] + _flat_aware(m.cdf, a, b, lo, hi, 0.0, 1.0, seg_tol, breaks)
    return out


def _flat_aware(f, a, b, lo, hi, below, above, tol, breaks):
    """Integral of f on [a, b] using its known constant values outside [lo, hi]."""
    total = 0.0
    if a < lo:
        stop = min(b, lo)
        total += below * (stop - a)
        a = stop
    if b > hi:
        start = max(a, hi)
        total += above * (b - start)
        b = start
    if b > a:
        total += integrate(f, a, b, tol, breaks)
    return total


class Comparison:
    """Two marginals with their curves tabulated once on a shared t grid."""

    def __init__(self, a: Marginal, b: Marginal, t_grid: Grid | None = None, quad_tol: Tolerance = Tolerance(1e-10)):
        self.a, self.b = a, b
        self.grid = t_grid if t_grid is not None else default_t_grid(a, b)
        self.ts = self.grid.as_array()
        self.quad_tol = quad_tol
        self.survival_a = np.array([a.survival(float(t)) for t in self.ts])
        self.survival_b = np.array([b.survival(float(t)) for t in self.ts])
        self._pi = None
        self._icdf = None
        self._means = None

    @property
    def stop_loss(self) -> tuple[np.ndarray, np.ndarray]:
        if self._pi is None:
            self._pi = (
                _stop_loss_curve(self.a, self.ts, self.quad_tol),
                _stop_loss_curve(self.b, self.ts, self.quad_tol),
            )
        return self._pi

    @property
    def integrated_cdf(self) -> tuple[np.ndarray, np.ndarray]:
        if self._icdf is None:
            self._icdf = (
                _integrated_cdf_curve(self.a, self.ts, self.quad_tol),
                _integrated_cdf_curve(self.b, self.ts, self.quad_tol),
            )
        return self._icdf

    @property
    def means(self) -> tuple[float, float]:
        if self._means is None:
            self._means = (mean(self.a, self.quad_tol), mean(self.b, self.quad_tol))
        return self._means

    def _verdict(self, order, slack, tol) -> OrderVerdict:
        k = int(np.argmin(slack))
        lo = float(slack[k])
        return OrderVerdict(order, lo >= -tol, lo, float(self.ts[k]), len(self.ts), tol)

    def st(self, tol: float = ORDER_SLACK) -> OrderVerdict:
        return self._verdict("ST", self.survival_b - self.survival_a, tol)

    def icx(self, tol: float = ORDER_SLACK) -> OrderVerdict:
        pa, pb = self.stop_loss
        return self._verdict("ICX", pb - pa, tol)

    def icv(self, tol: float = ORDER_SLACK) -> OrderVerdict:
        ia, ib = self.integrated_cdf
        return self._verdict("ICV", ia - ib, tol)

    def cx(self, tol: float = ORDER_SLACK, mean_tol: float = CX_MEAN_TOL) -> OrderVerdict:
        v = self.icx(tol)
        ma, mb = self.means
        gap = mb - ma
        holds = v.holds and abs(gap) <= mean_tol
        return OrderVerdict("CX", holds, v.min_slack, v.witness, v.grid, tol, gap, mean_tol)

    def write_curves_csv(self, path, kind: str = "stop_loss") -> Path:
        """Write ``t, <kind>_a, <kind>_b`` rows; kind is stop_loss, integrated_cdf or survival."""
        if kind == "stop_loss":
            ca, cb = self.stop_loss
        elif kind == "integrated_cdf":
            ca, cb = self.integrated_cdf
        elif kind == "survival":
            ca, cb = self.survival_a, self.survival_b
        else:
            raise ValueError(f"unknown curve kind {kind!r}")
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", f"{kind}_a", f"{kind}_b"])
            for row in zip(self.ts, ca, cb):
                w.writerow([repr(float(x)) for x in row])
        tmp.replace(path)
        return path


def st_leq(a: Marginal, b: Marginal, t_grid: Grid | None = None, tol: float = ORDER_SLACK) -> OrderVerdict:
    """a <=_ST b: Fbar_a <= Fbar_b on the grid."""
    return Comparison(a, b, t_grid).st(tol)


def icx_leq(a: Marginal, b: Marginal, t_grid: Grid | None = None, tol: float = ORDER_SLACK) -> OrderVerdict:
    """a <=_ICX b: stop-loss of a below stop-loss of b."""
    return Comparison(a, b, t_grid).icx(tol)


def icv_leq(a: Marginal, b: Marginal, t_grid: Grid | None = None, tol: float = ORDER_SLACK) -> OrderVerdict:
    """a <=_ICV b: integrated CDF of a above that of b."""
    return Comparison(a, b, t_grid).icv(tol)


def cx_leq(
    a: Marginal,
    b: Marginal,
    t_grid: Grid | None = None,
    tol: float = ORDER_SLACK,
    mean_tol: float = CX_MEAN_TOL,
) -> OrderVerdict:
    """a <=_CX b: ICX and equal means."""
    return Comparison(a, b, t_grid).cx(tol, mean_tol)

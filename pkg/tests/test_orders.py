import csv
import json

import numpy as np
import pytest

from copdom.marginals import Exponential, GridMarginal, Normal, PointMass, Uniform
from copdom.numerics import Grid
from copdom.orders import Comparison, OrderVerdict, cx_leq, icv_leq, icx_leq, st_leq


@pytest.mark.parametrize(
    "a, b, holds",
    [
        (Uniform(0, 1), Uniform(0.5, 1.5), True),
        (Uniform(0.5, 1.5), Uniform(0, 1), False),
        (Exponential(2.0), Exponential(1.0), True),
        (Normal(0, 1), Normal(0, 2), False),
    ],
)
def test_st(a, b, holds):
    assert st_leq(a, b).holds is holds


def test_mean_preserving_spread_is_cx_but_not_st():
    a, b = Uniform(-0.5, 0.5), Uniform(-1, 1)
    assert cx_leq(a, b).holds
    assert not st_leq(a, b).holds
    assert not cx_leq(b, a).holds


def test_normal_variances_are_convex_ordered():
    assert cx_leq(Normal(0, 1), Normal(0, 2)).holds
    assert icx_leq(Normal(0, 1), Normal(0.1, 2)).holds


def test_cx_requires_equal_means():
    v = cx_leq(Normal(0, 1), Normal(0.01, 2))
    assert not v.holds
    assert v.mean_gap == pytest.approx(0.01, abs=1e-9)


def test_icv_is_the_mirror_of_icx():
    a, b = Normal(0, 2), Normal(0, 1)
    assert icv_leq(a, b).holds
    assert not icv_leq(b, a).holds


def test_point_mass_is_below_its_spread_in_cx():
    assert cx_leq(PointMass(0.5), Uniform(0, 1)).holds


def test_stop_loss_curve_oracle():
    # uniform(0,1): pi(t) = (1 - t)^2 / 2 on [0, 1]; t below 0 adds the flat stretch
    grid = Grid.closed_interval(-0.5, 1.5, 41)
    cmp = Comparison(Uniform(0, 1), Exponential(1.0), grid)
    pa, pb = cmp.stop_loss
    ts = grid.as_array()
    expected_a = np.where(ts < 0, 0.5 - ts, np.where(ts > 1, 0.0, (1 - ts) ** 2 / 2))
    assert np.allclose(pa, expected_a, atol=1e-10)
    assert np.allclose(pb, np.where(ts < 0, 1 - ts, np.exp(-np.maximum(ts, 0))), atol=1e-9)


def test_integrated_cdf_curve_oracle():
    grid = Grid.closed_interval(-0.5, 1.5, 41)
    ia, _ = Comparison(Uniform(0, 1), Uniform(0, 1), grid).integrated_cdf
    ts = grid.as_array()
    expected = np.where(ts < 0, 0.0, np.where(ts > 1, ts - 0.5, ts**2 / 2))
    assert np.allclose(ia, expected, atol=1e-10)


def test_witness_is_argmin():
    v = st_leq(Uniform(0.5, 1.5), Uniform(0, 1), Grid.closed_interval(0, 1.5, 31))
    assert v.min_slack == pytest.approx(-0.5)
    assert 0.5 <= v.witness <= 1.0


def test_grid_marginal_uses_exact_tail_integrals():
    ys = np.linspace(0.0, 1.0, 11)
    g = GridMarginal(ys, ys)
    v = cx_leq(g, Uniform(0, 1))
    assert v.holds and abs(v.min_slack) <= 1e-12 and abs(v.mean_gap) <= 1e-12


def test_verdict_round_trip_and_curves_csv(tmp_path):
    cmp = Comparison(Uniform(-0.5, 0.5), Uniform(-1, 1))
    v = cmp.cx()
    assert OrderVerdict.from_dict(json.loads(json.dumps(v.to_dict()))) == v
    path = cmp.write_curves_csv(tmp_path / "c.csv", "stop_loss")
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "stop_loss_a", "stop_loss_b"]
    assert len(rows) == 402
    assert float(rows[1][0]) == cmp.ts[0]
    with pytest.raises(ValueError):
        cmp.write_curves_csv(tmp_path / "d.csv", "density")

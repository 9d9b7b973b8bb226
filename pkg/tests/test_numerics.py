import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from copdom.numerics import (
    Grid,
    QuadratureError,
    Tolerance,
    beta_pdf,
    cumulative_simpson,
    integrate,
    integrate2d,
    invert_monotone,
    reg_incomplete_beta,
    reg_incomplete_beta_array,
)


@pytest.mark.parametrize(
    "f, a, b, exact",
    [
        (math.sin, 0.0, math.pi, 2.0),
        (lambda x: x**3, -1.0, 2.0, 3.75),
        (math.exp, 0.0, 1.0, math.e - 1.0),
        (lambda x: math.sqrt(x), 0.0, 1.0, 2.0 / 3.0),
        (lambda x: 1.0 / (1.0 + x * x), -math.inf, math.inf, math.pi),
        (lambda x: math.exp(-x), 0.0, math.inf, 1.0),
        (lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), -math.inf, 0.0, 0.5),
    ],
)
def test_integrate_known_integrals(f, a, b, exact):
    assert integrate(f, a, b, Tolerance(1e-10)) == pytest.approx(exact, abs=1e-8)


def test_integrate_reversed_and_empty():
    assert integrate(math.cos, 1.0, 0.0) == pytest.approx(-math.sin(1.0), abs=1e-9)
    assert integrate(math.cos, 0.3, 0.3) == 0.0


def test_breakpoints_align_jumps():
    step = lambda x: 1.0 if x > 0.3 else 0.0
    assert integrate(step, 0.0, 1.0, Tolerance(1e-12), [0.3]) == pytest.approx(0.7, abs=1e-12)


def test_nan_limits_rejected():
    with pytest.raises(ValueError):
        integrate(math.sin, math.nan, 1.0)


def test_subdivision_budget_is_enforced():
    with pytest.raises(QuadratureError):
        integrate(lambda x: math.sin(1.0 / x) if x > 0 else 0.0, 0.0, 1.0, Tolerance(1e-14, max_subdivisions=50))


def test_integrate2d_polynomial():
    val = integrate2d(lambda x, y: x * y * y, Tolerance(1e-12), (0.0, 2.0), (0.0, 3.0))
    assert val == pytest.approx(2.0 * 9.0, abs=1e-9)


@pytest.mark.parametrize("bad", [0.0, -1e-3])
def test_tolerance_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        Tolerance(bad)


def test_grid_constructors():
    g = Grid.open_unit(5)
    assert g.resolution == 5
    assert all(0.0 < p < 1.0 for p in g)
    c = Grid.closed_interval(-1.0, 1.0, 3)
    assert np.allclose(c.as_array(), [-1.0, 0.0, 1.0])
    assert list(Grid.from_points([0.1, 0.2, 0.3])) == [0.1, 0.2, 0.3]
    with pytest.raises(ValueError):
        Grid.from_points([0.3, 0.1])


@given(st.floats(0.05, 0.95))
def test_invert_monotone_matches_quantile(p):
    x = invert_monotone(lambda t: t * t, p, 0.0, 1.0, Tolerance(1e-14))
    assert x == pytest.approx(math.sqrt(p), abs=1e-12)


def test_invert_monotone_flat_segment_takes_leftmost():
    g = lambda t: min(t, 0.5) if t < 0.8 else t - 0.3
    assert invert_monotone(g, 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_invert_monotone_target_out_of_range():
    with pytest.raises(ValueError):
        invert_monotone(lambda t: t, 2.0, 0.0, 1.0)


@settings(max_examples=60)
@given(st.floats(0.1, 20.0), st.floats(0.1, 20.0), st.floats(0.0, 1.0))
def test_incomplete_beta_against_scipy(a, b, x):
    assert reg_incomplete_beta(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_incomplete_beta_array_and_pdf():
    xs = np.linspace(0.0, 1.0, 11)
    a = np.full_like(xs, 1.7)
    assert np.allclose(reg_incomplete_beta_array(a, 2.3, xs), special.betainc(1.7, 2.3, xs), atol=1e-12)
    inner = xs[1:-1]
    assert np.allclose(beta_pdf(1.7, 2.3, inner), stats.beta(1.7, 2.3).pdf(inner), rtol=1e-10)


def test_cumulative_simpson_is_exact_for_cubics():
    x = np.linspace(0.0, 2.0, 21)
    out = cumulative_simpson(x**3, x[1] - x[0])
    assert out[0] == 0.0
    assert np.allclose(out, x[::2] ** 4 / 4.0, atol=1e-12)

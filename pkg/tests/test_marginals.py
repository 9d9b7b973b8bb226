import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from copdom.marginals import (
    Affine,
    Beta,
    Exponential,
    GridMarginal,
    Normal,
    PointMass,
    Power,
    Triangular,
    Uniform,
    classify_skew,
    integrated_cdf,
    make_marginal,
    mean,
    stop_loss,
)
from copdom.numerics import Tolerance

CASES = [
    (Uniform(-1.0, 2.0), stats.uniform(-1.0, 3.0)),
    (Exponential(2.0), stats.expon(scale=0.5)),
    (Normal(0.5, 2.0), stats.norm(0.5, 2.0)),
    (Beta(2.0, 3.0), stats.beta(2.0, 3.0)),
    (Triangular(-1.0, 0.0, 2.0), stats.triang(1.0 / 3.0, loc=-1.0, scale=3.0)),
    (Affine(Exponential(1.0), loc=-1.0, scale=2.0), stats.expon(loc=-1.0, scale=2.0)),
]


@pytest.mark.parametrize("m, ref", CASES, ids=lambda x: type(x).__name__)
def test_cdf_pdf_quantile_against_scipy(m, ref):
    lo, hi = ref.ppf(0.001), ref.ppf(0.999)
    for t in np.linspace(lo, hi, 23):
        assert m.cdf(t) == pytest.approx(ref.cdf(t), abs=1e-12)
        assert m.survival(t) == pytest.approx(ref.sf(t), abs=1e-12)
        assert m.pdf(t) == pytest.approx(ref.pdf(t), abs=1e-10)
    for p in (0.01, 0.3, 0.5, 0.9):
        assert m.quantile(p) == pytest.approx(ref.ppf(p), abs=1e-8)


@pytest.mark.parametrize("m, ref", CASES, ids=lambda x: type(x).__name__)
def test_mean_and_stop_loss_against_scipy(m, ref):
    assert mean(m) == pytest.approx(ref.mean(), abs=1e-8)
    t = ref.ppf(0.4)
    # E(X - t)+ by scipy's expectation of the hinge
    expected = ref.expect(lambda x: max(x - t, 0.0), lb=t)
    assert stop_loss(m, t) == pytest.approx(expected, abs=1e-7)
    # integrated CDF equals E(t - X)+
    expected_icdf = ref.expect(lambda x: max(t - x, 0.0), ub=t)
    assert integrated_cdf(m, t) == pytest.approx(expected_icdf, abs=1e-7)


def test_power_marginal_is_law_of_u_power():
    m = Power(2.0)
    assert m.cdf(0.25) == pytest.approx(0.5)
    assert mean(m) == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_point_mass_atom_conventions():
    m = PointMass(0.5)
    assert m.cdf(0.5) == 1.0
    assert m.cdf_left(0.5) == 0.0
    assert m.atoms() == (0.5,)
    assert not m.has_density
    assert mean(m) == pytest.approx(0.5)
    assert stop_loss(m, 0.0) == pytest.approx(0.5)
    assert stop_loss(m, -1.0) == pytest.approx(1.5)


@given(st.floats(-3.0, 3.0))
def test_stop_loss_put_call_parity(t):
    # pi(t) - integral of F up to t = E(X) - t
    m = Normal(0.3, 1.2)
    lhs = stop_loss(m, t, Tolerance(1e-11)) - integrated_cdf(m, t, Tolerance(1e-11))
    assert lhs == pytest.approx(0.3 - t, abs=1e-8)


@pytest.mark.parametrize(
    "family, params",
    [("uniform", [0, 1]), ("normal", {"mu": 0.0, "sigma": 1.0}), ("triangular", [-1, 0, 1]), ("point", [0.0])],
)
def test_make_marginal_round_trip(family, params):
    m = make_marginal(family, params)
    spec = m.to_spec()
    again = make_marginal(spec["family"], spec["params"])
    assert again.cdf(0.2) == m.cdf(0.2)


def test_make_marginal_unknown_family():
    with pytest.raises(ValueError):
        make_marginal("cauchy", [])


@pytest.mark.parametrize("bad", [lambda: Uniform(1, 1), lambda: Exponential(0), lambda: Normal(0, -1),
                                 lambda: Beta(0, 1), lambda: Triangular(0, 2, 1), lambda: Power(0)])
def test_constructor_validation(bad):
    with pytest.raises(ValueError):
        bad()


class TestGridMarginal:
    def test_reproduces_smooth_cdf(self):
        ref = stats.beta(2.0, 2.0)
        ys = np.linspace(0.0, 1.0, 41)
        g = GridMarginal(ys, ref.cdf(ys))
        for t in np.linspace(0.0, 1.0, 101):
            assert g.cdf(t) == pytest.approx(ref.cdf(t), abs=1e-5)
        assert mean(g) == pytest.approx(0.5, abs=1e-8)

    def test_knot_keeps_a_kink_exact(self):
        # triangular law: CDF has a density kink at the mode
        tri = Triangular(0.0, 1.0, 2.0)
        ys = np.linspace(0.0, 2.0, 21)
        g = GridMarginal(ys, [tri.cdf(y) for y in ys], knots=[1.0])
        assert g.cdf(0.55) == pytest.approx(tri.cdf(0.55), abs=1e-12)
        assert stop_loss(g, 0.5) == pytest.approx(stop_loss(tri, 0.5), abs=1e-12)

    @pytest.mark.parametrize("interp", ["spline", "pchip", "linear"])
    def test_monotone_and_bounded(self, interp):
        ys = np.array([0.0, 0.1, 0.2, 0.8, 1.0])
        fs = np.array([0.0, 0.45, 0.5, 0.5, 1.0])
        g = GridMarginal(ys, fs, interpolation=interp)
        vals = [g.cdf(t) for t in np.linspace(-0.5, 1.5, 401)]
        assert np.all(np.diff(vals) >= -1e-15)
        assert vals[0] == 0.0 and vals[-1] == 1.0

    def test_exact_tail_integrals_agree_with_quadrature(self):
        ys = np.linspace(-1.0, 1.0, 17)
        g = GridMarginal(ys, (ys + 1.0) ** 2 / 4.0)
        from copdom.numerics import integrate

        assert g.stop_loss_exact(0.1) == pytest.approx(integrate(g.survival, 0.1, 1.0, Tolerance(1e-13)), abs=1e-11)
        assert g.cdf_integral(0.1) == pytest.approx(integrate(g.cdf, -1.0, 0.1, Tolerance(1e-13)), abs=1e-11)

    @pytest.mark.parametrize(
        "ys, fs",
        [([0.0, 1.0], [0.0, 0.5]), ([0.0, 0.5, 1.0], [0.0, 0.6, 0.4]), ([1.0, 0.0], [0.0, 1.0]), ([0.0], [1.0])],
    )
    def test_rejects_invalid_tables(self, ys, fs):
        with pytest.raises(ValueError):
            GridMarginal(ys, fs)


class TestSkew:
    @pytest.mark.parametrize("m", [Normal(0, 1), Uniform(-1, 1), Triangular(-1, 0, 1), PointMass(0.0)])
    def test_symmetric(self, m):
        assert classify_skew(m).is_symmetric

    def test_exponential_is_right_skewed(self):
        v = classify_skew(Exponential(1.0))
        assert v.direction == "right" and v.is_right and not v.is_left

    def test_mirror_is_left_skewed(self):
        v = classify_skew(Triangular(-1.0, -1.0, 0.5))
        assert v.direction == "left"

    def test_shifted_center(self):
        assert classify_skew(Normal(2.0, 1.0), center=2.0).is_symmetric
        assert not classify_skew(Normal(2.0, 1.0), center=0.0).is_symmetric

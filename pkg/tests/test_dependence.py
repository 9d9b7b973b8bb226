import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copdom import copulas as cop
from copdom import dependence as dep
from copdom.joint import JointModel
from copdom.marginals import Exponential, Normal, Power, Triangular, Uniform
from copdom.numerics import Grid, Tolerance

U = Uniform()
G51 = Grid.open_unit(51)


def test_classify_rules():
    assert dep.classify(-1e-3, 1.0, 1e-6) == dep.FAILS
    assert dep.classify(0.0, 1e-7, 1e-6) == dep.EQUALITY
    assert dep.classify(0.0, 0.1, 1e-6) == dep.HOLDS
    assert dep.classify(5e-7, 0.1, 1e-6) == dep.HOLDS


@settings(max_examples=100)
@given(st.floats(-1, 1), st.floats(0, 2), st.floats(1e-12, 1e-3))
def test_classify_matches_its_definition(lo, spread, tol):
    hi = lo + spread
    v = dep.classify(lo, hi, tol)
    assert (v == dep.FAILS) == (lo < -tol)
    assert (v == dep.EQUALITY) == (abs(lo) <= tol and hi <= tol)


class TestPQD:
    def test_product_equality(self):
        assert dep.check_pqd(cop.make_product()).verdict == dep.EQUALITY

    def test_example1_fails_near_half_point_two(self, example1):
        rep = dep.check_pqd(example1)
        assert rep.fails
        assert rep.min_slack <= -5e-3
        u, v = rep.witness
        assert u == pytest.approx(0.5, abs=0.02) and v == pytest.approx(0.2, abs=0.05)
        # value at the published point itself
        assert example1.cdf(0.5, 0.2) - 0.1 == pytest.approx(0.09442759 - 0.1, abs=1e-6)

    def test_w_fails(self):
        assert dep.check_pqd(cop.make_frechet_lower()).fails

    def test_nqd_is_the_dual(self):
        assert dep.check_nqd(cop.make_frechet_lower()).holds
        assert dep.check_nqd(cop.make_frechet_upper()).fails

    def test_witness_is_lexicographically_smallest_minimiser(self):
        # W(u, v) - uv attains its minimum -1/4 only at (1/2, 1/2); M - uv is
        # zero on the whole boundary band, so the minimiser ties broadly
        rep = dep.check_pqd(cop.make_frechet_lower(), Grid.open_unit(3))
        assert rep.witness == (0.5, 0.5)
        assert rep.min_slack == pytest.approx(-0.25)


class TestWPQD:
    def test_example2_equality(self):
        rep = dep.check_wpqd(cop.make_example2())
        assert rep.verdict == dep.EQUALITY
        assert max(abs(rep.min_slack), abs(rep.max_slack)) <= 1e-12

    def test_w_fails_at_center(self):
        rep = dep.check_wpqd(cop.make_frechet_lower(), Grid.open_unit(3))
        assert rep.min_slack == pytest.approx(-0.5)
        assert rep.witness == (0.5, 0.5)

    def test_example2_swapped_conditioning_sign_pattern(self):
        c = cop.make_example2()
        pos = dep.check_wpqd_given_v(c)
        neg = dep.check_wnqd_given_v(c)
        assert pos.fails and neg.fails
        # the slack C(u,v) + C(1-u,v) - v reaches positive and negative values
        assert pos.max_slack > 0 > pos.min_slack

    def test_example1_both_with_equality(self, example1):
        assert dep.check_wpqd(example1).verdict == dep.EQUALITY
        assert dep.check_wnqd(example1).verdict == dep.EQUALITY


class TestSPQD:
    @pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
    def test_fgm_nonnegative(self, theta):
        assert dep.check_spqd(cop.make_fgm(theta), G51).holds

    def test_fgm_negative_fails(self):
        assert dep.check_spqd(cop.make_fgm(-0.5), G51).fails

    def test_example2_equality(self):
        rep = dep.check_spqd(cop.make_example2())
        assert rep.verdict == dep.EQUALITY
        assert dep.check_snqd(cop.make_example2()).verdict == dep.EQUALITY

    def test_example3_holds(self):
        rep = dep.check_spqd(cop.make_example3(0.1))
        assert rep.holds and rep.notes["skipped_v"] > 0


class TestSI:
    def test_m_holds(self):
        assert dep.check_si_st(cop.make_frechet_upper(), G51).holds

    def test_fgm_signs(self):
        assert dep.check_si_st(cop.make_fgm(1.0)).holds
        assert dep.check_si_st(cop.make_fgm(-1.0)).fails

    def test_second_difference_oracle(self):
        # FGM second difference in v is -2 theta u (1 - u) h^2; the slack is the slope
        # drop times h, which is that second difference negated
        g = Grid.open_unit(9)
        rep = dep.check_si_st(cop.make_fgm(1.0), g)
        h = 0.1
        assert rep.max_slack == pytest.approx(2 * 0.5 * 0.5 * h * h, rel=1e-9)


class TestPQDE:
    def test_product_equality(self):
        j = JointModel(cop.make_product(), Normal(0, 1), Exponential(1.0))
        assert dep.check_pqde(j).verdict == dep.EQUALITY

    def test_example3(self):
        assert dep.check_pqde(JointModel(cop.make_example3(0.1), U, U)).holds

    def test_example2_with_squared_z_fails(self):
        assert dep.check_pqde(JointModel(cop.make_example2(), U, Power(2.0))).fails

    def test_fgm_slack_oracle(self):
        # E(V | U > u) - 1/2 = theta u / 6 for FGM with uniform margins
        xs = [0.2, 0.6]
        rep = dep.check_pqde(JointModel(cop.make_fgm(0.6), U, U), xs)
        assert rep.min_slack == pytest.approx(0.6 * 0.2 / 6, abs=1e-9)
        assert rep.max_slack == pytest.approx(0.6 * 0.6 / 6, abs=1e-9)


class TestPSLD:
    def test_product_equality(self):
        assert dep.check_psld(JointModel(cop.make_product(), U, U)).verdict == dep.EQUALITY

    def test_m_holds_and_w_fails(self):
        assert dep.check_psld(JointModel(cop.make_frechet_upper(), U, U)).holds
        assert dep.check_psld(JointModel(cop.make_frechet_lower(), U, U)).fails

    def test_m_slack_at_half(self):
        # (Z | X > 1/2) ~ U(1/2, 1); at t = 1/2 the stop-loss gap is 1/4 - 1/8
        rep = dep.check_psld(JointModel(cop.make_frechet_upper(), U, U), [0.5], [0.5])
        assert rep.min_slack == pytest.approx(0.125, abs=1e-9)


class TestArchimedean:
    def test_clayton_holds(self):
        assert dep.archimedean_pqd(cop.clayton_generator(2.0)).verdict == dep.HOLDS

    def test_gumbel_one_is_equality(self):
        assert dep.archimedean_pqd(cop.gumbel_generator(1.0)).verdict == dep.EQUALITY

    def test_clayton_limit_is_equality(self):
        assert dep.archimedean_pqd(cop.clayton_generator(1e-12), tol=1e-9).verdict == dep.EQUALITY

    def test_criterion_agrees_with_grid_pqd(self):
        for theta in (0.5, 2.0):
            c = cop.make_clayton(theta)
            assert dep.archimedean_pqd(c.generator).holds
            assert dep.check_pqd(c).holds


class TestMeasures:
    @pytest.mark.parametrize(
        "c, rho",
        [
            (cop.make_product(), 0.0),
            (cop.make_frechet_upper(), 1.0),
            (cop.make_frechet_lower(), -1.0),
            (cop.make_fgm(1.0), 1 / 3),
            (cop.make_fgm(-0.6), -0.2),
        ],
    )
    def test_spearman_closed_forms(self, c, rho):
        assert dep.spearman_rho(c) == pytest.approx(rho, abs=1e-6)

    def test_gamma_closed_forms(self):
        assert dep.gini_gamma(cop.make_product()) == pytest.approx(0.0, abs=1e-9)
        assert dep.gini_gamma(cop.make_frechet_upper()) == pytest.approx(1.0, abs=1e-6)
        # FGM integrand is 2 theta u^2 (1-u)^2, whose integral is theta / 15
        assert dep.gini_gamma(cop.make_fgm(1.0)) == pytest.approx(4 / 15, abs=1e-7)

    @pytest.mark.parametrize("c", [cop.make_product(), cop.make_frechet_upper(), cop.make_example2()])
    def test_delta_values(self, c):
        assert dep.gini_delta(c) == pytest.approx(dep.spearman_rho(c), abs=2e-8)

    def test_example1_measures_vanish(self, example1):
        assert abs(dep.spearman_rho(example1)) <= 1e-4
        assert abs(dep.gini_gamma(example1)) <= 1e-4
        assert abs(dep.hoeffding_cov(JointModel(example1, U, U))) <= 1e-4

    def test_example2_covariance_with_squared_z(self):
        j = JointModel(cop.make_example2(), U, Power(2.0))
        assert dep.hoeffding_cov(j, Tolerance(1e-12)) == pytest.approx(-1 / 64, abs=1e-10)
        assert dep.expected_product(j, Tolerance(1e-12)) == pytest.approx(29 / 192, abs=1e-10)

    def test_covariance_of_comonotone_uniforms(self):
        assert dep.hoeffding_cov(JointModel(cop.make_frechet_upper(), U, U)) == pytest.approx(1 / 12, abs=1e-8)

    def test_covariance_of_independent_components(self):
        j = JointModel(cop.make_product(), Normal(0, 1), Exponential(2.0))
        assert dep.hoeffding_cov(j) == pytest.approx(0.0, abs=1e-8)

    def test_covariance_against_monte_carlo(self):
        from copdom.joint import sample_joint

        j = JointModel(cop.make_clayton(2.0), Normal(0, 1), Triangular(-1, 0, 2))
        xz = sample_joint(j, 200_000, seed=5)
        prod = (xz[:, 0] - xz[:, 0].mean()) * (xz[:, 1] - xz[:, 1].mean())
        se = prod.std() / math.sqrt(len(prod))
        assert abs(prod.mean() - dep.hoeffding_cov(j)) <= 4 * se


@pytest.mark.parametrize(
    "rep",
    [
        dep.check_pqd(cop.make_fgm(0.3), G51),
        dep.check_spqd(cop.make_example3(0.1), G51),
        dep.check_pqde(JointModel(cop.make_fgm(0.3), U, U), [0.2, 0.5]),
    ],
)
def test_report_json_round_trip(rep):
    text = json.dumps(rep.to_dict())
    again = dep.PropertyReport.from_dict(json.loads(text))
    assert again == rep


@pytest.mark.parametrize("m", [Uniform(), Normal(0, 1), Exponential(1.0)], ids=["uniform", "normal", "exponential"])
def test_tabulated_covariance_matches_brute_force(m):
    from copdom.numerics import integrate2d

    nodes = np.linspace(0, 1, 11)
    f = cop.make_fgm(1.0)
    tab = cop.TabulatedCopula(nodes, nodes, [[f.cdf(u, v) for v in nodes] for u in nodes])
    j = JointModel(tab, m, m)
    lo, hi = m.effective_range(1e-12)
    brk = [m.quantile(float(u)) for u in nodes[1:-1]]
    ref = integrate2d(lambda x, z: tab.cdf(m.cdf(x), m.cdf(z)) - m.cdf(x) * m.cdf(z),
                      Tolerance(1e-9), (lo, hi), (lo, hi), brk, brk)
    assert dep.hoeffding_cov(j, Tolerance(1e-11)) == pytest.approx(ref, abs=1e-7)

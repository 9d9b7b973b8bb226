import json

import pytest

from copdom import copulas as cop
from copdom.dependence import EQUALITY, FAILS
from copdom.joint import JointModel
from copdom.marginals import Exponential, Power, Triangular, Uniform
from copdom.numerics import Grid
from copdom.propositions import (
    PROPOSITIONS,
    EquivalenceReport,
    HarnessConfig,
    TheoremReport,
    UnknownPropositionError,
    check_prop_jm,
    check_propnew1,
    diagnose,
    verify,
)

U = Uniform()
G51 = Grid.open_unit(51)


def test_cx_sym_wpqd_product_symmetric_z():
    rep = verify("cx_sym_wpqd", JointModel(cop.make_product(), U, Uniform(-1, 1)))
    assert rep.premises_hold and rep.conclusion.holds and rep.consistent
    assert rep.conclusion.order == "CX"


def test_icx_rightskew_fgm_exponential():
    rep = verify("icx_rightskew_wpqd", JointModel(cop.make_fgm(0.5), U, Exponential(1.0)))
    assert rep.premises_hold and rep.conclusion.holds
    assert rep.conclusion.order == "ICX"


def test_gamma_rho_cov_zero_example2():
    rep = verify("gamma_rho_cov_zero", JointModel(cop.make_example2(), U, U))
    assert rep.premises_hold and rep.consistent
    assert abs(rep.conclusion.min_slack) <= 1e-6


def test_failed_premise_skips_conclusion_unless_diagnostic():
    j = JointModel(cop.make_product(), U, Uniform(-1, 0))  # E(Z) < 0
    rep = verify("icx_pqde", j)
    assert not rep.premises_hold and rep.conclusion is None and rep.consistent
    diag = verify("icx_pqde", j, diagnostic=True)
    assert diag.conclusion is not None and not diag.conclusion.holds
    # the converse is never asserted, so a failed premise stays consistent
    assert diag.consistent


def test_left_skew_reports_form_agreement():
    rep = verify("icv_leftskew_wpqd", JointModel(cop.make_fgm(0.5), U, Triangular(-1, -1, 0.5)))
    assert rep.premises_hold and rep.consistent
    assert rep.notes["forms_agree"] is True


def test_unknown_proposition():
    with pytest.raises(UnknownPropositionError):
        verify("nosuch", JointModel(cop.make_product(), U, U))


def test_report_round_trip():
    rep = verify("cx_sym_wpqd", JointModel(cop.make_fgm(0.5), U, Uniform(-0.5, 0.5)))
    text = json.dumps(rep.to_dict())
    again = TheoremReport.from_dict(json.loads(text))
    assert again.to_dict() == json.loads(text)
    assert again.conclusion == rep.conclusion


def test_config_round_trip_and_validation():
    cfg = HarnessConfig(grid_n=101, slack_tol=1e-8)
    assert HarnessConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        HarnessConfig.from_dict({"gird_n": 3})


def test_counterexample_chain_example2_squared():
    d = diagnose(JointModel(cop.make_example2(), U, Power(2.0)))
    assert d["wPQD"].holds and d["PQDE"].fails and d["covariance"] < 0


class TestPropNew1:
    def test_example2_both_equalities(self):
        rep = check_propnew1(cop.make_example2())
        assert rep.agree and all(flag for _, flag, _ in rep.conditions)

    def test_fgm_one_both_fail(self):
        rep = check_propnew1(cop.make_fgm(1.0), G51)
        assert rep.agree and not any(flag for _, flag, _ in rep.conditions)
        # slack of (i) is 2 theta u(1-u) v(1-v), which is 3/32 at (1/2, 1/4)
        c = cop.make_fgm(1.0)
        assert c.cdf(0.5, 0.25) + c.cdf(0.5, 0.75) - 0.5 == pytest.approx(3 / 32)

    def test_product_both_hold(self):
        rep = check_propnew1(cop.make_product(), G51)
        assert rep.agree and all(flag for _, flag, _ in rep.conditions)


class TestPropJM:
    def test_example3_all_hold(self):
        rep = check_prop_jm(cop.make_example3(0.1), G51, G51)
        assert rep.agree and all(v != FAILS for _, v, _ in rep.conditions)

    def test_product_all_equality(self):
        rep = check_prop_jm(cop.make_product(), G51, G51)
        assert rep.agree and all(v == EQUALITY for _, v, _ in rep.conditions)

    def test_fgm_negative_all_fail(self):
        rep = check_prop_jm(cop.make_fgm(-0.5), G51, G51)
        assert rep.agree and all(v == FAILS for _, v, _ in rep.conditions)

    def test_round_trip(self):
        rep = check_prop_jm(cop.make_fgm(0.4), Grid.open_unit(11), Grid.open_unit(11))
        again = EquivalenceReport.from_dict(json.loads(json.dumps(rep.to_dict())))
        assert again == rep


def test_registry_covers_every_proposition():
    assert set(PROPOSITIONS) == {
        "icx_pqde",
        "icv_pqde",
        "cx_sym_wpqd",
        "icx_rightskew_wpqd",
        "icv_leftskew_wpqd",
        "cx_sym_spqd",
        "cov_sign",
        "gamma_rho_cov_zero",
    }

"""Numerical verification of sufficient conditions for ordering X and X + Z.

For each proposition the premises are checked on a joint model with the
dependence and marginal tools; when they hold (or in diagnostic mode) the
concluded comparison between X and X + Z is verified on the tabulated sum.
A report is consistent unless the premises hold and the conclusion fails.
Converses are never asserted.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .copulas import Copula, survival_copula
from .dependence import (
    EQUALITY,
    FAILS,
    HOLDS,
    PropertyReport,
    check_pqde,
    check_spqd,
    check_wnqd,
    check_wpqd,
    classify,
    default_slack_tol,
    default_x_grid,
    gini_gamma,
    hoeffding_cov,
    spearman_rho,
)
from .joint import JOINT_TOL, JointModel, default_sum_grid, sum_distribution
from .marginals import SkewVerdict, classify_skew, mean
from .numerics import Grid, Tolerance
from .orders import CX_MEAN_TOL, ORDER_SLACK, Comparison, OrderVerdict, default_t_grid

__all__ = [
    "PROPOSITIONS",
    "HarnessConfig",
    "Premise",
    "TheoremReport",
    "EquivalenceReport",
    "UnknownPropositionError",
    "verify",
    "diagnose",
    "check_propnew1",
    "check_prop_jm",
]


class UnknownPropositionError(KeyError):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    """Tolerances and resolutions shared by premise and conclusion checks."""

    grid_n: int = 201
    slack_tol: float | None = None  # None: per-copula default
    quad_tol: float = JOINT_TOL.abs_tol
    order_tol: float = ORDER_SLACK
    mean_tol: float = CX_MEAN_TOL
    measure_tol: float = 1e-6
    skew_tol: float = 1e-9
    x_n: int = 51
    t_n: int = 401
    y_n: int = 401

    @property
    def quadrature(self) -> Tolerance:
        return Tolerance(self.quad_tol)

    def slack_for(self, c: Copula) -> float:
        return default_slack_tol(c) if self.slack_tol is None else self.slack_tol

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HarnessConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Premise:
    name: str
    holds: bool
    detail: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "detail": self.detail}


@dataclass(frozen=True)
class TheoremReport:
    prop_id: str
    premises: tuple
    premises_hold: bool
    conclusion: OrderVerdict | PropertyReport | None
    consistent: bool
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "prop_id": self.prop_id,
            "premises": [p.to_dict() for p in self.premises],
            "premises_hold": self.premises_hold,
            "conclusion": None if self.conclusion is None else self.conclusion.to_dict(),
            "consistent": self.consistent,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TheoremReport":
        concl = d.get("conclusion")
        if concl is not None:
            concl = OrderVerdict.from_dict(concl) if "order" in concl else PropertyReport.from_dict(concl)
        premises = tuple(Premise(p["name"], bool(p["holds"]), dict(p["detail"])) for p in d["premises"])
        return cls(d["prop_id"], premises, bool(d["premises_hold"]), concl, bool(d["consistent"]), dict(d.get("notes", {})))


# ---------------------------------------------------------------------------
# premise builders


def _property_premise(name: str, rep: PropertyReport) -> Premise:
    return Premise(name, rep.holds, rep.to_dict())


def _skew_premise(name: str, verdict: SkewVerdict, wanted: str) -> Premise:
    ok = {"symmetric": verdict.is_symmetric, "right": verdict.is_right, "left": verdict.is_left}[wanted]
    return Premise(name, ok, verdict.to_dict())


def _sign_premise(name: str, value: float, sign: int, tol: float) -> Premise:
    return Premise(name, sign * value >= -tol, {"value": value, "tolerance": tol})


def _scalar_report(name: str, slack: float, tol: float, **notes) -> PropertyReport:
    return PropertyReport(name, classify(slack, slack, tol), slack, slack, None, 1, tol, notes)


# ---------------------------------------------------------------------------
# conclusions


def _sum_comparison(j: JointModel, cfg: HarnessConfig) -> Comparison:
    s = sum_distribution(j, default_sum_grid(j, cfg.y_n), cfg.quadrature)
    return Comparison(j.marginal_x, s, default_t_grid(j.marginal_x, s, cfg.t_n))


def _icx_conclusion(j, cfg):
    return _sum_comparison(j, cfg).icx(cfg.order_tol)


def _cx_conclusion(j, cfg):
    return _sum_comparison(j, cfg).cx(cfg.order_tol, cfg.mean_tol)


def _icv_reverse_conclusion(j, cfg):
    """X + Z <=_ICV X, i.e. integrated CDF of the sum above that of X."""
    cmp = _sum_comparison(j, cfg)
    ia, ib = cmp.integrated_cdf
    slack = ib - ia
    k = int(np.argmin(slack))
    lo = float(slack[k])
    return OrderVerdict("ICV", lo >= -cfg.order_tol, lo, float(cmp.ts[k]), len(cmp.ts), cfg.order_tol)


def _cov_sign_conclusion(j, cfg):
    cov = hoeffding_cov(j, cfg.quadrature)
    return _scalar_report("Cov(X,Z)>=0", cov, cfg.measure_tol, covariance=cov)


def _zero_measures_conclusion(j, cfg):
    tol = cfg.quadrature
    g, r, cov = gini_gamma(j.copula, tol), spearman_rho(j.copula, tol), hoeffding_cov(j, tol)
    worst = max(abs(g), abs(r), abs(cov))
    verdict = EQUALITY if worst <= cfg.measure_tol else FAILS
    return PropertyReport(
        "gamma=rho=Cov=0", verdict, -worst, worst, None, 1, cfg.measure_tol,
        {"gamma": g, "rho": r, "covariance": cov},
    )


# ---------------------------------------------------------------------------
# propositions


def _premises_icx_pqde(j, cfg):
    ez = mean(j.marginal_z, cfg.quadrature)
    return [
        _sign_premise("E(Z)>=0", ez, +1, cfg.quad_tol),
        _property_premise("PQDE(Z|X)", check_pqde(j, default_x_grid(j, cfg.x_n), cfg.slack_for(j.copula), cfg.quadrature)),
    ], {}


def _premises_icv_pqde(j, cfg):
    ez = mean(j.marginal_z, cfg.quadrature)
    return [
        _sign_premise("E(Z)<=0", ez, -1, cfg.quad_tol),
        _property_premise("PQDE(Z|X)", check_pqde(j, default_x_grid(j, cfg.x_n), cfg.slack_for(j.copula), cfg.quadrature)),
    ], {}


def _hat_wpqd(j, cfg):
    hat = survival_copula(j.copula)
    return check_wpqd(hat, Grid.open_unit(cfg.grid_n), cfg.slack_for(hat))


def _premises_cx_sym_wpqd(j, cfg):
    return [
        _skew_premise("Z symmetric about 0", classify_skew(j.marginal_z, 0.0, tol=cfg.skew_tol), "symmetric"),
        _property_premise("wPQD of survival copula", _hat_wpqd(j, cfg)),
    ], {}


def _premises_icx_rightskew(j, cfg):
    return [
        _skew_premise("Z right skewed", classify_skew(j.marginal_z, 0.0, tol=cfg.skew_tol), "right"),
        _property_premise("wPQD of survival copula", _hat_wpqd(j, cfg)),
    ], {}


def _premises_icv_leftskew(j, cfg):
    c_form = check_wpqd(j.copula, Grid.open_unit(cfg.grid_n), cfg.slack_for(j.copula))
    hat_form = _hat_wpqd(j, cfg)
    notes = {
        "survival_copula_form": hat_form.verdict,
        "forms_agree": c_form.holds == hat_form.holds,
    }
    return [
        _skew_premise("Z left skewed", classify_skew(j.marginal_z, 0.0, tol=cfg.skew_tol), "left"),
        _property_premise("wPQD of copula", c_form),
    ], notes


def _premises_cx_sym_spqd(j, cfg):
    hat = survival_copula(j.copula)
    return [
        _skew_premise("Z symmetric about 0", classify_skew(j.marginal_z, 0.0, tol=cfg.skew_tol), "symmetric"),
        Premise("absolutely continuous", bool(j.copula.has_density and j.marginal_z.has_density), {}),
        _property_premise("sPQD of survival copula", check_spqd(hat, Grid.open_unit(cfg.grid_n), cfg.slack_for(hat))),
    ], {}


def _symmetric_about_mean(j, cfg):
    a = mean(j.marginal_z, cfg.quadrature)
    return _skew_premise(f"Z symmetric about {a:.6g}", classify_skew(j.marginal_z, a, tol=cfg.skew_tol), "symmetric")


def _premises_cov_sign(j, cfg):
    g = Grid.open_unit(cfg.grid_n)
    return [
        _property_premise("wPQD(Z|X)", check_wpqd(j.copula, g, cfg.slack_for(j.copula))),
        _symmetric_about_mean(j, cfg),
    ], {}


def _premises_zero_measures(j, cfg):
    g = Grid.open_unit(cfg.grid_n)
    t = cfg.slack_for(j.copula)
    return [
        _symmetric_about_mean(j, cfg),
        _property_premise("wPQD(Z|X)", check_wpqd(j.copula, g, t)),
        _property_premise("wNQD(Z|X)", check_wnqd(j.copula, g, t)),
    ], {}


PROPOSITIONS = {
    "icx_pqde": (_premises_icx_pqde, _icx_conclusion, "E(Z)>=0 and PQDE(Z|X) give X <=_ICX X+Z"),
    "icv_pqde": (_premises_icv_pqde, _icv_reverse_conclusion, "E(Z)<=0 and PQDE(Z|X) give X+Z <=_ICV X"),
    "cx_sym_wpqd": (_premises_cx_sym_wpqd, _cx_conclusion, "Z symmetric and survival copula wPQD give X <=_CX X+Z"),
    "icx_rightskew_wpqd": (_premises_icx_rightskew, _icx_conclusion, "Z right skewed and survival copula wPQD give X <=_ICX X+Z"),
    "icv_leftskew_wpqd": (_premises_icv_leftskew, _icv_reverse_conclusion, "Z left skewed and copula wPQD give X+Z <=_ICV X"),
    "cx_sym_spqd": (_premises_cx_sym_spqd, _cx_conclusion, "Z symmetric and survival copula sPQD give X <=_CX X+Z"),
    "cov_sign": (_premises_cov_sign, _cov_sign_conclusion, "wPQD(Z|X) and Z symmetric give Cov(X,Z) >= 0"),
    "gamma_rho_cov_zero": (_premises_zero_measures, _zero_measures_conclusion, "wPQD and wNQD with Z symmetric give gamma = rho = Cov = 0"),
}


def verify(prop_id: str, j: JointModel, config: HarnessConfig | None = None, diagnostic: bool = False) -> TheoremReport:
    """Check premises of ``prop_id`` on ``j``; verify the conclusion when they hold.

    With ``diagnostic`` the conclusion is computed even if a premise fails.
    """
    if prop_id not in PROPOSITIONS:
        raise UnknownPropositionError(f"unknown proposition {prop_id!r}; known: {sorted(PROPOSITIONS)}")
    cfg = config or HarnessConfig()
    build, conclude, _ = PROPOSITIONS[prop_id]
    premises, notes = build(j, cfg)
    ok = all(p.holds for p in premises)
    conclusion = conclude(j, cfg) if (ok or diagnostic) else None
    consistent = (not ok) or (conclusion is not None and conclusion.holds)
    if "forms_agree" in notes and not notes["forms_agree"]:
        notes["warning"] = "copula and survival-copula forms of the premise disagree"
    return TheoremReport(prop_id, tuple(premises), ok, conclusion, consistent, notes)


def diagnose(j: JointModel, config: HarnessConfig | None = None) -> dict:
    """wPQD, PQDE and the covariance sign side by side for one model."""
    cfg = config or HarnessConfig()
    w = check_wpqd(j.copula, Grid.open_unit(cfg.grid_n), cfg.slack_for(j.copula))
    p = check_pqde(j, default_x_grid(j, cfg.x_n), cfg.slack_for(j.copula), cfg.quadrature)
    cov = hoeffding_cov(j, cfg.quadrature)
    return {"wPQD": w, "PQDE": p, "covariance": cov}


# ---------------------------------------------------------------------------
# structural equivalences


@dataclass(frozen=True)
class EquivalenceReport:
    name: str
    conditions: tuple  # (label, verdict, PropertyReport)
    agree: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "conditions": [{"label": lab, "verdict": v, "report": r.to_dict()} for lab, v, r in self.conditions],
            "agree": self.agree,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquivalenceReport":
        conds = tuple((c["label"], c["verdict"], PropertyReport.from_dict(c["report"])) for c in d["conditions"])
        return cls(d["name"], conds, bool(d["agree"]))


def check_propnew1(c: Copula, grid=None, tol=None, h: float | None = None) -> EquivalenceReport:
    """C(u,v) + C(u,1-v) = u everywhere iff d2C(u,v) = d2C(u,1-v) for v < 1/2."""
    g = grid if grid is not None else Grid.open_unit(201)
    t = default_slack_tol(c) if tol is None else tol
    first = check_wpqd(c, g, t)
    second = check_spqd(c, g, t, h)
    conds = (
        ("(i) C(u,v)+C(u,1-v)-u = 0", first.with_equality, first),
        ("(ii) d2C(u,v) = d2C(u,1-v)", second.with_equality, second),
    )
    return EquivalenceReport("propnew1", conds, first.with_equality == second.with_equality)


JM_FD_STEP = 1e-4
JM_FD_TOL = 1e-6


def check_prop_jm(c: Copula, u_grid=None, v_grid=None, tol=None, step: float = JM_FD_STEP) -> EquivalenceReport:
    """sPQD against the skew of the conditional densities of V - 1/2.

    (ii) g_u, the density of V - 1/2 given U <= u, satisfies g_u(-w) >= g_u(w);
    (iii) h_u, the density of V - 1/2 given U > u, satisfies h_u(w) >= h_u(-w).
    Both densities are central differences of the conditional CDF or survival
    function, so they do not reuse d2C.
    """
    us = np.asarray(list(u_grid if u_grid is not None else Grid.open_unit(201)), dtype=float)
    vs_all = np.asarray(list(v_grid if v_grid is not None else Grid.open_unit(201)), dtype=float)
    t = default_slack_tol(c) if tol is None else tol
    t_fd = max(t, JM_FD_TOL)

    first = check_spqd(c, Grid.from_points(us), t)
    spacing = float(np.min(np.diff(vs_all))) if len(vs_all) > 1 else 1e-3
    kinks = set()
    for b in c.v_breaks:
        kinks.update((b, 1.0 - b))
    ws = np.array([
        0.5 - v for v in vs_all
        if v < 0.5 and all(abs(v - b) > 2 * spacing and abs(1.0 - v - b) > 2 * spacing for b in kinks)
    ])
    ws = np.sort(ws)

    def g_lower(u, w):  # density of V - 1/2 given U <= u
        return (c.cdf(u, w + 0.5 + step) - c.cdf(u, w + 0.5 - step)) / (2 * step * u)

    def h_upper(u, w):  # density of V - 1/2 given U > u, from its survival function
        def surv(s):
            return (1.0 - u - (s + 0.5) + c.cdf(u, s + 0.5)) / (1.0 - u)

        return (surv(w - step) - surv(w + step)) / (2 * step)

    second = np.array([[g_lower(u, -w) - g_lower(u, w) for w in ws] for u in us])
    third = np.array([[h_upper(u, w) - h_upper(u, -w) for w in ws] for u in us])

    def report(name, slack):
        k = int(np.argmin(slack))
        i, jj = np.unravel_index(k, slack.shape)
        lo, hi = float(slack[i, jj]), float(slack.max())
        return PropertyReport(name, classify(lo, hi, t_fd), lo, hi, (float(us[i]), float(ws[jj])),
                              slack.shape, t_fd, {"step": step})

    r2 = report("(ii) g_u(-w) >= g_u(w)", second)
    r3 = report("(iii) h_u(w) >= h_u(-w)", third)
    conds = (
        ("(i) sPQD", first.verdict, first),
        ("(ii) left skew given U<=u", r2.verdict, r2),
        ("(iii) right skew given U>u", r3.verdict, r3),
    )
    verdicts = {_coarse(v) for _, v, _ in conds}
    return EquivalenceReport("prop_jm", conds, len(verdicts) == 1)


def _coarse(verdict: str) -> str:
    # equality is a special case of holding; compare hold/fail only
    return FAILS if verdict == FAILS else HOLDS

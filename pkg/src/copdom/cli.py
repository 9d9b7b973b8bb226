"""Command-line front end.

Subcommands: check, measure, compare, convolve, verify, reproduce-examples.
Exit codes: 0 pass, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import copulas as cop
from . import dependence as dep
from .joint import JOINT_TOL, JointModel, cond_mean_z_given_x_le, default_sum_grid, sum_distribution
from .marginals import Marginal, Uniform, make_marginal, mean
from .numerics import Grid, Tolerance
from .orders import Comparison, default_t_grid
from .propositions import PROPOSITIONS, HarnessConfig, check_prop_jm, diagnose, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(ValueError):
    """Invalid model file or arguments."""


# ---------------------------------------------------------------------------
# model files


@dataclass
class ModelSpec:
    copula: dict
    marginal_x: dict = field(default_factory=lambda: {"family": "uniform", "params": [0.0, 1.0]})
    marginal_z: dict = field(default_factory=lambda: {"family": "uniform", "params": [0.0, 1.0]})
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        if not isinstance(d, dict) or "copula" not in d:
            raise InputError("model file must be an object with a 'copula' entry")
        unknown = set(d) - {"copula", "marginal_x", "marginal_z", "options"}
        if unknown:
            raise InputError(f"unknown model keys: {sorted(unknown)}")
        kw = {k: d[k] for k in ("copula", "marginal_x", "marginal_z", "options") if k in d}
        for key in ("copula", "marginal_x", "marginal_z"):
            if key in kw and (not isinstance(kw[key], dict) or "family" not in kw[key]):
                raise InputError(f"'{key}' needs a 'family' entry")
        return cls(**kw)

    def to_dict(self) -> dict:
        return {"copula": self.copula, "marginal_x": self.marginal_x, "marginal_z": self.marginal_z, "options": self.options}

    def build_copula(self) -> cop.Copula:
        return _build("copula", lambda: cop.make_copula(self.copula["family"], self.copula.get("params")))

    def build_marginal(self, key: str) -> Marginal:
        spec = getattr(self, key)
        return _build(key, lambda: make_marginal(str(spec["family"]).lower(), spec.get("params")))

    def build(self) -> JointModel:
        return JointModel(self.build_copula(), self.build_marginal("marginal_x"), self.build_marginal("marginal_z"))


def _build(what, fn):
    try:
        return fn()
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        raise InputError(f"invalid {what}: {exc}") from exc


def load_model(path) -> ModelSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from exc
    return ModelSpec.from_dict(data)


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj) -> str:
    # Python floats serialize in shortest round-trip form, which is lossless
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(report: dict, out) -> None:
    text = dumps(report)
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# options


def _options(args, spec: ModelSpec | None) -> dict:
    opts = dict(spec.options) if spec is not None else {}
    for name in ("grid", "tol", "seed"):
        val = getattr(args, name, None)
        if val is not None:
            opts[name] = val
    grid = opts.get("grid", 201)
    if not isinstance(grid, int) or grid < 3:
        raise InputError(f"grid resolution must be an integer >= 3, got {grid!r}")
    tol = opts.get("tol")
    if tol is not None and not (isinstance(tol, (int, float)) and tol > 0):
        raise InputError(f"tolerance must be positive, got {tol!r}")
    opts["grid"] = grid
    return opts


def _config(opts) -> HarnessConfig:
    extra = {k: v for k, v in opts.items() if k not in ("grid", "tol", "seed")}
    try:
        cfg = HarnessConfig.from_dict(extra)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    kw = cfg.to_dict()
    kw["grid_n"] = opts["grid"]
    if opts.get("tol") is not None:
        kw["slack_tol"] = float(opts["tol"])
    return HarnessConfig(**kw)


# ---------------------------------------------------------------------------
# subcommands


def _copula_check(fn):
    def run(j, grid, tol):
        return fn(j.copula, grid, tol)

    return run


CHECKS = {
    "pqd": _copula_check(dep.check_pqd),
    "nqd": _copula_check(dep.check_nqd),
    "wpqd": _copula_check(dep.check_wpqd),
    "wnqd": _copula_check(dep.check_wnqd),
    "wpqd-given-v": _copula_check(dep.check_wpqd_given_v),
    "wnqd-given-v": _copula_check(dep.check_wnqd_given_v),
    "spqd": _copula_check(dep.check_spqd),
    "snqd": _copula_check(dep.check_snqd),
    "si-st": _copula_check(dep.check_si_st),
    "pqde": lambda j, grid, tol: dep.check_pqde(j, None, tol),
    "psld": lambda j, grid, tol: dep.check_psld(j, None, None, tol),
}


def _archimedean(j, grid, tol):
    gen = getattr(j.copula, "generator", None)
    if gen is None:
        raise InputError("archimedean-pqd needs an Archimedean copula (clayton or gumbel)")
    return dep.archimedean_pqd(gen, grid, tol)


CHECKS["archimedean-pqd"] = _archimedean


def cmd_check(args) -> int:
    spec = load_model(args.model)
    opts = _options(args, spec)
    j = spec.build()
    names = args.properties or ["pqd", "wpqd", "spqd"]
    bad = [n for n in names if n not in CHECKS]
    if bad:
        raise InputError(f"unknown properties {bad}; choose from {sorted(CHECKS)}")
    grid = Grid.open_unit(opts["grid"])
    reports = [CHECKS[n](j, grid, opts.get("tol")).to_dict() for n in names]
    emit({"model": spec.to_dict(), "reports": reports}, args.out)
    return EXIT_OK if all(r["verdict"] != dep.FAILS for r in reports) else EXIT_FAIL


def cmd_measure(args) -> int:
    spec = load_model(args.model)
    opts = _options(args, spec)
    j = spec.build()
    tol = Tolerance(float(opts.get("quad_tol", 1e-8)))
    rho = dep.spearman_rho(j.copula, tol)
    delta = dep.gini_delta(j.copula, tol)
    out = {
        "rho": rho,
        "gamma": dep.gini_gamma(j.copula, tol),
        "delta": delta,
        "delta_minus_rho": abs(delta - rho),
        "covariance": dep.hoeffding_cov(j, Tolerance(min(tol.abs_tol, 1e-10))),
    }
    emit({"model": spec.to_dict(), "measures": out}, args.out)
    return EXIT_OK


def _curve_path(out, suffix):
    if not out:
        return None
    p = Path(out)
    return p.with_name(p.stem + suffix)


def cmd_compare(args) -> int:
    spec = load_model(args.model)
    opts = _options(args, spec)
    cfg = _config(opts)
    j = spec.build()
    s = sum_distribution(j, default_sum_grid(j, cfg.y_n), cfg.quadrature)
    cmp = Comparison(j.marginal_x, s, default_t_grid(j.marginal_x, s, cfg.t_n))
    order = args.order.upper()
    tol = cfg.order_tol if opts.get("tol") is None else float(opts["tol"])
    if order == "ST":
        verdict, kind = cmp.st(tol), "survival"
    elif order == "ICX":
        verdict, kind = cmp.icx(tol), "stop_loss"
    elif order == "ICV":
        verdict, kind = cmp.icv(tol), "integrated_cdf"
    elif order == "CX":
        verdict, kind = cmp.cx(tol, cfg.mean_tol), "stop_loss"
    else:
        raise InputError(f"unknown order {args.order!r}; choose ST, ICX, ICV or CX")
    curves = _curve_path(args.out, ".curves.csv") if args.curves is None else Path(args.curves)
    report = {"model": spec.to_dict(), "comparison": "X vs X+Z", "verdict": verdict.to_dict()}
    if curves is not None:
        cmp.write_curves_csv(curves, kind)
        report["curves"] = curves.name
    emit(report, args.out)
    return EXIT_OK if verdict.holds else EXIT_FAIL


def cmd_convolve(args) -> int:
    spec = load_model(args.model)
    opts = _options(args, spec)
    cfg = _config(opts)
    j = spec.build()
    s = sum_distribution(j, default_sum_grid(j, cfg.y_n), cfg.quadrature)
    if isinstance(s, Marginal) and hasattr(s, "points"):
        ys = s.points
    else:
        ys = default_sum_grid(j, cfg.y_n).as_array()
    rows = [(y, s.cdf(float(y)), s.survival(float(y))) for y in ys]
    text = csv_text(["y", "cdf", "survival"], rows)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = load_model(args.model)
    opts = _options(args, spec)
    cfg = _config(opts)
    if args.prop not in PROPOSITIONS:
        raise InputError(f"unknown proposition {args.prop!r}; choose from {sorted(PROPOSITIONS)}")
    j = spec.build()
    rep = verify(args.prop, j, cfg, diagnostic=args.diagnostic)
    emit({"model": spec.to_dict(), "report": rep.to_dict()}, args.out)
    return EXIT_OK if rep.consistent else EXIT_FAIL


# ---------------------------------------------------------------------------
# reproduction of the worked examples


@dataclass
class Check:
    name: str
    value: float
    expected: float | str
    tolerance: float | None
    passed: bool

    def row(self):
        return {"name": self.name, "value": self.value, "expected": self.expected, "tolerance": self.tolerance, "passed": self.passed}


def _near(name, value, expected, tol, override=None) -> Check:
    t = tol if override is None else override
    return Check(name, value, expected, t, abs(value - expected) <= t)


def _verdict_check(name, rep, wanted) -> Check:
    ok = rep.verdict == wanted if wanted != "holds" else rep.holds
    return Check(name, rep.min_slack, wanted, rep.tolerance, ok)


def reproduce_examples(override: float | None = None) -> list[Check]:
    """Every published value of the three worked examples, with its tolerance.

    ``override`` replaces the tolerance of every numeric value comparison.
    """
    checks = []
    grid = Grid.open_unit(201)
    q = Tolerance(1e-12)

    e1 = cop.make_example1()
    checks.append(_near("ex1 C(0.5,0.2)", e1.cdf(0.5, 0.2), 0.09442759, 1e-6, override))
    checks.append(_near("ex1 C(0.5,0.2) by direct quadrature", e1.cdf_exact(0.5, 0.2), 0.09442759, 1e-6, override))
    checks.append(_near("ex1 gamma", dep.gini_gamma(e1), 0.0, 1e-4, override))
    checks.append(_near("ex1 rho", dep.spearman_rho(e1), 0.0, 1e-4, override))
    j1 = JointModel(e1, Uniform(), Uniform())
    checks.append(_near("ex1 Cov(U,V)", dep.hoeffding_cov(j1), 0.0, 1e-4, override))
    checks.append(_verdict_check("ex1 wPQD", dep.check_wpqd(e1, grid), dep.EQUALITY))
    checks.append(_verdict_check("ex1 wNQD", dep.check_wnqd(e1, grid), dep.EQUALITY))
    pqd = dep.check_pqd(e1, grid)
    checks.append(Check("ex1 PQD fails with slack <= -5e-3", pqd.min_slack, "<= -0.005", None,
                        pqd.fails and pqd.min_slack <= -5e-3))

    e2 = cop.make_example2()
    checks.append(_near("ex2 C(1/2,1/4)", e2.cdf(0.5, 0.25), 0.25, 0.0, override))
    checks.append(_near("ex2 C(1/2,3/4)", e2.cdf(0.5, 0.75), 0.25, 0.0, override))
    w2 = dep.check_wpqd(e2, grid)
    checks.append(Check("ex2 max |C(u,v)+C(u,1-v)-u|", max(abs(w2.min_slack), abs(w2.max_slack)), 0.0,
                        1e-12, max(abs(w2.min_slack), abs(w2.max_slack)) <= 1e-12))
    checks.append(_verdict_check("ex2 sPQD and sNQD", dep.check_spqd(e2, grid), dep.EQUALITY))
    pqd2, nqd2 = dep.check_pqd(e2, grid), dep.check_nqd(e2, grid)
    checks.append(Check("ex2 neither PQD nor NQD", pqd2.min_slack, "both fail", None, pqd2.fails and nqd2.fails))
    a, b = dep.check_wpqd_given_v(e2, grid), dep.check_wnqd_given_v(e2, grid)
    checks.append(Check("ex2 neither wPQD(U|V) nor wNQD(U|V)", a.min_slack, "both fail", None, a.fails and b.fails))
    checks.append(_near("ex2 gamma", dep.gini_gamma(e2), 0.0, 1e-10, override))
    checks.append(_near("ex2 rho", dep.spearman_rho(e2), 0.0, 1e-10, override))
    from .marginals import Power

    j2 = JointModel(e2, Uniform(), Power(2.0))
    cov = dep.hoeffding_cov(j2, q)
    checks.append(_near("ex2 Cov(U,V^2)", cov, -1.0 / 64.0, 1e-10, override))
    checks.append(_near("ex2 E(UV^2)", cov + 0.5 * mean(Power(2.0), q), 29.0 / 192.0, 1e-10, override))
    diag = diagnose(j2)
    checks.append(Check("ex2 Z=V^2: wPQD holds, PQDE fails, Cov < 0", diag["covariance"], "holds/fails/<0", None,
                        diag["wPQD"].holds and diag["PQDE"].fails and diag["covariance"] < 0))

    for delta in (0.0, 0.1, 0.25):
        e3 = cop.make_example3(delta)
        j3 = JointModel(e3, Uniform(), Uniform())
        checks.append(_verdict_check(f"ex3({delta}) sPQD(V|U)", dep.check_spqd(e3, grid), "holds"))
        checks.append(_verdict_check(f"ex3({delta}) wPQD", dep.check_wpqd(e3, grid), "holds"))
        checks.append(_verdict_check(f"ex3({delta}) PQDE(V|U)", dep.check_pqde(j3), "holds"))
        c3 = dep.hoeffding_cov(j3)
        checks.append(Check(f"ex3({delta}) Cov(U,V) >= -1e-9", c3, ">= -1e-9", 1e-9, c3 >= -1e-9))
        jm = check_prop_jm(e3, grid, grid)
        checks.append(Check(f"ex3({delta}) sPQD and conditional-skew conditions agree", float(jm.agree), "agree", None, jm.agree))
        m = cond_mean_z_given_x_le(j3, 0.25, JOINT_TOL)
        checks.append(Check(f"ex3({delta}) E(V|U<=0.25) <= 1/2", m, "<= 0.5", None, m <= 0.5 + 1e-12))

    checks.append(_near("rho of product", dep.spearman_rho(cop.make_product()), 0.0, 1e-6, override))
    checks.append(_near("rho of M", dep.spearman_rho(cop.make_frechet_upper()), 1.0, 1e-6, override))
    checks.append(_near("rho of W", dep.spearman_rho(cop.make_frechet_lower()), -1.0, 1e-6, override))
    return checks


def cmd_reproduce(args) -> int:
    override = getattr(args, "tol", None)
    checks = reproduce_examples(override)
    outdir = Path(args.out or "reproduce-output")
    outdir.mkdir(parents=True, exist_ok=True)
    passed = sum(c.passed for c in checks)
    summary = {"passed": passed, "total": len(checks), "checks": [c.row() for c in checks]}
    write_atomic(outdir / "summary.json", dumps(summary))
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value!r} (expected {c.expected}"
             + (f", tol {c.tolerance}" if c.tolerance is not None else "") + ")" for c in checks]
    lines.append(f"{passed}/{len(checks)} matched")
    write_atomic(outdir / "summary.txt", "\n".join(lines) + "\n")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if passed == len(checks) else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="copdom", description="Copula dependence checks and stochastic comparisons of X and X+Z.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True, help="model file (JSON)")
        sp.add_argument("--grid", type=int, help="grid resolution per axis")
        sp.add_argument("--tol", type=float, help="slack tolerance")
        sp.add_argument("--seed", type=int, help="random seed recorded with the run")
        sp.add_argument("--out", help="output path (stdout when omitted)")

    sp = sub.add_parser("check", help="dependence properties of the copula or model")
    common(sp)
    sp.add_argument("properties", nargs="*", help=f"any of {', '.join(sorted(CHECKS))}")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("measure", help="rho, gamma, delta and covariance")
    common(sp)
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("compare", help="order between X and X+Z")
    common(sp)
    sp.add_argument("--order", required=True, help="ST, ICX, ICV or CX")
    sp.add_argument("--curves", help="CSV path for the compared curves")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("convolve", help="tabulate the law of X+Z as CSV")
    common(sp)
    sp.set_defaults(func=cmd_convolve)

    sp = sub.add_parser("verify", help="premises and conclusion of one proposition")
    common(sp)
    sp.add_argument("--prop", required=True, help=f"one of {', '.join(sorted(PROPOSITIONS))}")
    sp.add_argument("--diagnostic", action="store_true", help="compute the conclusion even if premises fail")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("reproduce-examples", help="recompute the published example values")
    common(sp, model=False)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

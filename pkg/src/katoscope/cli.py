"""Scenario-driven command line: parse, dispatch, report.

Subcommands: norm, classify, localize, fk, verify, run, report.  Every
computation writes a JSON report whose pass/fail entries carry the compared
numbers and the tolerance; curve-like results also land as CSV, and the
report path renders PNG figures next to them.

Exit codes: 0 all checks passed (or nothing was asserted), 1 at least one
reported check failed, 2 malformed config or usage.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    Scenario,
    build_scenario,
    chart_origin,
    scenarios_from_text,
)
from .dynkin import (
    TimePowerBound,
    doubling_exponent_from_crossing,
    dynkin_norm,
    holder_bound,
    kato_detect,
    l1_lower_check,
    localized_norm,
    metric_comparability,
    mollification_convergence,
    resolvent_sandwich,
    ricci_doubling_exponent,
    time_subadditivity_check,
)
from .geometry import ClosedBall, Euclidean, Point, circle_chart
from .potentials import Constant, PotentialError, classical_kato_test_euclidean
from .report import emit_report, load_report, new_report, write_csv, write_index
from .schrodinger import spectral_field, spectral_oracle
from .stochastics import (
    exit_time_mean,
    khasminskii_check,
    localization_mc,
    mc_dynkin_norm,
)
from . import plots
from .schrodinger import fk_semigroup

_DEFAULT_OUT = "katoscope-out"


def _out_dir(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get("KATOSCOPE_OUT", _DEFAULT_OUT))


def _point(model, coords) -> Point:
    return Point(model, tuple(float(c) for c in coords))


def _x_points(sc: Scenario) -> list[Point]:
    xs = sc.param("x")
    if xs is None:
        return [chart_origin(sc.model)]
    rows = xs if isinstance(xs, list) else [xs]
    out = []
    for row in rows:
        coords = [float(c) for c in str(row).split(",")]
        if len(coords) != sc.model.m:
            raise ConfigError(f"x needs {sc.model.m} comma-separated coordinates")
        out.append(_point(sc.model, coords))
    return out


def _psi_callable(name: str):
    if name == "one":
        return lambda pts: np.ones(len(pts))
    if name == "sin":
        return lambda pts: np.sin(pts[:, 0])
    if name == "cos":
        return lambda pts: np.cos(pts[:, 0])
    raise ConfigError(f"psi must be one|sin|cos, got {name!r}")


def _need_potential(sc: Scenario):
    if sc.potential is None:
        raise ConfigError(f"op {sc.op!r} needs a potential")
    return sc.potential


def _need_ball(sc: Scenario) -> ClosedBall:
    if not isinstance(sc.region, ClosedBall):
        raise ConfigError(f"op {sc.op!r} needs a closed-ball region")
    return sc.region


def _estimate_dict(est) -> dict:
    return {
        "t": est.t,
        "value": est.value,
        "error": est.error,
        "method": est.method,
        "argmax": None if est.argmax is None else tuple(map(float, est.argmax.coords)),
    }


# ---------------------------------------------------------------------------
# op handlers: fill the report, return the overall pass flag (None = no assertion)


def _op_norm(sc, rep, figdir, render):
    w = _need_potential(sc)
    ts = sc.times()
    grid = sc.param("grid")
    if grid and len(ts) == 2:
        ts = tuple(np.geomspace(ts[0], ts[1], int(grid)))
    rows, ests = [], []
    for t in ts:
        est = dynkin_norm(w, sc.model, float(t), sc.region)
        rows.append((float(t), est.value, est.error))
        ests.append(_estimate_dict(est))
    rep.tables["curve"] = (("t", "value", "error"), rows)
    rep.results["estimates"] = ests
    if render:
        fig = plots.norm_curve([r[0] for r in rows], [r[1] for r in rows],
                               [r[2] for r in rows], figdir / f"{sc.name}.curve.png")
        rep.results["figures"] = [str(fig)]
    return None


def _class_label(verdict) -> str:
    if verdict.verdict == "kato":
        return "Kato"
    if verdict.verdict == "not-kato":
        finite = all(math.isfinite(v) for v in verdict.values)
        return "DynkinNotKato" if finite else "NotDynkin"
    return "Inconclusive"


def _op_classify(sc, rep, figdir, render):
    w = _need_potential(sc)
    verdict = kato_detect(w, sc.model, region=sc.region)
    label = _class_label(verdict)
    rep.tables["evidence"] = (("t", "value"), list(zip(verdict.times, verdict.values)))
    rep.results["classification"] = {
        "label": label,
        "verdict": verdict.verdict,
        "fitted_exponent": verdict.fitted_exponent,
        "decay_ratio": verdict.decay_ratio,
    }
    passes = None
    if sc.param("classical") and isinstance(sc.model, Euclidean):
        classical = classical_kato_test_euclidean(w, sc.model)
        agree = classical.verdict == verdict.verdict
        rep.results["classical"] = {
            "verdict": classical.verdict,
            "radii": classical.radii,
            "values": classical.values,
            "agrees": agree,
        }
        passes = agree
    if render:
        fig = plots.evidence_decay(verdict.times, verdict.values,
                                   figdir / f"{sc.name}.evidence.png", label)
        rep.results["figures"] = [str(fig)]
    return passes


def _op_localize(sc, rep, figdir, render):
    w = _need_potential(sc)
    region = sc.region
    if region is None:
        raise ConfigError("op 'localize' needs a region")
    t = sc.times()[0]
    tol = float(sc.param("tol", 0.02))
    full, local, gap = localized_norm(w, sc.model, t, region)
    passes = gap <= tol
    rep.results["localization"] = {
        "full": _estimate_dict(full),
        "local": _estimate_dict(local),
        "gap": gap,
        "tolerance": tol,
        "passes": passes,
    }
    if sc.param("paths") and isinstance(region, ClosedBall):
        c = np.asarray(region.center.coords, float)
        r = region.radius
        def shifted(f):
            q = c.copy()
            q[0] += f * r
            return _point(sc.model, q)
        mc = localization_mc(
            w, sc.model, region, t,
            [region.center, shifted(0.5)], [shifted(1.5), shifted(2.5)],
            n_paths=int(sc.param("paths")), dt=float(sc.param("dt", 1e-3)),
            seed=int(sc.param("seed", 0)),
        )
        rep.results["mc"] = {
            "sup_inside": mc.sup_inside,
            "sup_outside": mc.sup_outside,
            "stderr": mc.stderr,
            "passes": mc.passes,
        }
        passes = passes and mc.passes
    return passes


def _op_fk(sc, rep, figdir, render):
    w = sc.potential if sc.potential is not None else Constant(0.0)
    psi = _psi_callable(str(sc.param("psi", "one")))
    ts = sc.times()
    chart = circle_chart(sc.model)
    if sc.param("x") is not None:
        pts = _x_points(sc)
    elif chart is not None:
        period = chart[0]
        pts = [_point(sc.model, (v,)) for v in np.linspace(0.0, period, 9, endpoint=False)]
    else:
        pts = [chart_origin(sc.model)]
    field = fk_semigroup(
        w, sc.model, psi, ts, pts,
        n_paths=int(sc.param("paths", 20000)), dt=float(sc.param("dt", 1e-3)),
        seed=int(sc.param("seed", 0)), domain=sc.region,
    )
    rows = []
    for i, t in enumerate(field.ts):
        for j, x in enumerate(field.xs):
            rows.append((t, x[0], field.values[i, j], field.stderrs[i, j]))
    rep.tables["field"] = (("t", "x", "u", "stderr"), rows)
    passes = None
    if chart is not None and sc.region is None:
        tol = float(sc.param("tol", 1e-2))
        oracle = spectral_oracle(sc.model, w, int(sc.param("mesh", 512)))
        sp = spectral_field(oracle, psi, ts, [x[0] for x in field.xs])
        diffs = np.abs(field.values - sp.values)
        slack = np.maximum(3.0 * field.stderrs, tol)
        passes = bool(np.all(diffs <= slack))
        rep.results["spectral_comparison"] = {
            "max_diff": float(np.max(diffs)),
            "max_allowed": float(np.max(slack)),
            "tolerance": tol,
            "passes": passes,
        }
    if render:
        fig = plots.field_lines(field.ts, [x[0] for x in field.xs], field.values,
                                figdir / f"{sc.name}.field.png", errors=field.stderrs)
        rep.results["figures"] = [str(fig)]
    return passes


def _op_mc_norm(sc, rep, figdir, render):
    w = _need_potential(sc)
    t = sc.times()[0]
    x0 = _x_points(sc)[0]
    mc = mc_dynkin_norm(
        w, sc.model, t, x0, region=sc.region,
        n_paths=int(sc.param("paths", 100000)), dt=float(sc.param("dt", 1e-3)),
        seed=int(sc.param("seed", 0)),
    )
    det = dynkin_norm(w, sc.model, t, sc.region)
    tol = float(sc.param("tol", 1e-3))
    # any start point sits below the sup, up to noise and step bias
    passes = mc.value <= det.value * (1.0 + tol) + 3.0 * mc.stderr
    rep.results["mc_vs_norm"] = {
        "mc": mc.value, "stderr": mc.stderr, "norm": det.value,
        "tolerance": tol, "passes": passes,
    }
    return passes


def _op_khasminskii(sc, rep, figdir, render):
    w = _need_potential(sc)
    region = _need_ball(sc)
    t = sc.times()[0]
    t0 = float(sc.param("t0", 0.5))
    chk = khasminskii_check(
        w, sc.model, region, _x_points(sc)[0], t, t0,
        n_paths=int(sc.param("paths", 100000)), dt=float(sc.param("dt", 1e-3)),
        seed=int(sc.param("seed", 0)),
    )
    rep.results["khasminskii"] = {
        "eta": chk.eta, "growth_const": chk.growth_const, "bound": chk.bound,
        "mc": chk.estimate.value, "stderr": chk.estimate.stderr, "passes": chk.passes,
    }
    return chk.passes


def _op_subadditivity(sc, rep, figdir, render):
    w = _need_potential(sc)
    ts = sc.times()
    if len(ts) != 2:
        raise ConfigError("op 'subadditivity' needs exactly two t values: t and T")
    tol = float(sc.param("tol", 1e-3))
    chk = time_subadditivity_check(w, sc.model, ts[0], ts[1], region=sc.region, tol=tol)
    rep.results["subadditivity"] = {
        "t": chk.t, "T": chk.big_t, "factor": chk.factor,
        "lhs": chk.lhs, "rhs": chk.rhs, "tolerance": tol, "passes": chk.passes,
    }
    return chk.passes


def _op_resolvent(sc, rep, figdir, render):
    w = _need_potential(sc)
    lam = float(sc.param("lam", 1.0))
    t = sc.times()[0]
    tol = float(sc.param("tol", 1e-3))
    rs = resolvent_sandwich(w, sc.model, lam, t, tol=tol)
    rep.results["resolvent"] = {
        "lambda": rs.lam, "t": rs.t, "sup_resolvent": rs.sup_resolvent,
        "lower": rs.lower, "upper": rs.upper, "norm": rs.norm_value,
        "tolerance": tol, "passes": rs.passes,
    }
    return rs.passes


def _op_holder(sc, rep, figdir, render):
    w = _need_potential(sc)
    t = sc.times()[0]
    q = float(sc.param("q", 2.0))
    coef, expo, window = sc.param("coef"), sc.param("expo"), sc.param("window")
    if coef is None:
        if not isinstance(sc.model, Euclidean):
            raise ConfigError("op 'holder' needs coef/expo/window for non-Euclidean models")
        m = sc.model.m
        coef, expo, window = (4 * math.pi) ** (-m / 2), -m / 2, max(t, 1.0)
    kb = TimePowerBound(float(coef), float(expo), float(window))
    hb = holder_bound(w, sc.model, kb, q, t)
    rep.results["holder"] = {
        "bound": hb.bound, "lq_norm": hb.lq_norm, "q": hb.q,
        "norm": hb.norm_value, "precheck_worst": hb.precheck_worst, "passes": hb.passes,
    }
    return hb.passes


def _op_l1_lower(sc, rep, figdir, render):
    w = _need_potential(sc)
    region = _need_ball(sc)
    t = sc.times()[0]
    tol = float(sc.param("tol", 1e-3))
    chk = l1_lower_check(w, sc.model, t, region, tol=tol)
    rep.results["l1_lower"] = {
        "lhs": chk.lhs, "rhs": chk.rhs, "kernel_min": chk.kernel_min,
        "localized_norm": chk.localized_norm, "tolerance": tol, "passes": chk.passes,
    }
    return chk.passes


def _op_comparability(sc, rep, figdir, render):
    w = _need_potential(sc)
    ts = sc.times((0.2, 0.1, 0.05, 0.025))
    tol = float(sc.param("tol", 0.2))
    cr = metric_comparability(w, sc.model, ts, tol=tol)
    rep.tables["comparability"] = (
        ("t", "ratio", "constant"),
        list(zip(cr.t_values, cr.ratios, cr.constants)),
    )
    rep.results["comparability"] = {
        "variation": cr.variation, "tolerance": tol, "passes": cr.passes,
    }
    return cr.passes


def _op_mollification(sc, rep, figdir, render):
    w = _need_potential(sc)
    t = sc.times((0.1,))[0]
    eps = sc.param("eps")
    eps_values = (
        tuple(float(e) for e in (eps if isinstance(eps, list) else [eps]))
        if eps is not None
        else (0.2, 0.1, 0.05, 0.025, 0.0125)
    )
    mr = mollification_convergence(w, sc.model, t, eps_values)
    rep.tables["mollification"] = (
        ("eps", "diff_norm"), list(zip(mr.eps_values, mr.diff_norms))
    )
    rep.results["mollification"] = {
        "base_norm": mr.base_norm, "final_fraction": mr.final_fraction,
        "decreasing": mr.decreasing, "passes": mr.passes,
    }
    return mr.passes


def _op_doubling(sc, rep, figdir, render):
    t_star = sc.param("t-star")
    if t_star is not None:
        n_exp = doubling_exponent_from_crossing(sc.model.m, float(t_star))
        rep.results["doubling"] = {"n_exp": n_exp, "t_star": float(t_star), "method": "arithmetic"}
        return None
    de = ricci_doubling_exponent(sc.model)
    rep.results["doubling"] = {
        "n_exp": de.n_exp, "t_star": de.t_star, "threshold": de.threshold,
        "sigma_minus": de.sigma_minus, "method": de.method,
    }
    return None


def _op_exit_time(sc, rep, figdir, render):
    region = _need_ball(sc)
    x0 = _x_points(sc)[0]
    dt = float(sc.param("dt", 1e-4))
    est = exit_time_mean(
        sc.model, region, x0, t_cap=float(sc.param("t-cap", 10.0)),
        n_paths=int(sc.param("paths", 100000)), dt=dt, seed=int(sc.param("seed", 0)),
    )
    rep.results["exit_time"] = {
        "mean": est.value, "stderr": est.stderr, "capped_fraction": est.capped_fraction,
    }
    passes = None
    if isinstance(sc.model, Euclidean):
        d = float(sc.model.distances(np.asarray(x0.coords, float)[None, :], region.center)[0])
        exact = (region.radius**2 - d**2) / (2 * sc.model.m)
        slack = 3.0 * est.stderr + 2.0 * math.sqrt(dt) * exact
        passes = abs(est.value - exact) <= slack
        rep.results["exit_time"].update(
            {"exact": exact, "allowed_deviation": slack, "passes": passes}
        )
    return passes


def _op_localize_mc(sc, rep, figdir, render):
    w = _need_potential(sc)
    region = _need_ball(sc)
    t = sc.times()[0]
    c = np.asarray(region.center.coords, float)
    def shifted(f):
        q = c.copy()
        q[0] += f * region.radius
        return _point(sc.model, q)
    mc = localization_mc(
        w, sc.model, region, t,
        [region.center, shifted(0.5)], [shifted(1.5), shifted(2.5)],
        n_paths=int(sc.param("paths", 20000)), dt=float(sc.param("dt", 1e-3)),
        seed=int(sc.param("seed", 0)),
    )
    rep.results["localization_mc"] = {
        "sup_inside": mc.sup_inside, "sup_outside": mc.sup_outside,
        "stderr": mc.stderr, "values_inside": mc.values_inside,
        "values_outside": mc.values_outside, "passes": mc.passes,
    }
    return mc.passes


_HANDLERS = {
    "norm": _op_norm,
    "classify": _op_classify,
    "localize": _op_localize,
    "fk": _op_fk,
    "mc-norm": _op_mc_norm,
    "khasminskii": _op_khasminskii,
    "subadditivity": _op_subadditivity,
    "resolvent": _op_resolvent,
    "holder": _op_holder,
    "l1-lower": _op_l1_lower,
    "comparability": _op_comparability,
    "mollification": _op_mollification,
    "doubling": _op_doubling,
    "exit-time": _op_exit_time,
    "localize-mc": _op_localize_mc,
}


def run_scenario(sc: Scenario, out_dir: Path, render: bool = True):
    """Execute one scenario; returns (report, written files)."""
    rep = new_report(
        {"name": sc.name, "op": sc.op, "model": repr(sc.model),
         "potential": repr(sc.potential), "region": repr(sc.region),
         "params": {k: v for k, v in sc.params.items()}}
    )
    start = time.perf_counter()
    passes = _HANDLERS[sc.op](sc, rep, out_dir, render)
    rep.runtime_s = round(time.perf_counter() - start, 6)
    rep.passes = passes
    files = emit_report(rep, out_dir, sc.name)
    return rep, files


# ---------------------------------------------------------------------------
# argument plumbing


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario file; explicit flags override it")
    p.add_argument("--name", help="scenario name (report file stem)")
    p.add_argument("--model", help="model descriptor, e.g. euclidean:2")
    p.add_argument("--potential", action="append",
                   help="potential descriptor, e.g. power:1.0:1.0 (repeatable)")
    p.add_argument("--region", help="region descriptor: whole or ball:<radius>")
    p.add_argument("--t", action="append", type=float, help="time value (repeatable)")
    p.add_argument("--grid", type=int, help="expand two --t values into a log grid")
    p.add_argument("--paths", type=int, help="Monte Carlo path count")
    p.add_argument("--dt", type=float, help="Monte Carlo step size")
    p.add_argument("--seed", type=int, help="RNG seed (required for stochastic ops)")
    p.add_argument("--tol", type=float, help="check tolerance")
    p.add_argument("--out", help="output directory (default $KATOSCOPE_OUT)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--x", action="append",
                   help="start/probe point as comma-separated chart coordinates")


_FLAG_KEYS = ("name", "model", "potential", "region", "t", "grid", "paths",
              "dt", "seed", "tol", "x")


def _explicit_flags(args) -> dict:
    out = {}
    for key in _FLAG_KEYS:
        v = getattr(args, key.replace("-", "_"), None)
        if v is None:
            continue
        if isinstance(v, list):
            if not v:
                continue
            out[key] = v if len(v) > 1 else v[0]
        else:
            out[key] = v
    return out


def _scenarios_for(args, op: str | None, extra: dict | None = None) -> list[Scenario]:
    flags = _explicit_flags(args)
    if extra:
        flags.update(extra)
    if op is not None:
        flags["op"] = op
    if args.config:
        text = Path(args.config).read_text()
        base = scenarios_from_text(text, defaults=flags)
        if len(base) == 1 and flags:
            from .config import parse_config

            tree = parse_config(text)
            node = tree.get("scenario", tree)
            if isinstance(node, list):
                node = node[0]
            node = dict(node)
            node.update(flags)
            return [build_scenario(node)]
        return base
    return [build_scenario(flags)]


def _cmd_simple(args, op: str, extra: dict | None = None) -> int:
    out = _out_dir(args)
    scs = _scenarios_for(args, op, extra)
    worst = 0
    entries = []
    for sc in scs:
        rep, files = run_scenario(sc, out, render=not args.no_plots)
        entries.append((sc.name, files[0], rep.passes))
        status = "ok" if rep.passes in (None, True) else "FAIL"
        print(f"{sc.name}: {status} ({files[0]})")
        if rep.passes is False:
            worst = 1
    if len(entries) > 1:
        write_index(out, [(n, str(f), p) for n, f, p in entries])
    return worst


_VERIFY_CHECKS = {
    "subadditivity": "subadditivity",
    "resolvent": "resolvent",
    "holder": "holder",
    "l1-lower": "l1-lower",
    "khasminskii": "khasminskii",
    "comparability": "comparability",
    "mollification": "mollification",
    "doubling": "doubling",
    "exit-time": "exit-time",
    "mc-norm": "mc-norm",
    "localize-mc": "localize-mc",
}


def _cmd_report(args) -> int:
    data = load_report(args.input)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    name = data.get("scenario", {}).get("name", "report")
    written = []
    for table, payload in data.get("tables", {}).items():
        path = out / f"{name}.{table}.csv"
        write_csv(path, payload["header"], payload["rows"])
        written.append(path)
        rows = payload["rows"]
        if table == "curve" and rows:
            written.append(plots.norm_curve(
                [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                out / f"{name}.curve.png"))
        if table == "evidence" and rows:
            vals = [float(v) if not isinstance(v, str) else math.inf for _, v in rows]
            written.append(plots.evidence_decay(
                [r[0] for r in rows], vals, out / f"{name}.evidence.png"))
        if table == "field" and rows:
            ts = sorted({r[0] for r in rows})
            xs = sorted({r[1] for r in rows})
            vals = np.full((len(ts), len(xs)), np.nan)
            for t, x, u, _err in rows:
                vals[ts.index(t), xs.index(x)] = u
            written.append(plots.field_lines(ts, xs, vals, out / f"{name}.field.png"))
    for p in written:
        print(p)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="katoscope",
        description="Occupation-norm analysis of potentials on model geometries",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, hlp in (
        ("norm", "occupation norm over one or more times"),
        ("classify", "small-time decay classification of a potential"),
        ("localize", "region-localized norm and its sup gap"),
        ("fk", "path-integral semigroup field (with spectral cross-check on circles)"),
        ("run", "execute every scenario in a config file"),
    ):
        p = sub.add_parser(cmd, help=hlp)
        _add_shared(p)
        if cmd == "classify":
            p.add_argument("--classical", action="store_true",
                           help="also run the classical Euclidean test and compare")
        if cmd == "fk":
            p.add_argument("--psi", default=None, help="terminal function: one|sin|cos")
            p.add_argument("--mesh", type=int, default=None, help="spectral oracle mesh")
    pv = sub.add_parser("verify", help="named inequality and convergence checks")
    _add_shared(pv)
    pv.add_argument("--check", required=True, choices=sorted(_VERIFY_CHECKS),
                    help="which check to run")
    pv.add_argument("--lam", type=float, help="resolvent parameter")
    pv.add_argument("--q", type=float, help="integrability exponent")
    pv.add_argument("--t0", type=float, help="base horizon for khasminskii")
    pv.add_argument("--eps", action="append", type=float, help="mollification widths")
    pv.add_argument("--t-star", type=float, help="crossing time for doubling arithmetic")
    pr = sub.add_parser("report", help="re-render tables and figures from a JSON report")
    pr.add_argument("--input", required=True, help="existing report JSON")
    pr.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)

    try:
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "run":
            if not args.config:
                raise ConfigError("run needs --config")
            return _cmd_simple(args, None)
        if args.command == "verify":
            extra = {}
            for key in ("lam", "q", "t0", "t_star"):
                v = getattr(args, key, None)
                if v is not None:
                    extra[key.replace("_", "-")] = v
            if getattr(args, "eps", None):
                extra["eps"] = args.eps
            return _cmd_simple(args, _VERIFY_CHECKS[args.check], extra)
        extra = {}
        if args.command == "classify" and args.classical:
            extra["classical"] = True
        if args.command == "fk":
            if args.psi is not None:
                extra["psi"] = args.psi
            if args.mesh is not None:
                extra["mesh"] = args.mesh
        return _cmd_simple(args, args.command, extra)
    except (ConfigError, PotentialError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

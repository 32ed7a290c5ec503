"""Command line entry point: ``radres <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .carleman import carleman_certificate
from .errors import ConfigurationError, DomainError, FitError, ResourceError
from .exponents import REGIMES, consistency_certificate, tau_plan
from .modes import build_modes
from .potential import HolderOscillatory, MollifierBump, mollify, mollify_error_report
from .sweep import MODELS, fit_scaling, load_config, read_result, run_sweep, write_outputs

log = logging.getLogger("radres")


def _emit(records, fmt="jsonl", out=None):
    records = list(records)
    out = sys.stdout if out is None else out
    if fmt == "jsonl":
        for rec in records:
            out.write(json.dumps(rec, default=_jsonable) + "\n")
        return
    if not records:
        return
    keys = list(records[0])
    sep = "\t" if fmt == "tsv" else ","
    out.write(sep.join(keys) + "\n")
    for rec in records:
        out.write(sep.join(_cell(rec.get(k)) for k in keys) + "\n")


def _cell(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


def _regime_params(a):
    return {k: getattr(a, k) for k in ("delta", "rho", "alpha", "beta") if getattr(a, k) is not None}


def cmd_sweep(a):
    cfg = load_config(a.config)
    if a.workers is not None:
        cfg.workers = a.workers
        cfg.validate()
    result = run_sweep(cfg, fit_model=a.model)
    paths = write_outputs(result, a.out, a.stem, emit_plot_data=a.emit_plot_data)
    if not a.no_figures:
        from .plotting import render_sweep
        figs = render_sweep(result, a.out, a.stem, result.fit)
        paths.update({f"figure{i}": p for i, p in enumerate(figs)})
    sys.stdout.write(paths["csv"].read_text())
    if result.fit:
        _emit([{"fit": result.fit.model, "slope": result.fit.slope,
                "intercept": result.fit.intercept, "r2": result.fit.r2,
                "log_power": result.fit.log_power}])
    _emit([{"C_fit": result.bound.C_fit, "bound_pass": result.bound.passed}])
    for key, p in paths.items():
        log.info("wrote %s: %s", key, p)
    return 0


def cmd_fit(a):
    if a.predict:
        if a.regime is None or not a.h:
            raise ConfigurationError("--predict needs --regime and at least one --h")
        recs = []
        for h in a.h:
            plan = tau_plan(a.regime, h, **_regime_params(a))
            rec = plan.as_record()
            rec["certificate_pass"] = consistency_certificate(plan).passed
            recs.append(rec)
        _emit(recs, a.format)
        return 0
    if a.input is None:
        raise ConfigurationError("fit needs --input or --predict")
    result = read_result(a.input)
    fits = [fit_scaling(result, m) for m in (MODELS if a.model == "all" else [a.model])]
    _emit([{"model": f.model, "slope": f.slope, "intercept": f.intercept, "r2": f.r2, "n": f.n,
            "log_power": f.log_power} for f in fits], a.format)
    return 0


def cmd_modes(a):
    grid = build_modes(a.h, a.d, a.R, a.E, a.Vsup, margin=a.margin)
    recs = [{"l": l, "lambda": lam, "nu": nu, "multiplicity": m} for l, lam, nu, m in grid.rows()]
    _emit(recs, a.format)
    return 0


def cmd_carleman(a):
    recs = [carleman_certificate(a.regime, h, E=a.E, s=a.s, lam=a.lam, **_regime_params(a))
            for h in a.h]
    _emit(recs, a.format)
    return 0


def cmd_mollify(a):
    V = HolderOscillatory(alpha=a.alpha, beta=a.beta, C=a.C, terms=a.terms)
    grid = np.linspace(0.0, a.rmax, a.points)
    recs = []
    theta = a.theta
    for _ in range(a.halvings + 1):
        Vt = mollify(V, theta, MollifierBump.resolving(V, theta))
        rep = mollify_error_report(V, Vt, a.alpha, a.beta, theta, grid)
        recs.append({"theta": theta, "c_err": rep.c_err, "c_deriv": rep.c_deriv})
        theta /= 2
    for prev, cur in zip(recs, recs[1:]):
        cur["err_ratio"] = cur["c_err"] / prev["c_err"]
        cur["deriv_ratio"] = cur["c_deriv"] / prev["c_deriv"]
    _emit(recs, a.format)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="radres", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp, default="jsonl"):
        sp.add_argument("--format", choices=("jsonl", "csv", "tsv"), default=default)

    def regime_args(sp):
        sp.add_argument("--regime", choices=REGIMES)
        sp.add_argument("--h", type=float, action="append")
        for name in ("delta", "rho", "alpha", "beta"):
            sp.add_argument(f"--{name}", type=float)

    sp = sub.add_parser("sweep", help="run an h-sweep from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=".")
    sp.add_argument("--stem", default="sweep")
    sp.add_argument("--model", choices=MODELS, default="pure-power")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--emit-plot-data", action="store_true")
    sp.add_argument("--no-figures", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="fit scaling models or print exponent plans")
    sp.add_argument("--input")
    sp.add_argument("--model", choices=MODELS + ("all",), default="all")
    sp.add_argument("--predict", action="store_true")
    regime_args(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("modes", help="print the angular mode table")
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--R", type=float, default=5.0)
    sp.add_argument("--E", type=float, default=1.0)
    sp.add_argument("--Vsup", type=float, default=0.0)
    sp.add_argument("--margin", type=float, default=1.0)
    fmt(sp, "tsv")
    sp.set_defaults(func=cmd_modes)

    sp = sub.add_parser("carleman-check", help="measured Carleman constants for a regime")
    regime_args(sp)
    sp.add_argument("--E", type=float, default=1.0)
    sp.add_argument("--s", type=float, default=1.0)
    sp.add_argument("--lam", type=float, default=1.0)
    fmt(sp)
    sp.set_defaults(func=cmd_carleman)

    sp = sub.add_parser("mollify-check", help="mollifier constants across theta halvings")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=3.0)
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--terms", type=int, default=12)
    sp.add_argument("--theta", type=float, default=0.1)
    sp.add_argument("--halvings", type=int, default=3)
    sp.add_argument("--rmax", type=float, default=20.0)
    sp.add_argument("--points", type=int, default=4001)
    fmt(sp)
    sp.set_defaults(func=cmd_mollify)
    return p


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if a.command == "carleman-check" and (a.regime is None or not a.h):
        parser.error("carleman-check needs --regime and --h")
    try:
        return a.func(a)
    except (ConfigurationError, DomainError, FitError, ResourceError) as exc:
        print(f"radres: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""h-sweeps of the weighted resolvent quantity, scaling fits and bound checks."""

from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, FitError, ResourceError
from .exponents import REGIMES, check_regime, regime_for, tau_plan
from .modes import truncation_bound
from .operator1d import EPS_FLOOR, Grid1D, g_of
from .potential import (BarrierWell, HolderOscillatory, LogDecay, PowerDecay, RadialPotential,
                        Sampled)

logger = logging.getLogger(__name__)

DEFAULT_HS = (0.2, 0.14, 0.1, 0.07, 0.05, 0.035, 0.025)
DEFAULT_MAX_WORK = 2e8
CSV_FIELDS = ("h", "eps", "s", "E", "regime", "g", "nu_max", "worst_l", "worst_nu", "converged",
              "n_modes", "N", "k", "q", "bound")


@dataclass
class SweepConfig:
    potential: RadialPotential
    regime: str
    hs: tuple = DEFAULT_HS
    d: int = 3
    E: float = 1.0
    s: float = 1.0
    eps: float = 1e-4
    sign: int = 1
    R: float = 5.0
    points_per_wavelength: float = 10.0
    cap: float = 0.0
    margin: float = 1.0
    nu_scan: str = "spectral"
    per_gap: int = 1
    refine: int = 8
    workers: int = 1
    tol: float = 1e-8
    maxiter: int = 10_000
    seed: int = 0
    eps_sensitivity: bool = True
    max_work: float = DEFAULT_MAX_WORK
    regime_params: dict = field(default_factory=dict)
    C: float | None = None
    potential_spec: dict = field(default_factory=dict)

    def validate(self):
        hs = tuple(float(h) for h in self.hs)
        if not hs:
            raise ConfigurationError("empty h list")
        if any(not 0 < h < math.exp(-1) for h in hs):
            raise ConfigurationError("every h must lie in (0, 1/e)")
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise ConfigurationError("h list must be strictly decreasing")
        if not (isinstance(self.d, int) and self.d >= 3):
            raise ConfigurationError("d must be an integer >= 3")
        if not self.E > 0:
            raise ConfigurationError("E must be positive")
        if not self.s > 0.5:
            raise ConfigurationError("s must exceed 1/2")
        if not self.eps >= EPS_FLOOR:
            raise ConfigurationError(f"eps must be >= {EPS_FLOOR}")
        if self.sign not in (1, -1):
            raise ConfigurationError("sign must be +1 or -1")
        if not self.R > 0 or not self.points_per_wavelength >= 2:
            raise ConfigurationError("need R > 0 and points_per_wavelength >= 2")
        if self.cap < 0 or self.margin < 1:
            raise ConfigurationError("need cap >= 0 and margin >= 1")
        if self.nu_scan not in ("spectral", "continuous"):
            raise ConfigurationError(f"unknown nu_scan {self.nu_scan!r}")
        if self.per_gap < 1 or self.refine < 0 or self.workers < 1 or self.maxiter < 1:
            raise ConfigurationError("per_gap, workers, maxiter must be >= 1 and refine >= 0")
        if self.regime not in REGIMES:
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        check_regime(self.regime, **self.regime_params)
        if self.C is not None and not self.C > 0:
            raise ConfigurationError("bound constant C must be positive")
        self.hs = hs
        work = self.estimated_work()
        if work > self.max_work:
            raise ResourceError(f"estimated work {work:.3g} exceeds max_work {self.max_work:.3g}; "
                                "drop the smallest h or shrink R")
        return self

    def estimated_work(self) -> float:
        """Sum over rows of (nu samples) x (grid nodes), a proxy for solve cost."""
        vsup = self.potential.sup_norm
        total = 0.0
        factor = 1 + self.per_gap if self.nu_scan == "continuous" else 1
        hs = list(self.hs) + ([self.hs[-1]] * 2 if self.eps_sensitivity else [])
        for h in hs:
            n_modes = self.margin * truncation_bound(self.R, self.E, vsup) / h + self.d
            N = Grid1D.resolved(self.R, h, self.E, vsup, self.points_per_wavelength).N
            total += factor * n_modes * N
        return total

    def g_kwargs(self):
        return dict(s=self.s, d=self.d, V=self.potential, E=self.E, R=self.R, sign=self.sign,
                    points_per_wavelength=self.points_per_wavelength, cap=self.cap,
                    margin=self.margin, nu_scan=self.nu_scan, per_gap=self.per_gap,
                    refine=self.refine, workers=self.workers, tol=self.tol,
                    maxiter=self.maxiter, seed=self.seed)

    def as_record(self):
        rec = {k: v for k, v in asdict(self).items() if k not in ("potential",)}
        rec["hs"] = list(self.hs)
        return rec


# -- config file -------------------------------------------------------------

_POTENTIALS = {
    "zero": lambda p: PowerDecay(C=0.0, delta=p.getfloat("delta", 3.0)),
    "power": lambda p: PowerDecay(C=p.getfloat("C", 1.0), delta=p.getfloat("delta", 3.0)),
    "log": lambda p: LogDecay(C=p.getfloat("C", 1.0), rho=p.getfloat("rho", 2.0)),
    "holder": lambda p: HolderOscillatory(alpha=p.getfloat("alpha", 0.5),
                                          beta=p.getfloat("beta", 3.0), C=p.getfloat("C", 1.0),
                                          terms=p.getint("terms", 12)),
    "barrier": lambda p: BarrierWell(height=p.getfloat("height", 2.0), r_in=p.getfloat("r_in", 1.0),
                                     r_out=p.getfloat("r_out", 2.0), depth=p.getfloat("depth", 0.0)),
}


def _potential(sec, base: Path):
    kind = sec.get("kind", "zero").strip().lower()
    if kind == "sampled":
        if "file" not in sec:
            raise ConfigurationError("sampled potential needs file =")
        path = Path(sec["file"])
        path = path if path.is_absolute() else base / path
        delta = sec.getfloat("delta", None)
        return Sampled.from_file(path, delta=delta, C=sec.getfloat("C", None))
    if kind not in _POTENTIALS:
        raise ConfigurationError(f"unknown potential kind {kind!r}; "
                                 f"choose from {sorted(_POTENTIALS) + ['sampled']}")
    return _POTENTIALS[kind](sec)


def _floats(text):
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"bad number list {text!r}") from exc


def load_config(path) -> SweepConfig:
    """Read and validate an INI-style sweep configuration.

    Sections: ``[problem]`` (d, E, s, eps, sign), ``[potential]`` (kind and its
    parameters), ``[grid]`` (R, points_per_wavelength, cap, margin),
    ``[sweep]`` (h list, nu_scan, workers, ...), ``[regime]`` (name and
    regime parameters, optional bound constant C).
    """
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
    if not cp.read(path):
        raise ConfigurationError(f"cannot read config {path}")
    unknown = set(cp.sections()) - {"problem", "potential", "grid", "sweep", "regime"}
    if unknown:
        raise ConfigurationError(f"unknown config sections {sorted(unknown)}")
    for name in ("problem", "potential", "grid", "sweep", "regime"):
        if not cp.has_section(name):
            cp.add_section(name)
    pr, po, gr, sw, rg = (cp[n] for n in ("problem", "potential", "grid", "sweep", "regime"))
    try:
        V = _potential(po, path.parent)
        params = {k: rg.getfloat(k) for k in ("delta", "rho", "alpha", "beta") if k in rg}
        regime = rg.get("name", None) or regime_for(V)
        if not params:
            params = {k: getattr(V, k) for k in ("delta", "rho", "alpha", "beta")
                      if getattr(V, k) is not None}
            if regime in ("delta_gt2", "delta_le2"):
                params = {"delta": params.get("delta")}
            elif regime == "log_decay":
                params = {"rho": params.get("rho")}
            else:
                params = {"alpha": params.get("alpha"), "beta": params.get("beta")}
        cfg = SweepConfig(
            potential=V,
            regime=regime,
            regime_params=params,
            C=rg.getfloat("C", None),
            hs=_floats(sw.get("h", " ".join(map(str, DEFAULT_HS)))),
            d=pr.getint("d", 3),
            E=pr.getfloat("E", 1.0),
            s=pr.getfloat("s", 1.0),
            eps=pr.getfloat("eps", 1e-4),
            sign=pr.getint("sign", 1),
            R=gr.getfloat("R", 5.0),
            points_per_wavelength=gr.getfloat("points_per_wavelength", 10.0),
            cap=gr.getfloat("cap", 0.0),
            margin=gr.getfloat("margin", 1.0),
            nu_scan=sw.get("nu_scan", "spectral").strip(),
            per_gap=sw.getint("per_gap", 1),
            refine=sw.getint("refine", 8),
            workers=sw.getint("workers", 1),
            tol=sw.getfloat("tol", 1e-8),
            maxiter=sw.getint("maxiter", 10_000),
            seed=sw.getint("seed", 0),
            eps_sensitivity=sw.getboolean("eps_sensitivity", True),
            max_work=sw.getfloat("max_work", DEFAULT_MAX_WORK),
            potential_spec=dict(po),
        )
    except (ValueError, DomainError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{path}: {exc}") from exc
    return cfg.validate()


# -- sweep -------------------------------------------------------------------

@dataclass
class SweepRow:
    h: float
    eps: float
    s: float
    E: float
    regime: str
    g: float
    nu_max: float
    worst_l: int | None
    worst_nu: float
    converged: bool
    n_modes: int
    N: int
    k: float
    q: float
    bound: float | None = None
    wall_time: float = 0.0


@dataclass
class FitResult:
    model: str
    slope: float
    intercept: float
    r2: float
    n: int
    log_power: float | None = None


@dataclass
class BoundCheck:
    C_fit: float
    ratios: list
    max_violation: float
    passed: bool


@dataclass
class SweepResult:
    rows: list
    config: dict = field(default_factory=dict)
    eps_sensitivity: list = field(default_factory=list)
    fit: FitResult | None = None
    bound: BoundCheck | None = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def as_record(self):
        return {
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "eps_sensitivity": self.eps_sensitivity,
            "fit": asdict(self.fit) if self.fit else None,
            "bound": asdict(self.bound) if self.bound else None,
        }

    @classmethod
    def from_record(cls, rec):
        rows = [SweepRow(**r) for r in rec["rows"]]
        fit = FitResult(**rec["fit"]) if rec.get("fit") else None
        bound = BoundCheck(**rec["bound"]) if rec.get("bound") else None
        return cls(rows, rec.get("config", {}), rec.get("eps_sensitivity", []), fit, bound)


def _bound_scale(h, k, q):
    return h ** -k * math.log(1.0 / h) ** q


def run_sweep(config: SweepConfig, fit_model: str | None = None) -> SweepResult:
    """One row per ``h`` (descending) with the predicted ``C h^{-k} (log 1/h)^q``.

    ``C`` is the configured constant or, if absent, the fitted one from
    :func:`bound_check`. With ``eps_sensitivity`` the smallest ``h`` is rerun
    at ``10 eps`` and ``eps / 10`` (skipped below the eps floor).
    """
    config.validate()
    kw = config.g_kwargs()
    rows = []
    for h in sorted(config.hs, reverse=True):
        plan = tau_plan(config.regime, h, **config.regime_params)
        t0 = time.perf_counter()
        res = g_of(h, config.eps, **kw)
        rows.append(SweepRow(h, config.eps, config.s, config.E, config.regime, res.g, res.nu_max,
                             res.worst_l, res.worst_nu, res.converged, res.n_modes, res.N,
                             plan.k, plan.q, wall_time=time.perf_counter() - t0))
        logger.info("h=%g g=%.6g (N=%d, modes=%d)", h, res.g, res.N, res.n_modes)
    sens = []
    if config.eps_sensitivity:
        h = rows[-1].h
        for factor in (10.0, 0.1):
            eps = config.eps * factor
            if eps < EPS_FLOOR:
                logger.info("eps sensitivity at %g skipped (below floor)", eps)
                continue
            sens.append({"h": h, "eps": eps, "g": g_of(h, eps, **kw).g})
    result = SweepResult(rows, config.as_record(), sens)
    result.bound = bound_check(result)
    C = config.C if config.C is not None else result.bound.C_fit
    for r in rows:
        r.bound = C * _bound_scale(r.h, r.k, r.q)
    if fit_model is not None:
        result.fit = fit_scaling(result, fit_model)
    return result


# -- fits --------------------------------------------------------------------

MODELS = ("pure-power", "power-with-log", "trapping")


def _lstsq(X, y):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise FitError("degenerate design matrix (need distinct h values)")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return coef, r2


def fit_scaling(result: SweepResult, model: str = "pure-power") -> FitResult:
    """Least-squares scaling fit over converged rows.

    ``pure-power``: ``log g = c + k log(1/h)``; ``power-with-log`` adds
    ``q log log(1/h)``; ``trapping``: ``g = c + b / h`` (exponential growth of
    the norm itself).
    """
    if model not in MODELS:
        raise FitError(f"unknown model {model!r}; choose from {MODELS}")
    rows = [r for r in result.rows if r.converged]
    if len(rows) < 3:
        raise FitError(f"need at least 3 converged rows, got {len(rows)}")
    h = np.array([r.h for r in rows])
    g = np.array([r.g for r in rows])
    x = np.log(1.0 / h)
    ones = np.ones_like(h)
    if model == "trapping":
        coef, r2 = _lstsq(np.column_stack([ones, 1.0 / h]), g)
        return FitResult(model, float(coef[1]), float(coef[0]), r2, len(rows))
    if np.any(g <= 0):
        raise FitError("log-log models need g > 0 on every row")
    if model == "pure-power":
        coef, r2 = _lstsq(np.column_stack([ones, x]), np.log(g))
        return FitResult(model, float(coef[1]), float(coef[0]), r2, len(rows))
    if np.any(x <= 1):
        raise FitError("power-with-log needs h < 1/e on every row")
    coef, r2 = _lstsq(np.column_stack([ones, x, np.log(x)]), np.log(g))
    return FitResult(model, float(coef[1]), float(coef[0]), r2, len(rows), float(coef[2]))


def bound_check(result: SweepResult, k: float | None = None, q: float | None = None,
                C_fit: float | None = None) -> BoundCheck:
    """Fitted constant of ``g <= C h^{-k} (log 1/h)^q`` and its tail trend.

    ``C_fit`` defaults to the max ratio over rows, so no row violates it.
    Passing needs a finite ``C_fit`` and ratios that do not increase along
    the smallest-h quartile (at least two rows).
    """
    rows = result.rows
    if not rows:
        raise ConfigurationError("empty sweep")
    ks = [r.k if k is None else k for r in rows]
    qs = [r.q if q is None else q for r in rows]
    ratios = [r.g / _bound_scale(r.h, kk, qq) for r, kk, qq in zip(rows, ks, qs)]
    C = max(ratios) if C_fit is None else C_fit
    violation = max(r.g - C * _bound_scale(r.h, kk, qq) for r, kk, qq in zip(rows, ks, qs))
    if len(rows) == 1:
        logger.warning("single-row sweep: bound check passes vacuously")
        return BoundCheck(C, ratios, violation, math.isfinite(C))
    tail = ratios[-max(2, math.ceil(len(rows) / 4)):]
    trend_ok = all(b <= a * (1 + 1e-12) for a, b in zip(tail, tail[1:]))
    return BoundCheck(C, ratios, violation, bool(math.isfinite(C) and trend_ok))


# -- outputs -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(result: SweepResult, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in result.rows:
            w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return path


def write_plot_data(result: SweepResult, path):
    """Two columns: ``log(1/h)`` and ``log g`` (rows with ``g <= 0`` omitted)."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write("# log(1/h) log(g)\n")
        for r in result.rows:
            if r.g > 0:
                fh.write(f"{math.log(1.0 / r.h)!r} {math.log(r.g)!r}\n")
    return path


def write_outputs(result: SweepResult, outdir, stem="sweep", emit_plot_data=False):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": write_csv(result, outdir / f"{stem}.csv")}
    paths["json"] = outdir / f"{stem}.json"
    paths["json"].write_text(json.dumps(result.as_record(), indent=2, default=str) + "\n")
    if emit_plot_data:
        paths["plot_data"] = write_plot_data(result, outdir / f"{stem}_plot.dat")
    return paths


def read_result(path) -> SweepResult:
    """Load a result from its JSON record or its CSV table."""
    path = Path(path)
    if path.suffix == ".json":
        return SweepResult.from_record(json.loads(path.read_text()))
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"h", "g", "converged"} - set(reader.fieldnames or ())
        if missing:
            raise ConfigurationError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for rec in reader:
            def num(key, default=math.nan):
                v = rec.get(key, "")
                return float(v) if v not in ("", None) else default
            rows.append(SweepRow(
                h=num("h"), eps=num("eps"), s=num("s"), E=num("E"), regime=rec.get("regime", ""),
                g=num("g"), nu_max=num("nu_max"),
                worst_l=int(rec["worst_l"]) if rec.get("worst_l") else None,
                worst_nu=num("worst_nu"), converged=rec["converged"] == "True",
                n_modes=int(num("n_modes", 0)), N=int(num("N", 0)),
                k=num("k"), q=num("q"), bound=num("bound", None)))
    return SweepResult(rows)

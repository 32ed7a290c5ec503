"""Carleman phases, pointwise inequality scans and energy-density identities.

Phases are nondecreasing functions ``phi(r) = lam * tau * int_0^r omega``
built from a regime-dependent density ``omega``; derivatives are always
analytic (``phi' = lam tau omega``, ``phi'' = lam tau omega'``). Every
``<~`` of the estimates is replaced by a measured constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError
from .exponents import check_regime, tau_plan
from .operator1d import Grid1D
from .potential import (HolderOscillatory, MollifierBump, Mollified, RadialPotential,
                        mollify)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def inequality_grid(n: int = 160, per_octave: int = 8) -> np.ndarray:
    """Geometric nodes ``2^{i/per_octave} - 1`` for ``i = 0..n``."""
    return 2.0 ** (np.arange(n + 1) / per_octave) - 1.0


def cumulative_integral(f: Callable, r: np.ndarray) -> np.ndarray:
    """``int_0^{r_i} f`` with 8-point Gauss-Legendre on every grid cell (and on [0, r_0])."""
    edges = np.concatenate([[0.0], np.asarray(r, dtype=float)])
    a, b = edges[:-1], edges[1:]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    cells = (f(x.ravel()).reshape(x.shape) @ _GL_W) * half
    return np.cumsum(cells)


@dataclass(frozen=True)
class Weight:
    """Phase density ``omega`` with analytic derivative."""

    regime: str
    omega: Callable
    domega: Callable
    params: dict = field(default_factory=dict)
    total: float = math.inf  # int_0^inf omega


def _power_weight(regime, p, params):
    return Weight(regime, lambda r: (r + 1.0) ** (-p), lambda r: -p * (r + 1.0) ** (-p - 1.0),
                  params, 1.0 / (p - 1.0))


def weight_omega(regime, *, delta=None, rho=None, beta=None, eps_log=None) -> Weight:
    """Density of the phase for ``regime``.

    ``delta_gt2`` and ``holder_beta_gt2`` use ``(r+1)^{3 - 2 delta}`` (resp.
    ``beta``); ``delta_le2``/``holder_beta_le2`` use ``(r+1)^{-1-eps_log}``;
    ``log_decay`` uses ``(r+1)^{-1} (log(r+2))^{-rho}``.
    """
    if regime == "delta_gt2":
        check_regime(regime, delta=delta)
        return _power_weight(regime, 2 * delta - 3, {"delta": delta})
    if regime == "holder_beta_gt2":
        if beta is None or not 2 < beta <= 3:
            raise ConfigurationError(f"holder_beta_gt2 needs 2 < beta <= 3, got {beta}")
        return _power_weight(regime, 2 * beta - 3, {"beta": beta})
    if regime in ("delta_le2", "holder_beta_le2"):
        if regime == "delta_le2" and delta is not None:
            check_regime(regime, delta=delta)
        if regime == "holder_beta_le2" and beta is not None and not 1 < beta <= 2:
            raise ConfigurationError(f"holder_beta_le2 needs 1 < beta <= 2, got {beta}")
        if eps_log is None or not 0 < eps_log < 1:
            raise ConfigurationError(f"{regime} needs eps_log in (0,1), got {eps_log}")
        return _power_weight(regime, 1.0 + eps_log, {"eps_log": eps_log})
    if regime == "log_decay":
        check_regime(regime, rho=rho)

        def omega(r):
            return (r + 1.0) ** -1 * np.log(r + 2.0) ** (-rho)

        def domega(r):
            L = np.log(r + 2.0)
            return -(L ** (-rho) / (r + 1.0) ** 2 + rho * L ** (-rho - 1.0) / ((r + 1.0) * (r + 2.0)))

        # x = log(r+2) turns the integral into int_{log 2}^inf x^{-rho} / (1 - e^{-x}) dx
        total, _ = integrate.quad(lambda x: x ** (-rho) / -math.expm1(-x), math.log(2.0), np.inf)
        return Weight(regime, omega, domega, {"rho": rho}, total)
    raise ConfigurationError(f"unknown regime {regime!r}")


@dataclass
class PhaseProfile:
    kind: str
    r: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    ddphi: np.ndarray | None = field(repr=False)
    lam: float = 1.0
    tau: float = 1.0
    weight: Weight | None = None
    eta: float | None = None
    s: float | None = None
    cap: float | None = None
    cap_ok: bool | None = None
    dominated: bool | None = None

    @property
    def phi_max(self) -> float:
        return float(np.max(self.phi))


def phase_phi(lam: float, tau: float, weight: Weight, grid) -> PhaseProfile:
    if lam < 1:
        raise DomainError("amplitude lam must be >= 1")
    if tau <= 0:
        raise DomainError("tau must be positive")
    r = np.asarray(grid, dtype=float)
    phi = lam * tau * cumulative_integral(weight.omega, r)
    return PhaseProfile("phi_regime", r, phi, lam * tau * weight.omega(r),
                        lam * tau * weight.domega(r), lam, tau, weight)


def eta_of(E: float) -> float:
    return 0.5 * min(1.0, E)


def phase_psi(V: RadialPotential, E: float, s: float, grid) -> PhaseProfile:
    """``psi(r) = int_0^r (|V|/eta + (sigma+1)^{-2s}) d sigma`` with its certificates.

    ``cap_ok`` certifies ``psi <= |V|_{L1}/eta + 1/(2s-1)`` node-wise and
    ``dominated`` certifies ``|V| <= eta psi'``.
    """
    if s <= 0.5:
        raise DomainError("s must exceed 1/2 (the weight integral diverges)")
    if E <= 0:
        raise DomainError("E must be positive")
    r = np.asarray(grid, dtype=float)
    eta = eta_of(E)
    l1 = V.l1_norm()
    if not math.isfinite(l1):
        raise DomainError("potential is not absolutely integrable")
    absv = cumulative_integral(lambda x: np.abs(V(x)), r)
    weight_part = (1.0 - (r + 1.0) ** (1.0 - 2.0 * s)) / (2.0 * s - 1.0)
    psi = absv / eta + weight_part
    dpsi = np.abs(V(r)) / eta + (r + 1.0) ** (-2.0 * s)
    cap = l1 / eta + 1.0 / (2.0 * s - 1.0)
    return PhaseProfile(
        "psi_L1", r, psi, dpsi, None, eta=eta, s=s, cap=cap,
        cap_ok=bool(np.all(psi <= cap * (1 + 1e-12))),
        dominated=bool(np.all(np.abs(V(r)) <= eta * dpsi * (1 + 1e-15))),
    )


@dataclass
class C0Report:
    c0: float
    worst_r: float


def check_c0(profile: PhaseProfile, tau: float | None = None) -> C0Report:
    """Smallest ``c0`` with ``2 phi'|phi''| + |phi''|^2/phi' <= c0^2 tau^2 (r+1)^{-3}`` on the grid."""
    tau = profile.tau if tau is None else tau
    p1, p2, r = profile.dphi, profile.ddphi, profile.r
    if p2 is None:
        raise ConfigurationError("profile carries no second derivative")
    if np.any(p1 <= 0):
        i = int(np.argmax(p1 <= 0))
        raise DomainError(f"phi' vanishes at r={r[i]}; the ratio |phi''|^2/phi' is singular")
    lhs = 2.0 * p1 * np.abs(p2) + p2 ** 2 / p1
    ratio = lhs * (r + 1.0) ** 3 / tau ** 2
    i = int(np.argmax(ratio))
    return C0Report(float(math.sqrt(ratio[i])), float(r[i]))


def margin_lambda(V_theta: RadialPotential, E: float, grid, lam0: float = 1.0,
                  max_doublings: int = 60):
    """Double ``lam`` until ``E + phi'^2 - V_theta >= E/2`` with ``phi' = lam (r+1)^{-2}``.

    Returns ``(lam, min margin)``.
    """
    r = np.asarray(grid, dtype=float)
    v = V_theta(r)
    lam = lam0
    for _ in range(max_doublings):
        margin = E + (lam * (r + 1.0) ** -2) ** 2 - v
        if np.all(margin >= E / 2):
            return lam, float(np.min(margin))
        lam *= 2.0
    raise ConfigurationError("no finite lam reached the E/2 margin")


# -- energy densities -------------------------------------------------------

def _padded(u):
    return np.concatenate([[0.0], u, [0.0]])


def _D(u, grid, h):
    up = _padded(u)
    return -1j * h * (up[2:] - up[:-2]) / (2.0 * grid.dr)


def conjugated_apply(u, grid: Grid1D, h, profile: PhaseProfile, nu, V, E, eps, sign=1):
    """Discrete ``e^{phi/h} Q e^{-phi/h} u``: ``D^2 + nu^2/r^2 + V - phi'^2 + h phi'' + 2i phi' D - E +- i eps``."""
    u = np.asarray(u, dtype=complex)
    r = grid.nodes
    up = _padded(u)
    d2 = -h * h * (up[2:] - 2.0 * u + up[:-2]) / grid.dr ** 2
    v = V(r) if V is not None else 0.0
    p1, p2 = profile.dphi, profile.ddphi
    return (d2 + (nu * nu / r ** 2 + v - p1 ** 2 + h * p2 - E + sign * 1j * eps) * u
            + 2j * p1 * _D(u, grid, h))


def conjugation_defect(u, grid: Grid1D, h, profile: PhaseProfile, nu, V, E, eps, sign=1) -> float:
    """Relative interior mismatch between ``Q_phi (e^{phi/h} u)`` and ``e^{phi/h} Q u``.

    Both sides use the 3-point stencil, so the defect is O(dr^2).
    """
    u = np.asarray(u, dtype=complex)
    r = grid.nodes
    up = _padded(u)
    v = V(r) if V is not None else 0.0
    qu = (-h * h * (up[2:] - 2.0 * u + up[:-2]) / grid.dr ** 2
          + (nu * nu / r ** 2 + v - E + sign * 1j * eps) * u)
    e = np.exp(profile.phi / h)
    lhs = conjugated_apply(e * u, grid, h, profile, nu, V, E, eps, sign)
    rhs = e * qu
    scale = np.max(np.abs(rhs[1:-1]))
    return float(np.max(np.abs(lhs - rhs)[1:-1]) / scale) if scale > 0 else 0.0


def ellipticity_radius(nu: float, E: float, Vsup: float) -> float:
    """Largest ``r`` with ``nu^2/r^2 + V - E >= 1`` guaranteed for every ``|V| <= Vsup``."""
    if nu < 0 or E <= 0 or Vsup < 0:
        raise DomainError("need nu >= 0, E > 0, Vsup >= 0")
    return nu / math.sqrt(1.0 + E + Vsup)


@dataclass
class EnergyDiagnostic:
    F: np.ndarray = field(repr=False)
    dF: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    residual: float
    W: np.ndarray | None = field(default=None, repr=False)


def energy_identity_residual(u, grid: Grid1D, h, profile: PhaseProfile, nu, E, eps, sign=1,
                             V=None, V_theta: Mollified | None = None, f=None,
                             r_min: float = 0.0) -> EnergyDiagnostic:
    """Compare a centered difference of the energy density with its analytic derivative.

    ``F = (E - nu^2/r^2 + phi'^2 - V_theta)|u|^2 + |D u|^2`` (``V_theta = 0``
    for the plain form). ``f`` is the right-hand side of the conjugated
    equation; when omitted it is computed by applying the discrete conjugated
    operator to ``u``. The residual is normalized by ``max |F|`` and measured
    on interior nodes with ``r >= r_min``. For ``nu > 0`` the centrifugal
    coefficient turns the O(dr^2) stencil error into O(dr^2/r) at the first
    nodes, so second-order decay needs ``r_min`` bounded away from 0.
    """
    u = np.asarray(u, dtype=complex)
    r = grid.nodes
    if u.shape != r.shape:
        raise ConfigurationError(f"u has shape {u.shape}, grid has {r.shape}")
    if profile.r.shape != r.shape or not np.allclose(profile.r, r):
        raise ConfigurationError("profile must be sampled on the grid nodes")
    if f is None:
        f = conjugated_apply(u, grid, h, profile, nu, V, E, eps, sign)
    p1, p2 = profile.dphi, profile.ddphi
    v = V(r) if V is not None else np.zeros_like(r)
    vt = V_theta(r) if V_theta is not None else np.zeros_like(r)
    dvt = V_theta.derivative(r) if V_theta is not None else np.zeros_like(r)
    Du = _D(u, grid, h)
    au, aDu = np.abs(u) ** 2, np.abs(Du) ** 2
    cross = u * np.conj(Du)
    F = (E - nu * nu / r ** 2 + p1 ** 2 - vt) * au + aDu
    rhs = (2.0 * (nu * nu / r ** 3 + p1 * p2) * au - dvt * au + 4.0 / h * p1 * aDu
           + 2.0 / h * np.imag((v - vt + h * p2) * cross)
           - 2.0 / h * np.imag(f * np.conj(Du))
           + sign * 2.0 * eps / h * np.real(cross))
    dF = (F[2:] - F[:-2]) / (2.0 * grid.dr)
    scale = np.max(np.abs(F))
    keep = r[1:-1] >= r_min
    if not keep.any():
        raise ConfigurationError(f"no interior nodes with r >= {r_min}")
    err = np.abs(dF - rhs[1:-1])[keep]
    res = float(np.max(err) / scale) if scale > 0 else 0.0
    W = None
    if V_theta is not None:
        W = np.abs(dvt) + (v - vt) ** 2 / (h * np.maximum(p1, np.finfo(float).tiny))
    return EnergyDiagnostic(F, dF, rhs[1:-1], res, W)


# -- W bound ----------------------------------------------------------------

@dataclass
class WReport:
    c_W: float
    c_W_refined: float
    worst_r: float
    passed: bool


def _w_ratio(V, V_theta, lam, h, tau, eps_log, weight, beta, r):
    diff = V(r) - V_theta(r)
    W = np.abs(V_theta.derivative(r)) + diff ** 2 / (lam * h * tau * weight.omega(r))
    bound = tau ** 2 * (r + 1.0) ** -3
    if beta != 3:
        bound = bound + eps_log / lam * (r + 1.0) ** (-1.0 - eps_log)
    return W / bound


def check_W_bound(V, V_theta: Mollified, *, theta, lam, h, tau, eps_log, regime, beta,
                  grid) -> WReport:
    """Measured constant in ``W <~ tau^2 (r+1)^{-3} + lam^{-1} eps (r+1)^{-1-eps}``.

    ``W = |V_theta'| + (lam h tau)^{-1} omega^{-1} |V - V_theta|^2``; the
    second bound term is dropped for ``beta = 3``. Passing needs a finite
    constant that changes by less than a factor 2 when every grid cell is
    bisected.
    """
    if not math.isclose(V_theta.theta, theta, rel_tol=1e-12):
        raise ConfigurationError("V_theta was mollified at a different theta than the plan")
    if regime not in ("holder_beta_gt2", "holder_beta_le2"):
        raise ConfigurationError(f"W bound applies to Hoelder regimes, not {regime}")
    weight = weight_omega(regime, beta=beta, eps_log=eps_log)
    r = np.asarray(grid, dtype=float)
    ratio = _w_ratio(V, V_theta, lam, h, tau, eps_log, weight, beta, r)
    fine = np.sort(np.concatenate([r, 0.5 * (r[1:] + r[:-1])]))
    ratio_f = _w_ratio(V, V_theta, lam, h, tau, eps_log, weight, beta, fine)
    c, cf = float(np.max(ratio)), float(np.max(ratio_f))
    ok = math.isfinite(c) and math.isfinite(cf) and c > 0 and 0.5 <= cf / c <= 2.0
    if c == 0 and cf == 0:
        ok = True
    return WReport(c, cf, float(r[int(np.argmax(ratio))]), ok)


# -- certificate table -------------------------------------------------------

def carleman_certificate(regime, h, *, delta=None, rho=None, alpha=None, beta=None, E=1.0,
                         s=1.0, lam=1.0, grid=None, terms=12):
    """One record of measured constants for ``regime`` at ``h``.

    Always reports ``c0`` and ``phi_max / tau1``; Hoelder regimes add the
    margin amplitude and ``c_W`` for a Weierstrass-type potential with the
    given ``(alpha, beta)``.
    """
    plan = tau_plan(regime, h, delta=delta, rho=rho, alpha=alpha, beta=beta, lam=lam)
    grid = inequality_grid() if grid is None else grid
    weight = weight_omega(regime, delta=delta, rho=rho, beta=beta, eps_log=plan.eps_log)
    rec = {"regime": regime, "h": h, "tau": plan.tau, "tau1": plan.tau1}
    rec.update(plan.params)
    lam_phase = 1.0 if regime == "delta_gt2" else lam
    if regime.startswith("holder"):
        V = HolderOscillatory(alpha=alpha, beta=beta, terms=terms)
        Vt = mollify(V, plan.theta, MollifierBump.resolving(V, plan.theta))
        lam_margin, _ = margin_lambda(Vt, E, grid)
        lam_phase = max(lam, lam_margin)
        rep = check_W_bound(V, Vt, theta=plan.theta, lam=lam_phase, h=h, tau=plan.tau,
                            eps_log=plan.eps_log, regime=regime, beta=beta, grid=grid)
        rec.update(theta=plan.theta, lam_margin=lam_margin, c_W=rep.c_W, W_pass=rep.passed)
    prof = phase_phi(lam_phase, plan.tau, weight, grid)
    c0 = check_c0(prof)
    rec.update(lam=lam_phase, c0=c0.c0, phi_max=prof.phi_max,
               phi_max_over_tau1=prof.phi_max / plan.tau1,
               phi_inf_over_tau1=lam_phase * plan.tau * weight.total / plan.tau1)
    return rec

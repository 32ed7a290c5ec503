"""Regime table for the Carleman scales and the exponent linear systems.

Every scale is written as ``h^{-k} eps^{-q}`` with ``eps = 1/log(1/h)``;
the predicted bound is ``g <= C h^{-k} (log 1/h)^q`` with ``k = k0 + 1``
because the phase maximum ``tau1`` enters through ``exp(C tau1 / h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ConfigurationError, DomainError

REGIMES = ("delta_gt2", "delta_le2", "log_decay", "holder_beta_gt2", "holder_beta_le2")


def eps_log(h):
    return 1.0 / math.log(1.0 / h)


@dataclass
class ExponentSolution:
    """Exponents of ``tau, 1/theta, b, a`` (``k``) and of their ``1/eps`` factors (``q``)."""

    k: tuple
    q: tuple
    residual: float = 0.0
    exact: bool = False

    @property
    def k0(self):
        return self.k[0]

    @property
    def q0(self):
        return self.q[0]


def _solve_exact(A, b):
    n = len(b)
    M = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(A, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError
        M[c], M[p] = M[p], M[c]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c] / M[c][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def _solve(A, b, exact):
    if exact:
        return _solve_exact(A, b), 0.0
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    if abs(np.linalg.det(A)) < 1e-12 * np.linalg.norm(A) ** len(b):
        raise ZeroDivisionError
    x = np.linalg.solve(A, b)
    res = float(np.max(np.abs(A @ x - b)) / max(1.0, np.max(np.abs(b))))
    if res > 1e-12:
        raise ArithmeticError(f"exponent system residual {res:.2e} exceeds 1e-12")
    return [float(v) for v in x], res


def _systems(alpha, beta, one):
    """Coefficient matrices for the k- and q-systems (rows in the printed order)."""
    a, b = alpha, beta
    if b == 3:
        # tau^2 = theta^{alpha-1} = (h tau)^{-1} theta^{2 alpha}; unknowns (k0, k1)
        A = [[2 * one, -(1 - a)], [3 * one, 2 * a]]
        return A, [0 * one, one], A, [0 * one, 0 * one]
    if 2 < b < 3:
        # unknowns (k0, k1, k2)
        A = [[2 * one, -(1 - a), -(3 - b)],
             [3 * one, 2 * a, 0 * one],
             [0 * one, 1 - a, -(b - 1)]]
        return A, [0 * one, one, 0 * one], A, [0 * one, 0 * one, -one]
    # 1 < b <= 2; unknowns (k0, k1, k2, k3)
    A = [[2 * one, -(1 - a), -(3 - b), 0 * one],
         [3 * one, 2 * a, 0 * one, -2 * (2 - b)],
         [0 * one, 1 - a, -(b - 1), 0 * one],
         [one, 2 * a, 0 * one, 2 * (b - 1)]]
    return A, [0 * one, one, 0 * one, one], A, [0 * one, 0 * one, -one, one]


def solve_exponent_system(alpha, beta, exact=None) -> ExponentSolution:
    """Solve the balancing relations between ``tau``, ``theta``, ``b`` and ``a``.

    Exact rational arithmetic is used when both inputs are rational numbers
    (``int``/``Fraction``); floats are solved in double precision and the
    residual is certified to 1e-12.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0,1), got {alpha}")
    if not 1 < beta <= 3:
        raise DomainError(f"beta must lie in (1,3], got {beta}")
    if exact is None:
        exact = isinstance(alpha, Rational) and isinstance(beta, Rational)
    one = Fraction(1) if exact else 1.0
    if exact:
        alpha, beta = Fraction(alpha), Fraction(beta)
    Ak, bk, Aq, bq = _systems(alpha, beta, one)
    try:
        k, rk = _solve(Ak, bk, exact)
        q, rq = _solve(Aq, bq, exact)
    except ZeroDivisionError:
        side = "1 < beta <= 2" if beta <= 2 else "2 < beta <= 3"
        raise ConfigurationError(
            f"exponent system singular at alpha={alpha}, beta={beta}; use the {side} regime") from None
    pad = (None,) * (4 - len(k))
    return ExponentSolution(tuple(k) + pad, tuple(q) + pad, max(rk, rq), exact)


def closed_form_k0q0(alpha, beta):
    """Printed closed forms ``(k0, q0, q)`` for the Hoelder regimes."""
    a, b = alpha, beta
    if b == 3:
        return (1 - a) / (a + 3), 0 * a, 0 * a
    if 2 < b < 3:
        den = 2 * a * b - 5 * a + 3
        q0 = a * (3 - b) / den
        return (1 - a) / den, q0, q0
    den = 2 * b - a - 1
    q0 = (a - b + 2) / den
    return (1 - a) / den, q0, q0 + 1


def theorem_exponents(regime, *, delta=None, rho=None, alpha=None, beta=None):
    """``(k, q)`` of the bound ``g <= C h^{-k} (log 1/h)^q`` in closed form."""
    if regime == "delta_gt2":
        return Fraction(4, 3), 0
    if regime == "delta_le2":
        return 2 * delta / (2 * delta - 1), (delta + 1) / (2 * delta - 1)
    if regime == "log_decay":
        return 2, 0
    a, b = alpha, beta
    if b == 3:
        return 4 / (a + 3), 0 * a
    if 2 < b < 3:
        den = 2 * a * b - 5 * a + 3
        return (2 * a * b - 6 * a + 4) / den, a * (3 - b) / den
    den = 2 * b - a - 1
    return (2 * b - 2 * a) / den, (b + 1) / den


def check_regime(regime, *, delta=None, rho=None, alpha=None, beta=None):
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}; choose from {REGIMES}")
    if regime in ("delta_gt2", "delta_le2"):
        if delta is None:
            raise ConfigurationError(f"{regime} needs delta")
        if delta <= 1:
            raise DomainError(f"delta must exceed 1, got {delta}")
        if (regime == "delta_gt2") != (delta > 2):
            raise ConfigurationError(f"delta={delta} does not belong to {regime}")
    elif regime == "log_decay":
        if rho is None:
            raise ConfigurationError("log_decay needs rho")
        if rho <= 1:
            raise DomainError(f"rho must exceed 1, got {rho}")
    else:
        if alpha is None or beta is None:
            raise ConfigurationError(f"{regime} needs alpha and beta")
        if not 0 < alpha < 1:
            raise DomainError(f"alpha must lie in (0,1), got {alpha}")
        if beta <= 1:
            raise DomainError(f"beta must exceed 1, got {beta}")
        if beta > 3:
            raise ConfigurationError("beta > 3 is covered by the beta = 3 bound; pass beta=3")
        if (regime == "holder_beta_gt2") != (beta > 2):
            raise ConfigurationError(f"beta={beta} does not belong to {regime}")


def regime_for(potential) -> str:
    """Regime implied by a potential's declared metadata."""
    if potential.kind == "LogDecay":
        return "log_decay"
    if potential.alpha is not None and potential.beta is not None:
        return "holder_beta_gt2" if potential.beta > 2 else "holder_beta_le2"
    if potential.delta is not None:
        return "delta_gt2" if potential.delta > 2 else "delta_le2"
    raise ConfigurationError(f"{potential.kind} declares no decay metadata; state the regime")


@dataclass
class ExponentPlan:
    regime: str
    h: float
    eps_log: float
    tau: float
    tau1: float
    k0: float
    q0: float
    q_tau1: float
    k: float
    q: float
    theta: float | None = None
    a: float | None = None
    b: float | None = None
    b0: float | None = None
    ks: tuple = ()
    qs: tuple = ()
    params: dict = field(default_factory=dict)

    def as_record(self):
        rec = {k: v for k, v in self.__dict__.items() if k not in ("ks", "qs", "params")}
        rec.update(self.params)
        for i, (kk, qq) in enumerate(zip(self.ks, self.qs)):
            rec[f"k{i}"], rec[f"q{i}"] = kk, qq
        return rec


def tau_plan(regime, h, *, delta=None, rho=None, alpha=None, beta=None, lam=1.0) -> ExponentPlan:
    """Fill the scales of ``regime`` at semiclassical parameter ``h``."""
    if not 0 < h < math.exp(-1):
        raise DomainError(f"h must lie in (0, 1/e), got {h}")
    check_regime(regime, delta=delta, rho=rho, alpha=alpha, beta=beta)
    e = eps_log(h)
    params = {k: v for k, v in dict(delta=delta, rho=rho, alpha=alpha, beta=beta).items()
              if v is not None}
    theta = a = b = b0 = None
    if regime == "delta_gt2":
        ks, qs = (1 / 3,), (0.0,)
        q_tau1 = 0.0
    elif regime == "delta_le2":
        den = 2 * delta - 1
        ks, qs = (1 / den, None, None, 1 / den), ((2 - delta) / den, None, None, 3 / (2 * den))
        q_tau1 = qs[0] + 1
        a = h ** -ks[3] * e ** -qs[3]
    elif regime == "log_decay":
        ks, qs = (1.0,), (0.0,)
        q_tau1 = 0.0
    else:
        sol = solve_exponent_system(alpha, beta)
        ks, qs = tuple(float(x) if x is not None else None for x in sol.k), \
            tuple(float(x) if x is not None else None for x in sol.q)
        q_tau1 = qs[0] + 1 if beta <= 2 else qs[0]
        theta = h ** ks[1] * e ** qs[1]
        if ks[2] is not None:
            b = h ** -ks[2] * e ** -qs[2]
            b0 = lam ** (1 / (beta - 1))
        if ks[3] is not None:
            a = h ** -ks[3] * e ** -qs[3]
    k0, q0 = ks[0], qs[0]
    tau = h ** -k0 * e ** -q0
    tau1 = h ** -k0 * e ** -q_tau1
    return ExponentPlan(regime, h, e, tau, tau1, k0, q0, q_tau1, k0 + 1, q_tau1,
                        theta, a, b, b0, ks, qs, params)


@dataclass
class Certificate:
    k_is_k0_plus_1: bool
    identity_residual: float
    theorem_k: float
    theorem_q: float
    theorem_match: bool
    C: float
    C_prime: float
    h0: float | None
    passed: bool


def consistency_certificate(plan: ExponentPlan, C=1.0, E=1.0, Vsup=1.0, C_prime=None,
                            n_scan=4000) -> Certificate:
    """Check the exponent bookkeeping of ``plan`` and locate an ``h0``.

    ``h0`` is the largest scanned ``h`` such that
    ``log(M + 1) <= C' h^{-k} (log 1/h)^q`` holds on the whole scan below it,
    with ``M = (2 + E + |V|_inf) exp(C tau1 / h)`` and ``C' = 2 C`` by default.
    """
    C_prime = 2.0 * C if C_prime is None else C_prime
    k_ok = math.isclose(plan.k, plan.k0 + 1, rel_tol=0, abs_tol=1e-15)
    lhs = plan.tau1 / plan.h
    rhs = plan.h ** -plan.k * plan.eps_log ** -plan.q
    resid = abs(lhs - rhs) / rhs
    tk, tq = theorem_exponents(plan.regime, **plan.params)
    match = math.isclose(tk, plan.k, abs_tol=1e-12) and math.isclose(tq, plan.q, abs_tol=1e-12)

    hs = np.logspace(-12, math.log10(math.exp(-1)) - 1e-9, n_scan)
    L = np.log(1.0 / hs)
    scale = hs ** -plan.k * L ** plan.q
    log_m1 = np.logaddexp(math.log(2.0 + E + Vsup) + C * scale, 0.0)
    ok = log_m1 <= C_prime * scale
    h0 = None
    if ok[0]:
        bad = np.flatnonzero(~ok)
        h0 = float(hs[bad[0] - 1]) if bad.size else float(hs[-1])
    return Certificate(k_ok, float(resid), tk, tq, match, C, C_prime, h0,
                       bool(k_ok and resid < 1e-12 and match and h0 is not None))

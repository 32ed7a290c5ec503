"""Finite-difference half-line operators and weighted resolvent norms.

The per-mode operator ``-h^2 d^2/dr^2 + nu^2/r^2 + V - E +- i eps`` is
discretized with the 3-point stencil on ``r_j = j dr``, ``j = 1..N``, with
Dirichlet conditions at ``r = 0`` and ``r = R``. The matrix is complex
symmetric: a real symmetric tridiagonal part plus ``+- i eps`` on the
diagonal, so its adjoint is the conjugate-sign operator.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import lapack
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, DomainError, NumericalBreakdown
from .modes import build_modes, nonspectral_nus

logger = logging.getLogger(__name__)

EPS_FLOOR = 1e-6


@dataclass(frozen=True)
class Grid1D:
    R: float
    N: int

    def __post_init__(self):
        if self.R <= 0 or self.N < 3:
            raise DomainError("grid needs R > 0 and N >= 3 interior nodes")

    @property
    def dr(self) -> float:
        return self.R / (self.N + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.dr * np.arange(1, self.N + 1)

    @classmethod
    def resolved(cls, R, h, E, Vsup, points_per_wavelength=10):
        """Coarsest grid with ``dr <= h / (ppw sqrt(E + |V|_inf))``."""
        dr_max = h / (points_per_wavelength * math.sqrt(E + Vsup))
        return cls(R, max(3, math.ceil(R / dr_max) - 1))


def cap_profile(grid: Grid1D, strength: float, fraction: float = 0.1) -> np.ndarray:
    """Linear absorbing ramp rising from 0 to ``strength`` over the last ``fraction`` of the domain."""
    start = (1.0 - fraction) * grid.R
    return strength * np.clip((grid.nodes - start) / (fraction * grid.R), 0.0, None)


@dataclass(frozen=True, eq=False)
class DiscreteRadialOperator:
    grid: Grid1D
    h: float
    nu: float
    E: float
    eps: float
    sign: int
    v: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    off: float

    @cached_property
    def factors(self):
        n = self.grid.N
        sub = np.full(n - 1, self.off, dtype=complex)
        dl, d, du, du2, ipiv, info = lapack.zgttrf(sub, self.diag.astype(complex), sub.copy())
        if info > 0:
            raise NumericalBreakdown(f"zero pivot at node {info - 1}", node=info - 1)
        return dl, d, du, du2, ipiv

    def matvec(self, u):
        u = np.asarray(u)
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        return out

    def dense(self) -> np.ndarray:
        n = self.grid.N
        return (np.diag(self.diag) + np.diag(np.full(n - 1, self.off), 1)
                + np.diag(np.full(n - 1, self.off), -1))

    def _solve(self, f):
        u, info = lapack.zgttrs(*self.factors, f)
        return u

    def _solve_adjoint(self, f):
        # op^H = conj(op) because op is complex symmetric
        return np.conj(self._solve(np.conj(f)))


def _samples(V, grid):
    if callable(V):
        return np.asarray(V(grid.nodes), dtype=float)
    v = np.asarray(V, dtype=float)
    if v.shape != (grid.N,):
        raise ConfigurationError(f"expected {grid.N} potential samples, got {v.shape}")
    return v


def assemble(h, nu, V, E, eps, sign, grid: Grid1D, cap: float = 0.0) -> DiscreteRadialOperator:
    """Tridiagonal ``D_r^2 + nu^2/r^2 + V - E +- i eps`` on ``grid``.

    ``V`` is a potential (callable) or its samples at the nodes. A nonzero
    ``cap`` adds an absorbing ramp ``+- i W(r)`` on the outer tenth of the
    domain, with the same sign as ``eps`` so the imaginary part only grows.
    """
    if not eps > 0:
        raise DomainError("eps must be strictly positive")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    v = _samples(V, grid)
    r = grid.nodes
    k = h * h / grid.dr ** 2
    imag = eps + (cap_profile(grid, cap) if cap else 0.0)
    diag = 2.0 * k + nu * nu / r ** 2 + v - E + sign * 1j * imag
    return DiscreteRadialOperator(grid, h, nu, E, eps, sign, v, diag, -k)


def solve(op: DiscreteRadialOperator, f, check: bool = True):
    """Solve ``op u = f`` by tridiagonal LU with partial pivoting."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (op.grid.N,):
        raise ConfigurationError(f"right-hand side must have length {op.grid.N}")
    u = op._solve(f)
    if check:
        nf = np.linalg.norm(f)
        res = np.linalg.norm(op.matvec(u) - f) / nf if nf else 0.0
        if res > 1e-10:
            logger.warning("relative residual %.2e exceeds 1e-10 (nu=%g)", res, op.nu)
    return u


def weights(grid: Grid1D, s: float) -> np.ndarray:
    return (grid.nodes + 1.0) ** (-s)


@dataclass
class NormEstimate:
    sigma: float
    converged: bool
    iterations: int


def weighted_resolvent_norm(op: DiscreteRadialOperator, s: float, tol: float = 1e-8,
                            maxiter: int = 10_000, seed: int = 0) -> NormEstimate:
    """Largest singular value of ``W op^{-1} W``, ``W = diag((r+1)^{-s})``.

    Power iteration on the Hermitian square. The estimates increase
    monotonically, so the remaining error is extrapolated from the ratio of
    successive increments; iteration stops once that falls below a tenth of
    ``tol`` relative to the current estimate.
    """
    if s <= 0.5:
        raise DomainError("weight exponent must exceed 1/2")
    w = weights(op.grid, s)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.grid.N) + 1j * rng.standard_normal(op.grid.N)
    x /= np.linalg.norm(x)
    sigma_prev = 0.0
    step_prev = None
    for it in range(1, maxiter + 1):
        y = w * op._solve(w * x)
        sigma = float(np.linalg.norm(y))
        z = w * op._solve_adjoint(w * y)
        nz = np.linalg.norm(z)
        if nz == 0:
            return NormEstimate(0.0, True, it)
        x = z / nz
        step = abs(sigma - sigma_prev)
        if step_prev is not None and step_prev > 0:
            ratio = min(step / step_prev, 0.999999)
            remaining = step * max(1.0, ratio / (1.0 - ratio))
            if remaining <= 0.1 * tol * sigma:
                return NormEstimate(sigma, True, it)
        elif step == 0 and it > 1:
            return NormEstimate(sigma, True, it)
        sigma_prev, step_prev = sigma, step
    logger.warning("power iteration hit %d iterations (nu=%g)", maxiter, op.nu)
    return NormEstimate(sigma_prev, False, maxiter)


@dataclass
class ModeNorm:
    l: int | None
    nu: float
    sigma: float
    converged: bool
    iterations: int


@dataclass
class GResult:
    g: float
    worst_l: int | None
    worst_nu: float
    nu_max: float
    converged: bool
    n_modes: int
    N: int
    modes: list = field(repr=False, default_factory=list)


def _mode_norm(job):
    l, nu, h, v, E, eps, sign, grid, s, cap, tol, maxiter, seed = job
    op = assemble(h, nu, v, E, eps, sign, grid, cap=cap)
    est = weighted_resolvent_norm(op, s, tol=tol, maxiter=maxiter, seed=seed)
    return ModeNorm(l, nu, est.sigma, est.converged, est.iterations)


def _run(jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_mode_norm, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_mode_norm(j) for j in jobs]


def _refine_peak(job, lo, hi, xatol=1e-10):
    """Maximize sigma over ``nu`` in [lo, hi] (bounded Brent on -log sigma)."""
    seen = {}

    def objective(nu):
        res = _mode_norm((None, float(nu)) + job[2:])
        seen[nu] = res
        return -math.log(res.sigma)

    minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    return max(seen.values(), key=lambda m: m.sigma)


def g_of(h, eps, s, d, V, E, R, *, sign=1, points_per_wavelength=10, cap=0.0, margin=1.0,
         nu_scan="spectral", per_gap=1, refine=8, extra_nus=None, workers=1, tol=1e-8,
         maxiter=10_000, seed=0, eps_floor=EPS_FLOOR) -> GResult:
    """``log`` of the largest per-mode weighted resolvent norm.

    The operator norm of a direct sum is the maximum over its blocks, so
    multiplicities do not enter. The reduction runs in fixed mode order and
    is identical for any ``workers`` count.

    With ``nu_scan="continuous"`` the maximum is also taken over non-spectral
    ``nu`` in [0, nu_max]: ``per_gap`` extra samples between consecutive
    spectral values, then bounded refinement around the ``refine`` largest
    sampled local maxima. This upper envelope locates trapped resonances
    that the spectral values straddle; it is a diagnostic, never smaller than
    the spectral result.
    """
    if eps < eps_floor:
        raise DomainError(f"eps={eps} is below the floor {eps_floor}")
    if nu_scan not in ("spectral", "continuous"):
        raise ConfigurationError(f"unknown nu_scan {nu_scan!r}")
    Vsup = V.sup_norm
    modes = build_modes(h, d, R, E, Vsup, margin=margin)
    grid = Grid1D.resolved(R, h, E, Vsup, points_per_wavelength)
    v = _samples(V, grid)
    common = (h, v, E, eps, sign, grid, s, cap, tol, maxiter, seed)
    pairs = [(m.l, m.nu) for m in modes]
    if nu_scan == "continuous":
        pairs += [(None, float(nu)) for nu in nonspectral_nus(modes, per_gap)]
        pairs.append((None, float(modes.nu_max)))
    if extra_nus is not None:
        pairs += [(None, float(nu)) for nu in extra_nus]
    results = _run([(l, nu) + common for l, nu in pairs], workers)
    if nu_scan == "continuous":
        order = sorted(range(len(results)), key=lambda i: results[i].nu)
        scan = [results[i] for i in order]
        peaks = [i for i in range(1, len(scan) - 1)
                 if scan[i].sigma >= scan[i - 1].sigma and scan[i].sigma >= scan[i + 1].sigma]
        peaks = sorted(peaks, key=lambda i: (-scan[i].sigma, i))[:refine]
        for i in peaks:
            results.append(_refine_peak((None, None) + common, scan[i - 1].nu, scan[i + 1].nu))
    best = max(range(len(results)), key=lambda i: results[i].sigma)
    top = results[best]
    return GResult(
        g=math.log(top.sigma),
        worst_l=top.l,
        worst_nu=top.nu,
        nu_max=modes.nu_max,
        converged=all(m.converged for m in results),
        n_modes=len(modes),
        N=grid.N,
        modes=results,
    )

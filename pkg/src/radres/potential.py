"""Radial potential families, mollification and class-membership scans.

Every family is an immutable object mapping radii ``r >= 0`` to real values.
Families carry the decay/regularity metadata (``delta``, ``rho``, ``alpha``,
``beta``) that the regime selection and the envelope checks rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError

__all__ = [
    "RadialPotential",
    "PowerDecay",
    "LogDecay",
    "HolderOscillatory",
    "BarrierWell",
    "Sampled",
    "SumPotential",
    "Mollified",
    "MollifierBump",
    "EnvelopeReport",
    "MollifyReport",
    "evaluate",
    "envelope_check",
    "holder_scan",
    "holder_seminorm",
    "mollify",
    "mollify_error_report",
    "decreasing_majorant",
    "DEFAULT_OFFSETS",
]

DEFAULT_OFFSETS = tuple(2.0 ** -j for j in range(1, 11))


def _as_radius(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("potentials are defined for r >= 0 only")
    return arr


class RadialPotential:
    """Base class for a bounded real radial potential.

    Subclasses implement ``_values`` (vectorized over a float array) and
    ``sup_norm``. Those with a closed-form derivative set
    ``differentiable = True`` and implement ``_derivative``.
    """

    kind = "Custom-sampled"
    differentiable = False
    delta: float | None = None
    rho: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def __call__(self, r):
        arr = _as_radius(r)
        out = self._values(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def derivative(self, r):
        if not self.differentiable:
            raise ConfigurationError(f"{self.kind} has no closed-form derivative")
        arr = _as_radius(r)
        out = self._derivative(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def _values(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _derivative(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    @property
    def envelope_constant(self) -> float | None:
        """Constant C of the family's own decay envelope, when it has one."""
        return None

    def l1_norm(self) -> float:
        val, _ = integrate.quad(lambda x: abs(float(self(x))), 0.0, np.inf, limit=500)
        return val

    def __add__(self, other):
        if not isinstance(other, RadialPotential):
            return NotImplemented
        return SumPotential((self, other))


@dataclass(frozen=True, eq=False)
class PowerDecay(RadialPotential):
    """``C (r+1)^{-delta}``; saturates the short-range envelope exactly."""

    C: float = 1.0
    delta: float = 2.0

    kind = "PowerDecay"
    differentiable = True

    def __post_init__(self):
        if not self.delta > 1:
            raise DomainError(f"decay rate must exceed 1, got {self.delta}")

    def _values(self, r):
        return self.C * (r + 1.0) ** (-self.delta)

    def _derivative(self, r):
        return -self.delta * self.C * (r + 1.0) ** (-self.delta - 1.0)

    @property
    def sup_norm(self):
        return abs(self.C)

    @property
    def envelope_constant(self):
        return abs(self.C)

    def l1_norm(self):
        return abs(self.C) / (self.delta - 1.0)


@dataclass(frozen=True, eq=False)
class LogDecay(RadialPotential):
    """``C (r+1)^{-1} (log(r+2))^{-rho}``, the slowest decay still handled."""

    C: float = 1.0
    rho: float = 2.0

    kind = "LogDecay"
    differentiable = True

    def __post_init__(self):
        if not self.rho > 1:
            raise DomainError(f"log-decay power must exceed 1, got {self.rho}")

    def _values(self, r):
        return self.C / (r + 1.0) * np.log(r + 2.0) ** (-self.rho)

    def _derivative(self, r):
        L = np.log(r + 2.0)
        return -self.C * (L ** (-self.rho) / (r + 1.0) ** 2
                          + self.rho * L ** (-self.rho - 1.0) / ((r + 1.0) * (r + 2.0)))

    @property
    def sup_norm(self):
        return abs(self.C) * math.log(2.0) ** (-self.rho)

    @property
    def envelope_constant(self):
        return abs(self.C)

    def l1_norm(self):
        # substitute x = log(r+2) on the tail where the closed form is unavailable
        head, _ = integrate.quad(lambda x: float(abs(self(x))), 0.0, 50.0, limit=200)
        tail, _ = integrate.quad(
            lambda t: abs(self.C) * t ** (-self.rho) / -math.expm1(-t),
            math.log(52.0), np.inf, limit=200)
        return head + tail


@dataclass(frozen=True, eq=False)
class HolderOscillatory(RadialPotential):
    """Truncated Weierstrass sum times a polynomial decay envelope.

    ``C * sum_{k=0}^{terms} 2^{-alpha k} cos(2^k r) * (1+r)^{-beta}``.
    """

    alpha: float = 0.5
    beta: float = 3.0
    C: float = 1.0
    terms: int = 12

    kind = "HolderOscillatory"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"Hoelder exponent must lie in (0,1), got {self.alpha}")
        if not self.beta > 1:
            raise DomainError(f"Hoelder decay must exceed 1, got {self.beta}")

    @cached_property
    def _freqs(self):
        k = np.arange(self.terms + 1)
        return 2.0 ** k, 2.0 ** (-self.alpha * k)

    @property
    def delta(self):
        return self.beta

    @property
    def max_frequency(self) -> float:
        return 2.0 ** self.terms

    def _values(self, r):
        freq, amp = self._freqs
        s = np.cos(np.multiply.outer(r, freq)) @ amp
        return self.C * s * (1.0 + r) ** (-self.beta)

    @property
    def sup_norm(self):
        return abs(self.C) * float(np.sum(self._freqs[1]))

    @property
    def envelope_constant(self):
        return self.sup_norm


@dataclass(frozen=True, eq=False)
class BarrierWell(RadialPotential):
    """Piecewise-constant trap: ``-depth`` on [0, r_in), ``height`` on [r_in, r_out]."""

    height: float = 2.0
    r_in: float = 1.0
    r_out: float = 2.0
    depth: float = 0.0

    kind = "BarrierWell"

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ConfigurationError("need 0 <= r_in < r_out")

    def _values(self, r):
        out = np.where((r >= self.r_in) & (r <= self.r_out), self.height, 0.0)
        return np.where(r < self.r_in, -self.depth, out)

    @property
    def sup_norm(self):
        return max(abs(self.height), abs(self.depth))

    def l1_norm(self):
        return abs(self.height) * (self.r_out - self.r_in) + abs(self.depth) * self.r_in


@dataclass(frozen=True, eq=False)
class Sampled(RadialPotential):
    """Linear interpolation of tabulated samples; zero beyond the last radius."""

    r: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)
    delta: float | None = None
    C: float | None = None

    kind = "Custom-sampled"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ConfigurationError("samples must be two equal-length 1D columns")
        if np.any(np.diff(r) <= 0):
            raise ConfigurationError("sample radii must be strictly increasing")
        if r[0] < 0:
            raise DomainError("sample radii must be nonnegative")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("sample values must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_file(cls, path, **meta):
        data = np.loadtxt(Path(path), ndmin=2)
        if data.shape[1] != 2:
            raise ConfigurationError(f"{path}: expected two columns (r, V)")
        return cls(data[:, 0], data[:, 1], **meta)

    def _values(self, r):
        return np.interp(r, self.r, self.v, left=self.v[0], right=0.0)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.v)))

    @property
    def envelope_constant(self):
        return self.C


@dataclass(frozen=True, eq=False)
class SumPotential(RadialPotential):
    """Pointwise sum; decay metadata is not inferred and must be configured."""

    parts: tuple = ()

    kind = "Sum"

    def _values(self, r):
        return sum(p._values(r) for p in self.parts)

    @property
    def differentiable(self):
        return all(p.differentiable for p in self.parts)

    def _derivative(self, r):
        return sum(p._derivative(r) for p in self.parts)

    @property
    def sup_norm(self):
        # an upper bound; exact for same-sign parts peaking together
        return float(sum(p.sup_norm for p in self.parts))


@dataclass(frozen=True)
class MollifierBump:
    """Normalized bump ``c exp(-1/(s(1-s)))`` on (0,1) with Gauss-Legendre nodes.

    ``panels`` splits [0,1] into equal panels of ``n_nodes`` nodes each; one
    panel suffices unless the mollified function oscillates on scales well
    below the smoothing length.
    """

    n_nodes: int = 64
    panels: int = 1

    @cached_property
    def scale(self) -> float:
        mass, _ = integrate.quad(self._raw, 0.0, 1.0, epsabs=1e-16, epsrel=1e-14)
        return 1.0 / mass

    @staticmethod
    def _raw(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = (s > 0) & (s < 1)
        si = s[inside]
        out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
        return out if out.ndim else float(out)

    def density(self, s):
        return self.scale * self._raw(s)

    def density_derivative(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = (s > 0) & (s < 1)
        si = s[inside]
        q = si * (1.0 - si)
        out[inside] = self.scale * np.exp(-1.0 / q) * (1.0 - 2.0 * si) / q ** 2
        return out

    @cached_property
    def nodes_weights(self):
        x, w = np.polynomial.legendre.leggauss(self.n_nodes)
        edges = np.linspace(0.0, 1.0, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    @cached_property
    def rho_weights(self):
        """Quadrature weights already multiplied by the bump and its derivative."""
        s, w = self.nodes_weights
        return w * self.density(s), w * self.density_derivative(s)

    @property
    def mass(self) -> float:
        return float(np.sum(self.rho_weights[0]))

    @property
    def derivative_mass(self) -> float:
        return float(np.sum(self.rho_weights[1]))

    @property
    def first_moment(self) -> float:
        s, _ = self.nodes_weights
        return float(np.sum(self.rho_weights[0] * s))

    @classmethod
    def resolving(cls, potential, theta, n_nodes=64):
        """Bump whose panels resolve the potential's finest oscillation over ``theta``."""
        freq = getattr(potential, "max_frequency", None)
        if freq is None:
            return cls(n_nodes)
        cycles = freq * theta / (2 * math.pi)
        return cls(n_nodes, max(1, math.ceil(cycles / 8)))


@dataclass(frozen=True, eq=False)
class Mollified(RadialPotential):
    """``V_theta(r) = int rho(s) V(r + theta s) ds`` with its derivative.

    Values are summed as ``V(r) + int rho(s) (V(r + theta s) - V(r)) ds`` so
    the unit-mass quadrature error never leaks into ``V - V_theta``.

    The derivative uses the mean-zero form
    ``-theta^{-1} int rho'(s) (V(r + theta s) - V(r)) ds`` (integration by parts).
    """

    base: RadialPotential = None
    theta: float = 0.1
    bump: MollifierBump = field(default_factory=MollifierBump)

    kind = "Mollified"
    differentiable = True

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise DomainError(f"smoothing length must lie in (0,1], got {self.theta}")

    delta = property(lambda self: self.base.delta)
    rho = property(lambda self: self.base.rho)
    alpha = property(lambda self: self.base.alpha)
    beta = property(lambda self: self.base.beta)

    @property
    def max_frequency(self):
        return getattr(self.base, "max_frequency", None)

    def _shifted(self, r):
        s, _ = self.bump.nodes_weights
        return self.base._values(np.add.outer(r, self.theta * s).ravel()).reshape(r.size, s.size)

    def _increments(self, r):
        v = self.base._values(r)
        return v, self._shifted(r) - v[:, None]

    def _values(self, r):
        # V + int rho (V(r + theta s) - V(r)): exact on constants
        v, dv = self._increments(r)
        return v + dv @ self.bump.rho_weights[0]

    def _derivative(self, r):
        _, dv = self._increments(r)
        return -(dv @ self.bump.rho_weights[1]) / self.theta

    @property
    def sup_norm(self):
        return self.base.sup_norm

    @property
    def envelope_constant(self):
        return self.base.envelope_constant


def evaluate(V: RadialPotential, r):
    """Value of ``V`` at ``r``; raises :class:`DomainError` for negative radii."""
    return V(r)


@dataclass
class EnvelopeReport:
    max_ratio: float
    worst_r: float
    passed: bool
    derivative_ratio: float | None = None


def envelope_check(V: RadialPotential, grid: Sequence[float], *, delta=None, rho=None,
                   C=None, C1=None, delta1=None, tol=1e-9) -> EnvelopeReport:
    """Scan the decay envelope ``|V| <= C (r+1)^{-delta}`` over a sorted grid.

    Log-decay families (or an explicit ``rho``) are checked against
    ``C (r+1)^{-1} (log(r+2))^{-rho}`` instead. For differentiable families the
    largest one-sided ratio ``max(V', 0) (r+1)^{delta1} / C1`` is reported too;
    it does not enter the pass flag.
    """
    r = np.asarray(grid, dtype=float)
    if r.size == 0:
        raise ConfigurationError("empty grid")
    if np.any(np.diff(r) < 0):
        raise ConfigurationError("grid must be sorted")
    if rho is None and delta is None and V.kind == "LogDecay":
        rho = V.rho
    if rho is None:
        delta = V.delta if delta is None else delta
        if delta is None:
            raise ConfigurationError(f"{V.kind} declares no decay rate; pass delta=")
        weight = (r + 1.0) ** delta
    else:
        weight = (r + 1.0) * np.log(r + 2.0) ** rho
    C = V.envelope_constant if C is None else C
    if C is None or C <= 0:
        raise ConfigurationError(f"{V.kind} declares no envelope constant; pass C=")
    ratio = np.abs(V(r)) * weight / C
    i = int(np.argmax(ratio))
    dratio = None
    if V.differentiable:
        d1 = delta1 if delta1 is not None else (delta if delta is not None else 1.0)
        c1 = C1 if C1 is not None else C
        dratio = float(np.max(np.maximum(V.derivative(r), 0.0) * (r + 1.0) ** d1 / c1))
    return EnvelopeReport(float(ratio[i]), float(r[i]), bool(ratio[i] <= 1 + tol), dratio)


def holder_scan(V: RadialPotential, alpha: float, beta: float, grid: Sequence[float],
                offsets: Sequence[float] = DEFAULT_OFFSETS) -> np.ndarray:
    """Per-offset sup of ``|V(r) - V(r')| (r+1)^beta / |r - r'|^alpha``.

    Both neighbours ``r +- offset`` are used where they stay in [0, inf).
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"exponent must lie in (0,1], got {alpha}")
    if beta < 0:
        raise DomainError(f"decay must be nonnegative, got {beta}")
    offsets = np.asarray(offsets, dtype=float)
    if np.any(offsets <= 0) or np.any(offsets > 1):
        raise DomainError("offsets must lie in (0,1]")
    r = np.asarray(grid, dtype=float)
    v = V(r)
    w = (r + 1.0) ** beta
    out = np.empty(offsets.size)
    for i, d in enumerate(offsets):
        up = np.abs(V(r + d) - v)
        lo = r >= d
        down = np.zeros_like(up)
        down[lo] = np.abs(V(r[lo] - d) - v[lo])
        out[i] = np.max(np.maximum(up, down) * w) / d ** alpha
    return out


def holder_seminorm(V, alpha, beta, grid, offsets=DEFAULT_OFFSETS) -> float:
    """Estimated weighted Hoelder constant (sup over grid and offsets)."""
    return float(np.max(holder_scan(V, alpha, beta, grid, offsets)))


def mollify(V: RadialPotential, theta: float, bump: MollifierBump | None = None) -> Mollified:
    if theta <= 0:
        raise DomainError(f"smoothing length must be positive, got {theta}")
    return Mollified(V, theta, bump if bump is not None else MollifierBump())


@dataclass
class MollifyReport:
    c_err: float
    c_deriv: float


def mollify_error_report(V: RadialPotential, V_theta: Mollified, alpha: float, beta: float,
                         theta: float, grid: Sequence[float]) -> MollifyReport:
    """Measured constants in ``|V - V_theta| <~ theta^alpha (r+1)^{-beta}`` and
    ``|V_theta'| <~ theta^{alpha-1} (r+1)^{-beta}``."""
    if not math.isclose(V_theta.theta, theta):
        raise ConfigurationError("V_theta was built with a different smoothing length")
    r = np.asarray(grid, dtype=float)
    w = (r + 1.0) ** beta
    c_err = np.max(np.abs(V(r) - V_theta(r)) * w) * theta ** (-alpha)
    c_deriv = np.max(np.abs(V_theta.derivative(r)) * w) * theta ** (1.0 - alpha)
    return MollifyReport(float(c_err), float(c_deriv))


def decreasing_majorant(V: RadialPotential, grid: Sequence[float]) -> np.ndarray:
    """Nonincreasing ``p >= V^+`` on the grid (right-to-left running maximum)."""
    r = np.asarray(grid, dtype=float)
    vp = np.maximum(V(r), 0.0)
    return np.maximum.accumulate(vp[::-1])[::-1]

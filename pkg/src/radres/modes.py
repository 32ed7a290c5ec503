"""Angular mode enumeration for the radial reduction.

A radial potential decouples the d-dimensional problem into half-line
problems, one per eigenvalue ``l(l+d-2)`` of the sphere Laplacian, with the
centrifugal coefficient ``nu = h sqrt(lambda + (d-1)(d-3)/4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError

MAX_MODES = 10 ** 7


def angular_eigenvalue(d: int, l: int) -> tuple[int, int]:
    """Eigenvalue of the negative sphere Laplacian on S^{d-1} and its multiplicity."""
    if d < 3:
        raise DomainError("dimension d >= 3 required (d = 2 has a singular effective potential)")
    if l < 0:
        raise DomainError("degree must be nonnegative")
    lam = l * (l + d - 2)
    if l == 0:
        return lam, 1
    return lam, math.comb(l + d - 2, l) * (2 * l + d - 2) // (l + d - 2)


def nu_of(h: float, d: int, lam: float) -> float:
    if h <= 0:
        raise DomainError("h must be positive")
    return h * math.sqrt(lam + (d - 1) * (d - 3) / 4.0)


@dataclass(frozen=True)
class ModeEntry:
    l: int
    lam: int
    nu: float
    multiplicity: int


@dataclass(frozen=True)
class ModeGrid:
    d: int
    h: float
    nu_max: float
    entries: tuple[ModeEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def nus(self) -> np.ndarray:
        return np.array([e.nu for e in self.entries])

    def rows(self):
        return [(e.l, e.lam, e.nu, e.multiplicity) for e in self.entries]


def truncation_bound(R: float, E: float, Vsup: float) -> float:
    """Centrifugal level above which ``nu^2/r^2 + V - E >= 1`` on all of (0, R]."""
    return R * math.sqrt(1.0 + E + Vsup)


def build_modes(h: float, d: int, R: float, E: float, Vsup: float, margin: float = 1.0) -> ModeGrid:
    """All modes with ``nu <= margin * R sqrt(1 + E + |V|_inf)``.

    Modes beyond the bound are coercive on the truncated interval, so their
    weighted resolvent norm is at most 1 and they never set the maximum.
    """
    if R <= 0 or E <= 0:
        raise DomainError("need R > 0 and E > 0")
    nu_max = margin * truncation_bound(R, E, Vsup)
    # nu ~ h (l + (d-2)/2), so this overestimates the count only by O(d)
    estimate = nu_max / h + d
    if estimate > MAX_MODES:
        raise ResourceError(
            f"about {estimate:.3g} modes needed at h={h}, R={R}; raise h or lower R")
    entries = []
    l = 0
    while True:
        lam, mult = angular_eigenvalue(d, l)
        nu = nu_of(h, d, lam)
        if nu > nu_max:
            break
        entries.append(ModeEntry(l, lam, nu, mult))
        l += 1
    return ModeGrid(d, h, nu_max, tuple(entries))


def nonspectral_nus(grid: ModeGrid, per_gap: int = 1) -> np.ndarray:
    """Evenly spaced ``nu`` values strictly between consecutive spectral ones.

    Diagnostic only: the reduction is exact on spectral values alone.
    """
    nus = grid.nus
    if nus.size < 2 or per_gap < 1:
        return np.empty(0)
    t = np.arange(1, per_gap + 1) / (per_gap + 1)
    return (nus[:-1, None] + np.diff(nus)[:, None] * t[None, :]).ravel()

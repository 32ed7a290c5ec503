"""Weighted semiclassical resolvent bounds for radial potentials, computed mode by mode."""

from .errors import (ConfigurationError, DomainError, FitError, NumericalBreakdown,
                     ResourceError)
from .exponents import ExponentPlan, solve_exponent_system, tau_plan, theorem_exponents
from .modes import ModeGrid, build_modes
from .operator1d import Grid1D, assemble, g_of, solve, weighted_resolvent_norm
from .potential import (BarrierWell, HolderOscillatory, LogDecay, Mollified, PowerDecay,
                        RadialPotential, Sampled, mollify)
from .sweep import SweepConfig, SweepResult, bound_check, fit_scaling, load_config, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BarrierWell", "ConfigurationError", "DomainError", "ExponentPlan", "FitError", "Grid1D",
    "HolderOscillatory", "LogDecay", "ModeGrid", "Mollified", "NumericalBreakdown", "PowerDecay",
    "RadialPotential", "ResourceError", "Sampled", "SweepConfig", "SweepResult", "assemble",
    "bound_check", "build_modes", "fit_scaling", "g_of", "load_config", "mollify", "run_sweep",
    "solve", "solve_exponent_system", "tau_plan", "theorem_exponents", "weighted_resolvent_norm",
]

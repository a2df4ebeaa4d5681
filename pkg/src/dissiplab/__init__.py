"""Numerical certification of strict dissipativity for 1-D compressible flow with relaxed heat flux."""
from __future__ import annotations

__version__ = "0.1.0"

from .coupling import (  # noqa: E402
    CompensatingMatrix,
    CouplingVerdict,
    certified_compensating,
    check_genuine_coupling,
    compensating_inviscid,
    compensating_viscous,
    verify_compensating,
)
from .decay import DecayTrace, GaussianBump, decay_trace, energy_balance_residual, evolve_mode, lyapunov_check  # noqa: E402
from .dispersion import DispersionCurve, dispersion_eigenvalues, scan, verify_bound  # noqa: E402
from .eos import FluidModel, ThermoEval, check_hypotheses, evaluate  # noqa: E402
from .matrices import StateVector, SymmetricSystem, SystemMatrices, assemble, build_system, is_equilibrium, symmetrize  # noqa: E402
from .spectral import CharSpeeds, char_speeds_closed_form, char_speeds_eigen, strict_hyperbolicity_gap  # noqa: E402

__all__ = [
    "__version__",
    "CharSpeeds", "CompensatingMatrix", "CouplingVerdict", "DecayTrace", "DispersionCurve", "FluidModel",
    "GaussianBump", "StateVector", "SymmetricSystem", "SystemMatrices", "ThermoEval",
    "assemble", "build_system", "certified_compensating", "char_speeds_closed_form", "char_speeds_eigen",
    "check_genuine_coupling", "check_hypotheses", "compensating_inviscid", "compensating_viscous",
    "decay_trace", "dispersion_eigenvalues", "energy_balance_residual", "evaluate", "evolve_mode",
    "is_equilibrium", "lyapunov_check", "scan", "strict_hyperbolicity_gap", "symmetrize",
    "verify_bound", "verify_compensating",
]

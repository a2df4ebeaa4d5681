"""Characteristic speeds: closed form in m = u - zeta versus a direct eigensolve."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .eos import FluidModel, ThermoEval, evaluate
from .errors import HyperbolicityError
from .matrices import StateVector, SystemMatrices

IMAG_TOL = 1e-9


@dataclass(frozen=True)
class CharSpeeds:
    zeta: tuple[float, float, float, float]
    m2_minus: float
    m2_plus: float
    discriminant: float
    b_tilde: float
    c_tilde: float

    @property
    def c_slow(self) -> float:
        return math.sqrt(self.m2_minus)

    @property
    def c_fast(self) -> float:
        return math.sqrt(self.m2_plus)

    def to_dict(self) -> dict[str, float]:
        return {
            "zeta": list(self.zeta), "c_slow": self.c_slow, "c_fast": self.c_fast,
            "m2_minus": self.m2_minus, "m2_plus": self.m2_plus,
            "discriminant": self.discriminant, "b_tilde": self.b_tilde, "c_tilde": self.c_tilde,
        }


def quartic_coefficients(rho: float, theta: float, ev: ThermoEval, tau: float) -> tuple[float, float]:
    """(b, c) of m^4 + b m^2 + c = 0."""
    den = rho**2 * ev.e_theta * tau
    b = -(rho * ev.kappa + rho**2 * ev.p_rho * ev.e_theta * tau + theta * ev.p_theta**2 * tau) / den
    c = rho * ev.p_rho * ev.kappa / den
    return b, c


def discriminant_forms(rho: float, theta: float, ev: ThermoEval, tau: float) -> tuple[float, float]:
    """The discriminant as a difference of squares and as a sum of non-negative terms."""
    thermal = ev.kappa / (rho * ev.e_theta * tau)
    coupling = theta * ev.p_theta**2 / (rho**2 * ev.e_theta)
    diff_form = (ev.p_rho + thermal + coupling) ** 2 - 4.0 * thermal * ev.p_rho
    sum_form = (ev.p_rho - thermal) ** 2 + coupling * (2.0 * ev.p_rho + 2.0 * thermal + coupling)
    return diff_form, sum_form


def char_speeds_closed_form(U: StateVector, model: FluidModel) -> CharSpeeds:
    ev = evaluate(model, U.rho, U.theta)
    return char_speeds_from_thermo(U, ev, model.tau)


def char_speeds_from_thermo(U: StateVector, ev: ThermoEval, tau: float) -> CharSpeeds:
    b, c = quartic_coefficients(U.rho, U.theta, ev, tau)
    disc = b * b - 4.0 * c
    if not disc > 0:
        raise HyperbolicityError(f"discriminant {disc:.6g} <= 0 at {U}")
    root = math.sqrt(disc)
    m2_plus = 0.5 * (abs(b) + root)
    # Vieta instead of |b| - sqrt(disc): avoids cancellation when c << b^2
    m2_minus = c / m2_plus
    if not m2_minus > 0:
        raise HyperbolicityError(f"m^2 root {m2_minus:.6g} is not positive at {U}")
    fast, slow = math.sqrt(m2_plus), math.sqrt(m2_minus)
    zeta = (U.u - fast, U.u - slow, U.u + slow, U.u + fast)
    return CharSpeeds(zeta, m2_minus, m2_plus, disc, b, c)


def char_speeds_eigen(sm: SystemMatrices) -> np.ndarray:
    """Roots of det(A1 - zeta A0) from a general (non-symmetric) eigensolve."""
    d = np.diag(sm.A0)
    if np.any(d <= 0):
        raise HyperbolicityError("A0 is not positive definite")
    lam = np.linalg.eigvals(sm.A1 / d[:, None])
    if np.max(np.abs(lam.imag)) > IMAG_TOL:
        raise HyperbolicityError(f"complex characteristic speeds {lam}")
    return np.sort(lam.real)


def strict_hyperbolicity_gap(cs: CharSpeeds | Sequence[float]) -> float:
    z = np.asarray(cs.zeta if isinstance(cs, CharSpeeds) else cs, dtype=float)
    return float(np.min(np.diff(np.sort(z))))


def extrapolate_to_zero(eps: Sequence[float], values: Sequence[float], degree: int = 2) -> float:
    """Polynomial extrapolation of values(eps) to eps = 0."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    degree = min(degree, len(eps) - 1)
    return float(np.polyval(np.polyfit(eps, values, degree), 0.0))


def speed_limits(
    model_at: Callable[[float], FluidModel],
    U: StateVector,
    eps: Sequence[float] = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4),
) -> tuple[float, float]:
    """Formal limit of (c_slow, c_fast) along a model family parameterized by eps -> 0+.

    The m^2 roots are smooth in the parameters, so they (not the speeds) are extrapolated.
    """
    runs = [char_speeds_closed_form(U, model_at(e)) for e in eps]
    m2_minus = extrapolate_to_zero(eps, [r.m2_minus for r in runs])
    m2_plus = extrapolate_to_zero(eps, [r.m2_plus for r in runs])
    return math.sqrt(max(m2_minus, 0.0)), math.sqrt(max(m2_plus, 0.0))

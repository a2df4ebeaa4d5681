"""Quasi-linear system matrices A0, A1, B, Q, D and their symmetrized form."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eos import FluidModel, ThermoEval, evaluate
from .errors import DomainError, SymmetryError

SYMMETRY_TOL = 1e-12
EQUILIBRIUM_TOL = 1e-12


@dataclass(frozen=True)
class StateVector:
    rho: float
    u: float
    theta: float
    q: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.rho, self.u, self.theta, self.q)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite state {vals}")
        if not (self.rho > 0 and self.theta > 0):
            raise DomainError(f"state (rho={self.rho}, theta={self.theta}) is outside the state space")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.u, self.theta, self.q])

    def shifted(self, du: float) -> "StateVector":
        return StateVector(self.rho, self.u + du, self.theta, self.q)

    def to_dict(self) -> dict[str, float]:
        return {"rho": self.rho, "u": self.u, "theta": self.theta, "q": self.q}


@dataclass(frozen=True)
class SystemMatrices:
    A0: np.ndarray
    A1: np.ndarray
    B: np.ndarray
    D: np.ndarray
    Qvec: np.ndarray
    at_state: StateVector
    thermo: ThermoEval
    tau: float

    def A0_inv(self) -> np.ndarray:
        return np.diag(1.0 / np.diag(self.A0))


@dataclass(frozen=True)
class SymmetricSystem:
    S: np.ndarray
    A0h: np.ndarray
    A1h: np.ndarray
    Bh: np.ndarray
    L: np.ndarray
    state: StateVector
    tau: float

    def A0h_inv(self) -> np.ndarray:
        return np.diag(1.0 / np.diag(self.A0h))

    def symmetry_residuals(self) -> dict[str, float]:
        return {name: float(np.max(np.abs(M - M.T)))
                for name, M in (("A0h", self.A0h), ("A1h", self.A1h), ("Bh", self.Bh), ("L", self.L))}


def production(U: StateVector) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, -U.q])


def assemble(U: StateVector, model: FluidModel) -> SystemMatrices:
    if not (U.rho > 0 and U.theta > 0):
        raise DomainError(f"{U} is outside the state space")
    rho, u, th = U.rho, U.u, U.theta
    ev = evaluate(model, rho, th)
    tau = model.tau
    A0 = np.diag([1.0, rho, rho * ev.e_theta, tau])
    A1 = np.array([
        [u, rho, 0.0, 0.0],
        [ev.p_rho, rho * u, ev.p_theta, 0.0],
        [0.0, th * ev.p_theta, rho * u * ev.e_theta, 1.0],
        [0.0, 0.0, ev.kappa, tau * u],
    ])
    B = np.zeros((4, 4))
    B[1, 1] = ev.nu
    D = np.diag([0.0, 0.0, 0.0, -1.0])
    return SystemMatrices(A0, A1, B, D, production(U), U, ev, tau)


def symmetrizer(U: StateVector, thermo: ThermoEval) -> np.ndarray:
    return np.diag([thermo.p_rho / U.rho, 1.0, 1.0 / U.theta, 1.0 / (thermo.kappa * U.theta)])


def symmetrize(sm: SystemMatrices) -> SymmetricSystem:
    """Left-multiply by the diagonal symmetrizer; fails fast on any asymmetry."""
    S = symmetrizer(sm.at_state, sm.thermo)
    A0h, A1h, Bh, L = S @ sm.A0, S @ sm.A1, S @ sm.B, -(S @ sm.D)
    for name, M in (("A0h", A0h), ("A1h", A1h), ("Bh", Bh), ("L", L)):
        res = float(np.max(np.abs(M - M.T)))
        scale = max(1.0, float(np.max(np.abs(M))))
        if res > SYMMETRY_TOL * scale:
            raise SymmetryError(f"{name} asymmetric by {res:.3e} at {sm.at_state}")
    return SymmetricSystem(S, A0h, A1h, Bh, L, sm.at_state, sm.tau)


def build_system(model: FluidModel, U: StateVector) -> SymmetricSystem:
    return symmetrize(assemble(U, model))


def is_equilibrium(U: StateVector, tol: float = EQUILIBRIUM_TOL) -> bool:
    return abs(U.q) <= tol

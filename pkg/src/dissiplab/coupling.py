"""Genuine coupling and explicit compensating matrices.

A compensating matrix K satisfies two conditions: K A0 is skew-symmetric, and
[K A1]^s + B + L is positive definite, where [M]^s = (M + M^T) / 2.  Two
explicit templates are built here, both of the form K = T (A0)^{-1} with T
antisymmetric:

* viscous:     T = delta * [[0, p_rho, 0, 0], [-p_rho, 0, -p_theta, 0], [0, p_theta, 0, 0], 0]
* relaxation:  T = [[0, a, 0, 0], [-a, 0, -b, 0], [0, b, 0, -g], [0, 0, g, 0]]
               with a = delta^3 alpha0, b = -delta^2 beta0, g = -delta gamma0

The viscous template never touches the (x1, x3) block beyond a rank-one term,
so its positivity margin is exactly zero; ``verify_compensating`` reports that
faithfully.  The relaxation template works with or without viscosity.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .eos import ThermoEval
from .errors import (
    DegenerateEigenbasisError,
    DeltaTooLargeError,
    InviscidError,
    NoDeltaFoundError,
    NotEquilibriumError,
    ViscousError,
)
from .matrices import SymmetricSystem, is_equilibrium

COUPLING_TOL = 1e-8
SKEW_TOL = 1e-12
# eigenvalues below this multiple of eps * ||M|| are indistinguishable from zero
PD_REL_FLOOR = 64 * np.finfo(float).eps
MAX_HALVINGS = 60


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


# --------------------------------------------------------------------------- coupling


@dataclass(frozen=True)
class CouplingVerdict:
    genuinely_coupled: bool
    min_kernel_overlap: float
    witness: np.ndarray | None
    eigenvalues: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "genuinely_coupled": self.genuinely_coupled,
            "min_kernel_overlap": self.min_kernel_overlap,
            "witness": None if self.witness is None else self.witness.tolist(),
        }


def _pencil_eigvecs(ss: SymmetricSystem) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of A1h v = lam A0h v via the diagonal congruence (A0h)^{-1/2}."""
    d = np.diag(ss.A0h)
    if np.any(d <= 0) or np.any(np.abs(ss.A0h - np.diag(d)) > 0):
        raise DegenerateEigenbasisError("A0h must be diagonal positive definite")
    w = 1.0 / np.sqrt(d)
    lam, Y = np.linalg.eigh(sym(w[:, None] * ss.A1h * w[None, :]))
    V = w[:, None] * Y
    return lam, V / np.linalg.norm(V, axis=0)


def _clusters(lam: np.ndarray, rtol: float = 1e-9) -> list[list[int]]:
    scale = max(1.0, float(np.max(np.abs(lam))))
    groups = [[0]]
    for i in range(1, len(lam)):
        if lam[i] - lam[i - 1] <= rtol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def check_genuine_coupling(ss: SymmetricSystem, tol: float = COUPLING_TOL) -> CouplingVerdict:
    """No eigenvector of the hyperbolic pencil may lie in ker B ∩ ker L.

    For a repeated eigenvalue the whole eigenspace is searched: the minimizing
    direction is the smallest right singular vector of [B; L] restricted to it.
    """
    lam, V = _pencil_eigvecs(ss)
    if not np.all(np.isfinite(V)):
        raise DegenerateEigenbasisError("non-finite eigenvectors")
    stacked = np.vstack([ss.Bh, ss.L])
    best, witness = math.inf, None
    for idx in _clusters(lam):
        if len(idx) == 1:
            v = V[:, idx[0]]
        else:
            Q, _ = np.linalg.qr(V[:, idx])
            _, _, vh = np.linalg.svd(stacked @ Q)
            v = Q @ vh[-1]
        overlap = float(np.linalg.norm(ss.Bh @ v) + np.linalg.norm(ss.L @ v))
        if overlap < best:
            best, witness = overlap, v
    return CouplingVerdict(best > tol, best, witness, lam)


# ------------------------------------------------------------------- compensation


class Construction(str, enum.Enum):
    VISCOUS = "viscous"
    INVISCID = "inviscid"


@dataclass(frozen=True)
class CompensatingDiagnostics:
    skew_residual: float
    min_eig_sym: float
    pd_floor: float

    @property
    def positive_definite(self) -> bool:
        return self.min_eig_sym > self.pd_floor

    @property
    def margin(self) -> float:
        """The constant gamma with <X, ([K A1]^s + B + L) X> >= gamma |X|^2."""
        return self.min_eig_sym

    @property
    def valid(self) -> bool:
        return self.skew_residual <= SKEW_TOL and self.positive_definite


@dataclass(frozen=True)
class CompensatingMatrix:
    K: np.ndarray
    delta: float
    construction: Construction
    diagnostics: CompensatingDiagnostics
    alpha0: float | None = None
    beta0: float | None = None
    gamma0: float | None = None
    alpha_power: int = 3
    constants: str = "standard"
    halvings: int = 0
    conditions: dict[str, bool] = field(default_factory=dict)
    search: str = "halving"

    @property
    def skew_residual(self) -> float:
        return self.diagnostics.skew_residual

    @property
    def min_eig_sym(self) -> float:
        return self.diagnostics.min_eig_sym

    @property
    def C_delta(self) -> float:
        return self.diagnostics.margin

    @property
    def valid(self) -> bool:
        return self.diagnostics.valid

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "construction": self.construction.value,
            "K": self.K.tolist(),
            "delta": self.delta,
            "skew_residual": self.skew_residual,
            "min_eig_sym": self.min_eig_sym,
            "C_delta": self.C_delta,
            "positive_definite": self.diagnostics.positive_definite,
            "valid": self.valid,
        }
        if self.construction is Construction.INVISCID:
            out.update(alpha0=self.alpha0, beta0=self.beta0, gamma0=self.gamma0,
                       alpha_power=self.alpha_power, constants=self.constants,
                       halvings=self.halvings, search=self.search, conditions=dict(self.conditions))
        return out


def compensation_form(K: np.ndarray, ss: SymmetricSystem) -> np.ndarray:
    """The symmetric matrix [K A1]^s + B + L whose positivity is required."""
    return sym(K @ ss.A1h) + ss.Bh + ss.L


def form_coefficients(M: np.ndarray) -> dict[str, float]:
    """Coefficients of Q(X) = sum a_i x_i^2 + b13 x1 x3 + b24 x2 x4 read off M."""
    return {
        "a1": M[0, 0], "a2": M[1, 1], "a3": M[2, 2], "a4": M[3, 3],
        "b13": 2.0 * M[0, 2], "b24": 2.0 * M[1, 3],
    }


def verify_compensating(K: CompensatingMatrix | np.ndarray, ss: SymmetricSystem) -> CompensatingDiagnostics:
    Km = K.K if isinstance(K, CompensatingMatrix) else np.asarray(K, dtype=float)
    KA0 = Km @ ss.A0h
    skew = float(np.max(np.sum(np.abs(KA0 + KA0.T), axis=1)))
    M = compensation_form(Km, ss)
    eig = np.linalg.eigvalsh(M)
    floor = PD_REL_FLOOR * max(float(np.max(np.abs(eig))), 1e-300)
    return CompensatingDiagnostics(skew, float(eig[0]), floor)


def _equilibrium_guard(ss: SymmetricSystem) -> None:
    if not is_equilibrium(ss.state):
        raise NotEquilibriumError(f"compensating matrices are built at equilibria only, q = {ss.state.q}")


# -------------------------------------------------------------------------- viscous


def viscous_delta_bounds(ss: SymmetricSystem, thermo: ThermoEval) -> tuple[float, float]:
    """The two upper bounds on delta stated for the viscous template."""
    rho, th = ss.state.rho, ss.state.theta
    pr, pt, et, kap, nu = thermo.p_rho, thermo.p_theta, thermo.e_theta, thermo.kappa, thermo.nu
    bound_x4 = 2.0 * rho * et / (kap * th * pt)
    bound_x2 = nu / (rho * pr + th * pt**2 / (rho * et) + pt / (2.0 * rho * et))
    return bound_x4, bound_x2


def viscous_template(thermo: ThermoEval) -> np.ndarray:
    pr, pt = thermo.p_rho, thermo.p_theta
    return np.array([
        [0.0, pr, 0.0, 0.0],
        [-pr, 0.0, -pt, 0.0],
        [0.0, pt, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])


def compensating_viscous(ss: SymmetricSystem, thermo: ThermoEval, delta: float | None = None) -> CompensatingMatrix:
    """The viscous template with delta = half the smaller proof bound unless given.

    A user-supplied delta that leaves the form indefinite raises
    DeltaTooLargeError.  With the auto-selected delta the result is returned
    as is; check ``.valid`` (the template is degenerate in the (x1, x3) block).
    """
    _equilibrium_guard(ss)
    if not thermo.nu > 0:
        raise InviscidError("nu = 0: use compensating_inviscid")
    user = delta is not None
    if delta is None:
        delta = 0.5 * min(viscous_delta_bounds(ss, thermo))
    if not delta > 0:
        raise DeltaTooLargeError(f"delta must be positive, got {delta}")
    K = delta * viscous_template(thermo) @ ss.A0h_inv()
    diag = verify_compensating(K, ss)
    if user and diag.min_eig_sym <= 0:
        raise DeltaTooLargeError(
            f"delta = {delta} gives min eigenvalue {diag.min_eig_sym:.6g} of [K A1]^s + B + L")
    return CompensatingMatrix(K, float(delta), Construction.VISCOUS, diag)


# ----------------------------------------------------------------------- relaxation


@dataclass(frozen=True)
class RelaxationConstants:
    alpha0: float
    beta0: float
    gamma0: float
    source: str


def _leading_order_margins(ss: SymmetricSystem, thermo: ThermoEval, a0: float, b0: float, g0: float):
    """Small-delta limits of the two 2x2 block determinants (divided by positive factors)."""
    rho, th, tau = ss.state.rho, ss.state.theta, ss.tau
    pr, pt, et, kap = thermo.p_rho, thermo.p_theta, thermo.e_theta, thermo.kappa
    block13 = g0 * kap / tau - b0**2 * pr / (4.0 * a0 * rho)
    block24 = b0 - g0**2 * kap * th**2 * pt / (4.0 * rho * et)
    return block13, block24


def relaxation_constants(ss: SymmetricSystem, thermo: ThermoEval) -> RelaxationConstants:
    """alpha0, beta0, gamma0 for the relaxation template.

    The default choice is used when it makes both 2x2 blocks of the form
    positive definite for small delta.  That requires rho e_theta < 4 kappa theta^2
    and tau e_theta > 1/4; otherwise gamma0 is lowered to sqrt(rho e_theta / (kappa theta^2))
    and alpha0 raised until both blocks have leading-order margin.
    """
    rho, th, tau = ss.state.rho, ss.state.theta, ss.tau
    pr, pt, et, kap = thermo.p_rho, thermo.p_theta, thermo.e_theta, thermo.kappa
    a0 = tau**2 * th**2 * pt**2 * pr / rho**2
    b0 = pt
    g0 = rho * et / (kap * th**2)
    m13, m24 = _leading_order_margins(ss, thermo, a0, b0, g0)
    if m13 > 0 and m24 > 0:
        return RelaxationConstants(a0, b0, g0, "standard")
    g0 = math.sqrt(rho * et / (kap * th**2))
    a0 = max(a0, tau * b0**2 * pr / (rho * kap * g0))
    return RelaxationConstants(a0, b0, g0, "adjusted")


def relaxation_delta_bounds(ss: SymmetricSystem, thermo: ThermoEval, c: RelaxationConstants) -> tuple[float, float]:
    """Closed-form bounds (condE, condF); condE may be non-positive for adjusted constants."""
    rho, th, tau = ss.state.rho, ss.state.theta, ss.tau
    pr, pt, et, kap = thermo.p_rho, thermo.p_theta, thermo.e_theta, thermo.kappa
    cond_e = (2.0 * rho * pr / (c.alpha0 * pt**2)) * (c.gamma0 * kap / tau - c.beta0**2 * pr / (2.0 * c.alpha0 * rho))
    cond_f = rho * et / (kap * th * c.gamma0)
    return cond_e, cond_f


def relaxation_template(delta: float, c: RelaxationConstants, alpha_power: int = 3) -> np.ndarray:
    a = delta**alpha_power * c.alpha0
    b = -(delta**2) * c.beta0
    g = -delta * c.gamma0
    return np.array([
        [0.0, a, 0.0, 0.0],
        [-a, 0.0, -b, 0.0],
        [0.0, b, 0.0, -g],
        [0.0, 0.0, g, 0.0],
    ])


def relaxation_form_coefficients(ss: SymmetricSystem, thermo: ThermoEval, delta: float,
                                 c: RelaxationConstants) -> dict[str, float]:
    """Closed-form a1..a4, b13, b24 of the relaxation template (alpha power 3, B = 0)."""
    rho, th, tau = ss.state.rho, ss.state.theta, ss.tau
    pr, pt, et, kap = thermo.p_rho, thermo.p_theta, thermo.e_theta, thermo.kappa
    a0, b0, g0, d = c.alpha0, c.beta0, c.gamma0, delta
    return {
        "a1": d**3 * a0 * pr / rho,
        "a2": d**2 * (b0 * th * pt / (rho * et) - d * a0 * rho),
        "a3": d * (g0 * kap / tau - d * b0 * pt / rho),
        "a4": 1.0 / (kap * th) - d * g0 / (rho * et),
        "b13": d**2 / rho * (d * a0 * pt - b0 * pr),
        "b24": d / (rho * et) * (d * b0 - g0 * th * pt),
    }


def _conditions(coef: dict[str, float]) -> dict[str, bool]:
    a1, a2, a3, a4, b13, b24 = (coef[k] for k in ("a1", "a2", "a3", "a4", "b13", "b24"))
    out = {"a1": a1 > 0, "a4": a4 > 0}
    # Young's inequality with weight 1/2, as in the closed-form argument
    out["young_x2"] = out["a4"] and a2 - b24**2 / (2.0 * a4) > 0
    out["young_x3"] = out["a1"] and a3 - b13**2 / (2.0 * a1) > 0
    # exact positive definiteness of the (x2, x4) and (x1, x3) blocks
    out["block_24"] = out["a4"] and a2 - b24**2 / (4.0 * a4) > 0
    out["block_13"] = out["a1"] and a3 - b13**2 / (4.0 * a1) > 0
    return {k: bool(v) for k, v in out.items()}


def compensating_relaxation(ss: SymmetricSystem, thermo: ThermoEval, delta: float | None = None,
                            alpha_power: int = 3, max_halvings: int = MAX_HALVINGS) -> CompensatingMatrix:
    """Relaxation template K at an equilibrium, for any nu >= 0.

    Without ``delta`` the search starts at the smaller positive closed-form bound
    and halves until both 2x2 blocks are positive definite.
    """
    _equilibrium_guard(ss)
    c = relaxation_constants(ss, thermo)
    A0_inv = ss.A0h_inv()

    def build(d: float):
        K = relaxation_template(d, c, alpha_power) @ A0_inv
        diag = verify_compensating(K, ss)
        conds = _conditions(form_coefficients(compensation_form(K, ss)))
        return K, diag, conds

    def accepted(diag, conds) -> bool:
        return conds["block_13"] and conds["block_24"] and diag.valid

    def result(d, K, diag, conds, halvings):
        return CompensatingMatrix(K, float(d), Construction.INVISCID, diag, c.alpha0, c.beta0, c.gamma0,
                                  alpha_power, c.source, halvings, conds)

    if delta is not None:
        if not delta > 0:
            raise DeltaTooLargeError(f"delta must be positive, got {delta}")
        K, diag, conds = build(delta)
        if diag.min_eig_sym <= 0:
            raise DeltaTooLargeError(
                f"delta = {delta} gives min eigenvalue {diag.min_eig_sym:.6g} of [K A1]^s + B + L")
        return result(delta, K, diag, conds, 0)

    bounds = [b for b in relaxation_delta_bounds(ss, thermo, c) if b > 0]
    d = min(bounds) if bounds else 1.0
    for halvings in range(max_halvings + 1):
        K, diag, conds = build(d)
        if accepted(diag, conds):
            return result(d, K, diag, conds, halvings)
        d *= 0.5
    # A very small closed-form bound can put the delta^3 eigenvalue under the
    # roundoff floor along the whole halving path.  Walk down from the largest
    # bound instead and keep the candidate with the best relative margin.
    d = max(bounds + [1.0])
    best = None
    for halvings in range(max_halvings + 1):
        K, diag, conds = build(d)
        if accepted(diag, conds):
            ratio = diag.min_eig_sym / diag.pd_floor
            if best is None or ratio > best[0]:
                best = (ratio, d, K, diag, conds, halvings)
        d *= 0.5
    if best is None:
        raise NoDeltaFoundError(f"no admissible delta after {max_halvings} halvings at {ss.state}")
    _, d, K, diag, conds, halvings = best
    out = result(d, K, diag, conds, halvings)
    return replace(out, search="ladder")


def compensating_inviscid(ss: SymmetricSystem, thermo: ThermoEval, delta: float | None = None,
                          alpha_power: int = 3, max_halvings: int = MAX_HALVINGS) -> CompensatingMatrix:
    _equilibrium_guard(ss)
    if thermo.nu != 0:
        raise ViscousError(f"nu = {thermo.nu} != 0: use compensating_viscous or compensating_relaxation")
    return compensating_relaxation(ss, thermo, delta, alpha_power, max_halvings)


def certified_compensating(ss: SymmetricSystem, thermo: ThermoEval) -> CompensatingMatrix:
    """A verified compensating matrix for the system, whichever template delivers one."""
    if thermo.nu > 0:
        K = compensating_viscous(ss, thermo)
        if K.valid:
            return K
    return compensating_relaxation(ss, thermo)

"""Fluid models: equation of state, transport coefficients, structural hypotheses.

Two closed-form families are provided, an ideal gas (p = R rho theta,
e = R theta / (gamma - 1)) and a separable power law (p = A rho^alpha theta^beta,
e_theta = c_v).  In both, e_rho is obtained from the thermodynamic identity
theta p_theta = p - rho^2 e_rho, so every ThermoEval is consistent by construction.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.stats import qmc

from .errors import DomainError


class FluidKind(str, enum.Enum):
    IDEAL_GAS = "ideal_gas"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class Transport:
    """Coefficient of the form ``coeff * rho**rho_exp * theta**theta_exp``."""

    coeff: float
    rho_exp: float = 0.0
    theta_exp: float = 0.0

    def __call__(self, rho: float, theta: float) -> float:
        return self.coeff * rho**self.rho_exp * theta**self.theta_exp

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0.0

    @classmethod
    def parse(cls, raw: Any) -> "Transport":
        if isinstance(raw, Transport):
            return raw
        if isinstance(raw, (int, float)):
            return cls(float(raw))
        return cls(float(raw["coeff"]), float(raw.get("rho_exp", 0.0)), float(raw.get("theta_exp", 0.0)))

    def to_dict(self) -> Any:
        if self.rho_exp == 0.0 and self.theta_exp == 0.0:
            return self.coeff
        return {"coeff": self.coeff, "rho_exp": self.rho_exp, "theta_exp": self.theta_exp}


@dataclass(frozen=True)
class FluidModel:
    kind: FluidKind
    kappa: Transport
    nu: Transport
    tau: float
    # ideal gas
    R: float = 1.0
    gamma: float = 1.4
    # power law
    A: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    cv: float = 1.0

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise DomainError(f"relaxation time must be positive, got {self.tau}")
        if self.kappa.coeff <= 0:
            raise DomainError(f"thermal conductivity must be positive, got {self.kappa.coeff}")
        if self.nu.coeff < 0:
            raise DomainError(f"viscosity must be non-negative, got {self.nu.coeff}")
        if self.kind is FluidKind.IDEAL_GAS:
            if self.R <= 0 or self.gamma <= 1:
                raise DomainError(f"ideal gas needs R > 0 and gamma > 1, got R={self.R}, gamma={self.gamma}")
        elif self.A <= 0 or self.cv <= 0:
            raise DomainError(f"power law needs A > 0 and c_v > 0, got A={self.A}, c_v={self.cv}")

    @classmethod
    def ideal_gas(cls, R=1.0, gamma=1.4, kappa=1.0, nu=0.0, tau=1.0) -> "FluidModel":
        return cls(FluidKind.IDEAL_GAS, Transport.parse(kappa), Transport.parse(nu), float(tau),
                   R=float(R), gamma=float(gamma))

    @classmethod
    def power_law(cls, A=1.0, alpha=1.0, beta=1.0, cv=1.0, kappa=1.0, nu=0.0, tau=1.0) -> "FluidModel":
        return cls(FluidKind.POWER_LAW, Transport.parse(kappa), Transport.parse(nu), float(tau),
                   A=float(A), alpha=float(alpha), beta=float(beta), cv=float(cv))

    @property
    def inviscid(self) -> bool:
        return self.nu.is_zero

    def with_nu(self, nu: Any) -> "FluidModel":
        from dataclasses import replace

        return replace(self, nu=Transport.parse(nu))

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "FluidModel":
        kind = FluidKind(raw["kind"])
        common = {k: raw[k] for k in ("kappa", "nu", "tau") if k in raw}
        if kind is FluidKind.IDEAL_GAS:
            return cls.ideal_gas(**{k: raw[k] for k in ("R", "gamma") if k in raw}, **common)
        return cls.power_law(**{k: raw[k] for k in ("A", "alpha", "beta", "cv") if k in raw}, **common)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is FluidKind.IDEAL_GAS:
            out.update(R=self.R, gamma=self.gamma)
        else:
            out.update(A=self.A, alpha=self.alpha, beta=self.beta, cv=self.cv)
        out.update(kappa=self.kappa.to_dict(), nu=self.nu.to_dict(), tau=self.tau)
        return out


@dataclass(frozen=True)
class ThermoEval:
    p: float
    p_rho: float
    p_theta: float
    e: float
    e_theta: float
    e_rho: float
    kappa: float
    nu: float


def _check_point(rho: float, theta: float) -> None:
    if not (rho > 0 and theta > 0) or not (math.isfinite(rho) and math.isfinite(theta)):
        raise DomainError(f"(rho, theta) = ({rho}, {theta}) is outside rho > 0, theta > 0")


def evaluate(model: FluidModel, rho: float, theta: float) -> ThermoEval:
    """Pressure, energy and their derivatives at one (rho, theta), all in closed form."""
    _check_point(rho, theta)
    if model.kind is FluidKind.IDEAL_GAS:
        R = model.R
        p, p_rho, p_theta = R * rho * theta, R * theta, R * rho
        e_theta = R / (model.gamma - 1.0)
        e = e_theta * theta
    else:
        A, a, b = model.A, model.alpha, model.beta
        p = A * rho**a * theta**b
        p_rho = a * p / rho
        p_theta = b * p / theta
        e_theta = model.cv
        # rho-primitive of the identity-derived e_rho; exact for beta in {0, 1}
        prim = math.log(rho) if a == 1.0 else rho ** (a - 1.0) / (a - 1.0)
        e = model.cv * theta + A * (1.0 - b) * theta**b * prim
    e_rho = (p - theta * p_theta) / rho**2
    return ThermoEval(
        p=p, p_rho=p_rho, p_theta=p_theta, e=e, e_theta=e_theta, e_rho=e_rho,
        kappa=model.kappa(rho, theta), nu=model.nu(rho, theta),
    )


# (name, field, strict): strict means > 0, otherwise >= 0
_HYPOTHESES = (
    ("p > 0", "p", True),
    ("p_rho > 0", "p_rho", True),
    ("p_theta > 0", "p_theta", True),
    ("e_theta > 0", "e_theta", True),
    ("kappa > 0", "kappa", True),
    ("nu >= 0", "nu", False),
)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    worst_value: float
    worst_at: tuple[float, float]


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple[HypothesisCheck, ...]
    n_samples: int
    box: tuple[tuple[float, float], tuple[float, float]]
    seed: int = field(default=0)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "n_samples": self.n_samples,
            "box": [list(self.box[0]), list(self.box[1])],
            "checks": {
                c.name: {"passed": c.passed, "worst_value": c.worst_value, "worst_at": list(c.worst_at)}
                for c in self.checks
            },
        }


def sample_box(box, n_samples: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points in the (rho, theta) rectangle, shape (n, 2)."""
    (r0, r1), (t0, t1) = box
    if not (0 < r0 < r1 and 0 < t0 < t1):
        raise DomainError(f"sample box {box} must satisfy 0 < lo < hi in both rho and theta")
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    unit = qmc.Halton(d=2, scramble=True, seed=seed).random(n_samples)
    return qmc.scale(unit, [r0, t0], [r1, t1])


def check_hypotheses(model: FluidModel, box, n_samples: int = 100, seed: int = 0) -> HypothesisReport:
    """Sample the sign conditions p, p_rho, p_theta, e_theta, kappa > 0 and nu >= 0 over a box."""
    pts = sample_box(box, n_samples, seed)
    evals = [evaluate(model, float(r), float(t)) for r, t in pts]
    checks = []
    for name, attr, strict in _HYPOTHESES:
        vals = np.array([getattr(ev, attr) for ev in evals])
        i = int(np.argmin(vals))
        ok = bool(np.all(vals > 0) if strict else np.all(vals >= 0))
        checks.append(HypothesisCheck(name, ok, float(vals[i]), (float(pts[i, 0]), float(pts[i, 1]))))
    box_t = ((float(box[0][0]), float(box[0][1])), (float(box[1][0]), float(box[1][1])))
    return HypothesisReport(tuple(checks), n_samples, box_t, seed)

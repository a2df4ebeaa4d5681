"""Dispersion relation det(lam A0 + i xi A1 + L + xi^2 B) = 0 and the decay envelope.

Roots are eigenvalues of the generator G(xi) = -(A0)^{-1} (i xi A1 + L + xi^2 B),
the matrix of the Fourier-transformed linear system dU/dt = G(xi) U.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NotDissipativeError
from .matrices import SymmetricSystem


def generator(ss: SymmetricSystem, xi) -> np.ndarray:
    """G(xi) for scalar xi (shape (4, 4)) or an array of xi (shape (n, 4, 4))."""
    xi = np.asarray(xi, dtype=float)
    x = xi[..., None, None]
    A0_inv = ss.A0h_inv()
    return -(A0_inv @ (1j * x * ss.A1h + ss.L + x**2 * ss.Bh))


def _sort_desc(lam: np.ndarray) -> np.ndarray:
    # descending real part; ties broken by imaginary part for reproducible order
    order = np.lexsort((-lam.imag, -lam.real), axis=-1)
    return np.take_along_axis(lam, order, axis=-1)


def dispersion_eigenvalues(ss: SymmetricSystem, xi: float) -> np.ndarray:
    return _sort_desc(np.linalg.eigvals(generator(ss, xi)))


def dispersion_batch(ss: SymmetricSystem, xis: Sequence[float]) -> np.ndarray:
    return _sort_desc(np.linalg.eigvals(generator(ss, np.asarray(xis, dtype=float))))


def pencil(ss: SymmetricSystem, xi: float, lam: complex) -> np.ndarray:
    return lam * ss.A0h + 1j * xi * ss.A1h + ss.L + xi**2 * ss.Bh


def make_grid(xi_min: float, xi_max: float, n: int, spacing: str = "log") -> np.ndarray:
    if not (0 < xi_min < xi_max) or n < 2:
        raise ValueError(f"need 0 < xi_min < xi_max and n >= 2, got {xi_min}, {xi_max}, {n}")
    if spacing == "log":
        return np.logspace(np.log10(xi_min), np.log10(xi_max), n)
    if spacing == "linear":
        return np.linspace(xi_min, xi_max, n)
    raise ValueError(f"unknown spacing {spacing!r}")


@dataclass(frozen=True)
class DispersionCurve:
    xi_grid: np.ndarray
    lambdas: np.ndarray  # (n, 4), each row sorted by descending real part
    max_re: np.ndarray
    k_sharp: float
    argmin: int
    failure: NotDissipativeError | None

    @property
    def dissipative(self) -> bool:
        return self.failure is None

    def rates(self) -> np.ndarray:
        """-max_re (1 + xi^2) / xi^2; k_sharp is their minimum."""
        x2 = self.xi_grid**2
        return -self.max_re * (1.0 + x2) / x2

    def envelope(self, k: float | None = None) -> np.ndarray:
        k = self.k_sharp if k is None else k
        x2 = self.xi_grid**2
        return -k * x2 / (1.0 + x2)

    def summary(self) -> dict:
        return {
            "dissipative": self.dissipative,
            "k_sharp": self.k_sharp,
            "argmin_xi": float(self.xi_grid[self.argmin]),
            "max_max_re": float(np.max(self.max_re)),
            "n": int(len(self.xi_grid)),
            "xi_min": float(self.xi_grid[0]),
            "xi_max": float(self.xi_grid[-1]),
            "failure": None if self.failure is None else str(self.failure),
        }

    def write_csv(self, path: str | Path) -> None:
        env = self.envelope()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["xi", *(f"re_lambda_{i}" for i in range(1, 5)),
                        *(f"im_lambda_{i}" for i in range(1, 5)), "envelope"])
            for xi, lam, e in zip(self.xi_grid, self.lambdas, env):
                w.writerow([_g(xi), *(_g(v) for v in lam.real), *(_g(v) for v in lam.imag), _g(e)])


def _g(x: float) -> str:
    return format(float(x), ".17g")


def scan(ss: SymmetricSystem, xi_min: float = 1e-3, xi_max: float = 1e3, n: int = 200,
         spacing: str = "log") -> DispersionCurve:
    grid = make_grid(xi_min, xi_max, n, spacing)
    lam = dispersion_batch(ss, grid)
    max_re = lam[:, 0].real.copy()
    failure = None
    bad = np.nonzero(max_re >= 0)[0]
    if len(bad):
        i = int(bad[np.argmax(max_re[bad])])
        failure = NotDissipativeError(float(grid[i]), float(max_re[i]))
    rates = -max_re * (1.0 + grid**2) / grid**2
    argmin = int(np.argmin(rates))
    return DispersionCurve(grid, lam, max_re, float(rates[argmin]), argmin, failure)


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    min_slack: float  # in rate units: -max_re (1 + xi^2) / xi^2 - k
    worst_xi: float


def verify_bound(curve: DispersionCurve, k: float) -> BoundCheck:
    """Does Re lam(xi) <= -k xi^2 / (1 + xi^2) hold at every grid point?"""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    slack = curve.rates() - k
    i = int(np.argmin(slack))
    return BoundCheck(bool(slack[i] >= 0), float(slack[i]), float(curve.xi_grid[i]))

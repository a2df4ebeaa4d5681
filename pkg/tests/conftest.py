from __future__ import annotations

import numpy as np
import pytest

from dissiplab.eos import FluidModel, evaluate
from dissiplab.matrices import StateVector, assemble, build_system

UNIT = StateVector(1.0, 0.0, 1.0, 0.0)


@pytest.fixture
def gas():
    return FluidModel.ideal_gas(R=1.0, gamma=1.4, kappa=1.0, nu=0.0, tau=1.0)


@pytest.fixture
def viscous_gas():
    return FluidModel.ideal_gas(R=1.0, gamma=1.4, kappa=1.0, nu=0.1, tau=1.0)


@pytest.fixture
def unit_ss(gas):
    return build_system(gas, UNIT)


@pytest.fixture
def unit_ss_viscous(viscous_gas):
    return build_system(viscous_gas, UNIT)


def random_states(n: int, seed: int = 0, equilibrium: bool = False) -> list[StateVector]:
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 10.0, n)
    u = rng.uniform(-5.0, 5.0, n)
    theta = rng.uniform(0.1, 10.0, n)
    q = np.zeros(n) if equilibrium else rng.uniform(-2.0, 2.0, n)
    return [StateVector(*map(float, v)) for v in zip(rho, u, theta, q)]


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

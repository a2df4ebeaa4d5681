from __future__ import annotations

import numpy as np
import pytest

from conftest import UNIT, random_states
from dissiplab.eos import FluidModel
from dissiplab.errors import DomainError, SymmetryError
from dissiplab.matrices import StateVector, assemble, build_system, is_equilibrium, production, symmetrize


def test_unit_state_assembly(gas):
    sm = assemble(UNIT, gas)
    np.testing.assert_allclose(sm.A0, np.diag([1.0, 1.0, 2.5, 1.0]), rtol=1e-15, atol=0)
    expected = [[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 0]]
    np.testing.assert_array_equal(sm.A1, np.array(expected, dtype=float))
    np.testing.assert_array_equal(sm.Qvec, np.zeros(4))
    np.testing.assert_array_equal(sm.D, np.diag([0.0, 0.0, 0.0, -1.0]))
    assert not sm.B.any()


def test_b_single_entry(viscous_gas):
    sm = assemble(StateVector(2.0, 1.0, 3.0, 0.5), viscous_gas)
    B = np.zeros((4, 4))
    B[1, 1] = 0.1
    np.testing.assert_array_equal(sm.B, B)
    np.testing.assert_array_equal(sm.Qvec, [0.0, 0.0, 0.0, -0.5])


def test_zero_velocity_zero_diagonal(gas):
    sm = assemble(StateVector(3.0, 0.0, 0.4, 1.0), gas)
    assert not np.diag(sm.A1).any()


def test_theta_p_theta_entry():
    m = FluidModel.ideal_gas(R=2.0)
    sm = assemble(StateVector(3.0, 0.0, 5.0, 0.0), m)
    assert sm.A1[2, 1] == pytest.approx(5.0 * 6.0)
    assert sm.A1[1, 2] == pytest.approx(6.0)


def test_state_domain():
    with pytest.raises(DomainError):
        StateVector(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        StateVector(1.0, 0.0, -1.0)


def test_symmetrized_unit_state(unit_ss):
    expected = [[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 0]]
    np.testing.assert_allclose(unit_ss.A1h, expected, atol=0)
    np.testing.assert_array_equal(unit_ss.L, np.diag([0.0, 0.0, 0.0, 1.0]))
    assert not unit_ss.Bh.any()
    np.testing.assert_array_equal(np.diag(unit_ss.S), [1.0, 1.0, 1.0, 1.0])


def test_symmetrize_rejects_broken_assembly(gas):
    sm = assemble(StateVector(2.0, 1.0, 3.0, 0.0), gas)
    A1 = sm.A1.copy()
    A1[2, 1] *= 1.01
    broken = type(sm)(sm.A0, A1, sm.B, sm.D, sm.Qvec, sm.at_state, sm.thermo, sm.tau)
    with pytest.raises(SymmetryError):
        symmetrize(broken)


def test_random_states_symmetric_and_definite(viscous_gas):
    for U in random_states(1000, seed=11):
        ss = build_system(viscous_gas, U)
        assert max(ss.symmetry_residuals().values()) <= 1e-12
        assert np.linalg.eigvalsh(ss.A0h)[0] > 0
        assert np.linalg.eigvalsh(ss.Bh)[0] >= -1e-14
        assert np.linalg.eigvalsh(ss.L)[0] >= -1e-14


def test_a0_inverse(gas):
    for U in random_states(50, seed=2):
        sm = assemble(U, gas)
        np.testing.assert_allclose(sm.A0_inv() @ sm.A0, np.eye(4), atol=1e-14)


def test_d_is_jacobian_of_production(gas):
    for U in random_states(20, seed=5):
        sm = assemble(U, gas)
        base = U.as_array()
        J = np.empty((4, 4))
        for j in range(4):
            h = 1e-6 * max(1.0, abs(base[j]))
            up, dn = base.copy(), base.copy()
            up[j] += h
            dn[j] -= h
            J[:, j] = (production(StateVector(*up)) - production(StateVector(*dn))) / (2 * h)
        np.testing.assert_allclose(J, sm.D, atol=1e-7)


@pytest.mark.parametrize("U,tol,expected", [
    (StateVector(1, 5, 2, 0), 1e-12, True),
    (StateVector(1, 0, 1, 1e-3), 1e-6, False),
    (StateVector(1, 0, 1, 1e-9), 1e-6, True),
])
def test_is_equilibrium(U, tol, expected):
    assert is_equilibrium(U, tol) is expected

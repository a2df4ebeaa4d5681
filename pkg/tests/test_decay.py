from __future__ import annotations

import csv
import math

import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import trapezoid

from dissiplab.coupling import certified_compensating, compensating_inviscid
from dissiplab.decay import (
    GaussianBump,
    ModePropagator,
    decay_trace,
    energy_balance_residual,
    evolve_mode,
    fit_slope,
    lyapunov_check,
    lyapunov_functional,
    pointwise_bound_check,
    trajectory,
)
from dissiplab.dispersion import generator, scan
from dissiplab.eos import evaluate
from dissiplab.errors import QuadratureError
from dissiplab.matrices import SymmetricSystem


def _bare(ss):
    z = np.zeros((4, 4))
    return SymmetricSystem(ss.S, ss.A0h, ss.A1h, z, z, ss.state, ss.tau)


def test_gaussian_closed_forms():
    g = GaussianBump((1.0, 0.0, 0.0, 0.0), 1.0)
    assert g.l1_norm == pytest.approx(math.sqrt(2 * math.pi))
    assert g.moment(0) == pytest.approx(math.sqrt(math.pi))
    assert g.moment(1) == pytest.approx(math.sqrt(math.pi) / 2)
    # Plancherel: the L2 norm of the profile equals that of the transform
    x = np.linspace(-20, 20, 40001)
    prof = np.sum(g.profile(x) ** 2, axis=1)
    assert trapezoid(prof, x) == pytest.approx(g.moment(0), rel=1e-10)
    # transform by direct quadrature with the unitary convention
    for xi in (0.0, 0.7, 2.0):
        direct = trapezoid(g.profile(x)[:, 0] * np.exp(-1j * xi * x), x) / math.sqrt(2 * math.pi)
        assert direct.real == pytest.approx(g.transform(xi)[0], abs=1e-12)
    wide = GaussianBump((0.0, 2.0, 0.0, 1.0), 2.5)
    assert wide.l1_norm == pytest.approx(math.sqrt(5) * 2.5 * math.sqrt(2 * math.pi))
    assert wide.tail_fraction(1, 8.0 / 2.5) < 1e-12


def test_evolve_t0_exact(unit_ss):
    u0 = np.array([0.3 + 0.1j, -1.0, 2.0, 0.5j])
    np.testing.assert_array_equal(evolve_mode(unit_ss, 0.8, u0, 0.0), u0)


def test_evolve_relaxation_mode_at_xi_zero(unit_ss):
    for t in (0.5, 3.0):
        out = evolve_mode(unit_ss, 0.0, [0, 0, 0, 1.0], t)
        np.testing.assert_allclose(out, [0, 0, 0, math.exp(-t)], atol=1e-14)


def test_evolve_matches_expm(unit_ss_viscous):
    u0 = np.array([1.0, 0.2, -0.4, 0.1])
    for xi, t in ((0.3, 2.0), (5.0, 0.7), (40.0, 1.5)):
        ref = scipy.linalg.expm(t * generator(unit_ss_viscous, xi)) @ u0
        np.testing.assert_allclose(evolve_mode(unit_ss_viscous, xi, u0, t), ref, atol=1e-10)


def test_propagator_fallback_used_for_defective_generator(unit_ss):
    prop = ModePropagator(unit_ss, [0.0, 1.0])
    # G(0) has a triple zero eigenvalue with a full eigenbasis: no fallback needed
    assert prop.cond[0] < 1e8
    out = prop.evolve(np.eye(4)[0], 2.0)
    ref = scipy.linalg.expm(2.0 * generator(unit_ss, 1.0)) @ np.eye(4)[0]
    np.testing.assert_allclose(out[1], ref, atol=1e-12)


def test_energy_residual_second_order(unit_ss):
    u0 = np.array([1.0, 0.0, 0.0, 0.0])
    r1 = energy_balance_residual(unit_ss, 1.0, trajectory(unit_ss, 1.0, u0, 1e-3, 10000), 1e-3)
    r2 = energy_balance_residual(unit_ss, 1.0, trajectory(unit_ss, 1.0, u0, 5e-4, 20000), 5e-4)
    assert r1 <= 1e-5
    assert 3.5 <= r1 / r2 <= 4.5


def test_conservative_energy_constant(unit_ss):
    bare = _bare(unit_ss)
    traj = trajectory(bare, 1.3, [1.0, 0.5, 0.0, -0.2], 1e-2, 1000)
    E = np.einsum("ni,ij,nj->n", traj.conj(), bare.A0h, traj).real
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-10


def test_lyapunov_valid_k(unit_ss, gas):
    K = compensating_inviscid(unit_ss, evaluate(gas, 1.0, 1.0))
    traj = trajectory(unit_ss, 1.0, [1.0, 0.0, 0.0, 0.0], 1e-2, 1000)
    res = lyapunov_check(unit_ss, K, 1.0, traj)
    assert res.passed
    assert np.all(res.M > 0)


def test_lyapunov_delta_zero_and_zero_k(unit_ss, gas):
    K = compensating_inviscid(unit_ss, evaluate(gas, 1.0, 1.0))
    traj = trajectory(unit_ss, 0.5, [0.0, 1.0, 0.0, 0.0], 1e-2, 200)
    M0 = lyapunov_functional(unit_ss, K.K, 0.5, 0.0, traj)
    E = np.einsum("ni,ij,nj->n", traj.conj(), unit_ss.A0h, traj)
    np.testing.assert_allclose(M0, E)
    assert np.all(np.diff(M0.real) <= 1e-12)
    Mz = lyapunov_functional(unit_ss, np.zeros((4, 4)), 0.5, 0.7, traj)
    np.testing.assert_allclose(Mz, E)


def test_pointwise_bound_unit(unit_ss):
    k = scan(unit_ss).k_sharp
    pc = pointwise_bound_check(unit_ss, k, np.logspace(-2, 2, 50), np.linspace(0, 100, 50),
                               lambda x: np.tile([1.0, 0.0, 0.0, 0.0], (len(x), 1)))
    assert pc.violations == 0
    assert pc.C1 == pytest.approx(math.sqrt(2.5))


def test_fit_slope_power_law():
    t = np.logspace(-2, 3, 60)
    assert fit_slope(t, 3.0 * (1 + t) ** -0.4, (100.0, 1000.0)) == pytest.approx(-0.4, abs=1e-12)


def test_decay_trace_short(unit_ss, gas, tmp_path):
    K = certified_compensating(unit_ss, evaluate(gas, 1.0, 1.0))
    data = GaussianBump()
    tr = decay_trace(unit_ss, K, data, t_max=50.0, n_xi=8193, k_sharp=scan(unit_ss).k_sharp, n_t=21,
                     sample_xis=(1.0,), energy_xis=(1.0,), t_check=2.0)
    assert tr.norms[0][0] ** 2 == pytest.approx(data.moment(0), rel=1e-8)
    assert tr.norms[1][0] ** 2 == pytest.approx(data.moment(1), rel=1e-8)
    assert np.all(np.diff(tr.norms[0]) <= 1e-12)
    assert tr.envelope_ok and tr.M_monotone
    path = tmp_path / "trace.csv"
    tr.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "norm_l0", "norm_l1", "envelope_l0", "envelope_l1"]
    assert len(rows) == 22


def test_decay_trace_quadrature_errors(unit_ss):
    with pytest.raises(QuadratureError):
        decay_trace(unit_ss, None, GaussianBump(), t_max=10.0, xi_cut=3.0)
    with pytest.raises(QuadratureError):
        decay_trace(unit_ss, None, GaussianBump(), t_max=10.0, n_xi=65, n_t=5)

from __future__ import annotations

import math

import numpy as np
import pytest

from dissiplab.eos import FluidKind, FluidModel, Transport, check_hypotheses, evaluate, sample_box
from dissiplab.errors import DomainError


def test_ideal_gas_unit_state():
    ev = evaluate(FluidModel.ideal_gas(R=1, gamma=1.4), 1.0, 1.0)
    assert (ev.p, ev.p_rho, ev.p_theta) == (1.0, 1.0, 1.0)
    assert ev.e == pytest.approx(2.5)
    assert ev.e_theta == pytest.approx(2.5)
    assert ev.e_rho == 0.0


def test_ideal_gas_other_constants():
    ev = evaluate(FluidModel.ideal_gas(R=2, gamma=2), 3.0, 0.5)
    assert ev.p == pytest.approx(3.0)
    assert ev.p_rho == pytest.approx(1.0)
    assert ev.p_theta == pytest.approx(6.0)
    assert ev.e_theta == pytest.approx(2.0)


def test_power_law_hand_values():
    ev = evaluate(FluidModel.power_law(A=1, alpha=2, beta=1, cv=1), 2.0, 1.0)
    assert (ev.p, ev.p_rho, ev.p_theta) == (4.0, 4.0, 4.0)
    assert ev.e_rho == 0.0


@pytest.mark.parametrize("rho,theta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0), (1.0, float("nan"))])
def test_evaluate_rejects_outside_domain(rho, theta):
    with pytest.raises(DomainError):
        evaluate(FluidModel.ideal_gas(), rho, theta)


def test_model_constructor_validation():
    with pytest.raises(DomainError):
        FluidModel.ideal_gas(tau=0.0)
    with pytest.raises(DomainError):
        FluidModel.ideal_gas(gamma=1.0)
    with pytest.raises(DomainError):
        FluidModel.ideal_gas(kappa=0.0)
    with pytest.raises(DomainError):
        FluidModel.ideal_gas(nu=-0.1)
    with pytest.raises(DomainError):
        FluidModel.power_law(cv=0.0)


def test_transport_power_law_and_roundtrip():
    k = Transport.parse({"coeff": 2.0, "rho_exp": 1.0, "theta_exp": 0.5})
    assert k(2.0, 4.0) == pytest.approx(8.0)
    assert Transport.parse(k.to_dict()) == k
    assert Transport.parse(3.0).to_dict() == 3.0
    m = FluidModel.power_law(A=2, alpha=1.5, beta=1, cv=0.7, kappa=k.to_dict(), nu=0.2, tau=0.5)
    assert FluidModel.from_dict(m.to_dict()) == m
    assert m.kind is FluidKind.POWER_LAW


def test_identity_holds_to_roundoff():
    models = [FluidModel.ideal_gas(R=0.7, gamma=1.67), FluidModel.power_law(A=1.3, alpha=1.4, beta=0.6, cv=2.0)]
    rng = np.random.default_rng(3)
    for m in models:
        for rho, th in rng.uniform(0.1, 10.0, (50, 2)):
            ev = evaluate(m, rho, th)
            target = (ev.p - th * ev.p_theta) / rho**2
            assert abs(ev.e_rho - target) <= 1e-14 * max(1.0, abs(target))


def _fd(f, x):
    h = 1e-6 * max(1.0, abs(x))
    return (f(x + h) - f(x - h)) / (2 * h)


@pytest.mark.parametrize("model", [
    FluidModel.ideal_gas(R=1.3, gamma=1.4),
    FluidModel.power_law(A=1.0, alpha=1.0, beta=1.0, cv=1.0),
    FluidModel.power_law(A=0.8, alpha=2.0, beta=0.0, cv=1.5),
    FluidModel.power_law(A=1.0, alpha=1.7, beta=1.3, cv=0.5),
])
def test_derivatives_match_central_differences(model):
    rng = np.random.default_rng(7)
    exact_e = model.kind is FluidKind.IDEAL_GAS or model.beta in (0.0, 1.0)
    for rho, th in rng.uniform(0.2, 10.0, (100, 2)):
        ev = evaluate(model, rho, th)
        dp_rho = _fd(lambda r: evaluate(model, r, th).p, rho)
        dp_th = _fd(lambda t: evaluate(model, rho, t).p, th)
        assert dp_rho == pytest.approx(ev.p_rho, rel=1e-6)
        assert dp_th == pytest.approx(ev.p_theta, rel=1e-6, abs=1e-12)
        if exact_e:
            de_th = _fd(lambda t: evaluate(model, rho, t).e, th)
            de_rho = _fd(lambda r: evaluate(model, r, th).e, rho)
            assert de_th == pytest.approx(ev.e_theta, rel=1e-6)
            assert de_rho == pytest.approx(ev.e_rho, rel=1e-6, abs=1e-9)


def test_hypotheses_ideal_gas_pass():
    rep = check_hypotheses(FluidModel.ideal_gas(), ((0.1, 10.0), (0.1, 10.0)), 100)
    assert rep.passed
    assert rep.failures() == []


def test_hypotheses_negative_exponent_reports_witness():
    rep = check_hypotheses(FluidModel.power_law(A=1, alpha=-1, beta=1, cv=1), ((0.1, 10.0), (0.1, 10.0)), 100)
    assert not rep.passed
    bad = {c.name: c for c in rep.failures()}
    assert set(bad) == {"p_rho > 0"}
    c = bad["p_rho > 0"]
    rho, th = c.worst_at
    assert c.worst_value < 0
    assert c.worst_value == pytest.approx(-1.0 * th / rho**2)


def test_hypotheses_power_law_quadratic_temperature():
    rep = check_hypotheses(FluidModel.power_law(A=1, alpha=1, beta=2, cv=0.5), ((0.5, 2.0), (0.5, 2.0)), 100)
    assert rep.passed


def test_hypotheses_deterministic_given_seed():
    m = FluidModel.power_law(A=1, alpha=-1, beta=1, cv=1)
    a = check_hypotheses(m, ((0.1, 10.0), (0.1, 10.0)), 50, seed=4).to_dict()
    b = check_hypotheses(m, ((0.1, 10.0), (0.1, 10.0)), 50, seed=4).to_dict()
    assert a == b


@pytest.mark.parametrize("box", [((0.0, 1.0), (0.1, 1.0)), ((2.0, 1.0), (0.1, 1.0)), ((0.1, 1.0), (-1.0, 1.0))])
def test_invalid_box(box):
    with pytest.raises(DomainError):
        check_hypotheses(FluidModel.ideal_gas(), box, 10)


def test_sample_box_inside():
    pts = sample_box(((0.5, 2.0), (3.0, 4.0)), 64, seed=1)
    assert pts.shape == (64, 2)
    assert np.all((pts[:, 0] >= 0.5) & (pts[:, 0] <= 2.0) & (pts[:, 1] >= 3.0) & (pts[:, 1] <= 4.0))
    assert math.isfinite(float(pts.sum()))

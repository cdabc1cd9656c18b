import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from dualnash.canonical import NegLog, ScaledLogistic, SumSquares, psi_from_dict
from dualnash.errors import DomainError

PSIS = [SumSquares(), ScaledLogistic(1.0), ScaledLogistic(2.5), NegLog()]


def primal_sample(psi, rng, m):
    if psi.kind == "neg_log":
        return rng.uniform(0.1, 5.0, m)
    return rng.uniform(-4.0, 4.0, m)


@pytest.mark.parametrize("psi", PSIS, ids=repr)
def test_conjugate_gradient_inverts_gradient(psi, rng):
    xi = primal_sample(psi, rng, 200)
    np.testing.assert_allclose(psi.conj_grad(psi.grad(xi)), xi, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("psi", PSIS, ids=repr)
def test_fenchel_young_equality_on_the_graph(psi, rng):
    xi = primal_sample(psi, rng, 50)
    s = psi.grad(xi)
    for a, b in zip(xi, s):
        lhs = psi.value(np.array([a])) + psi.conj_value(np.array([b]))
        assert lhs == pytest.approx(a * b, abs=1e-9)


@pytest.mark.parametrize("psi", PSIS, ids=repr)
def test_conjugate_value_is_a_supremum(psi, rng):
    lo, hi = (1e-6, 50.0) if psi.kind == "neg_log" else (-40.0, 40.0)
    xi = primal_sample(psi, rng, 10)
    for s in psi.grad(xi):
        best = minimize_scalar(lambda t: -(s * t - psi.value(np.array([t]))), bounds=(lo, hi),
                               method="bounded", options={"xatol": 1e-12})
        assert psi.conj_value(np.array([s])) == pytest.approx(-best.fun, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("psi", PSIS, ids=repr)
def test_gradients_match_finite_differences(psi, rng):
    h = 1e-6
    xi = primal_sample(psi, rng, 20)
    fd = np.array([(psi.value(np.array([t + h])) - psi.value(np.array([t - h]))) / (2 * h) for t in xi])
    np.testing.assert_allclose(psi.grad(xi), fd, rtol=1e-5, atol=1e-6)
    s = psi.grad(xi)
    fd = np.array([(psi.conj_value(np.array([t + h])) - psi.conj_value(np.array([t - h]))) / (2 * h) for t in s])
    np.testing.assert_allclose(psi.conj_grad(s), fd, rtol=1e-5, atol=1e-6)


def test_projection_onto_theta_reproduces_closed_forms():
    lo, hi = np.array([-1.0]), np.array([2.0])
    assert SumSquares().project_theta(np.array([1.0]), lo, hi)[0] == pytest.approx(0.5)
    assert SumSquares().project_theta(np.array([10.0]), lo, hi)[0] == pytest.approx(2.0)
    s = ScaledLogistic(1.0)
    assert s.project_theta(np.array([0.5]), lo, hi)[0] == pytest.approx(0.0, abs=1e-15)
    assert NegLog().project_theta(np.array([-1.0]), np.array([0.1]), np.array([5.0]))[0] == pytest.approx(1.0)


def test_dual_bounds_follow_the_monotone_gradient():
    lo, hi = SumSquares().dual_bounds(np.array([-1.0]), np.array([3.0]))
    assert (lo[0], hi[0]) == (-2.0, 6.0)
    lo, hi = ScaledLogistic(2.0).dual_bounds(np.array([-np.inf]), np.array([np.inf]))
    # open ends become the shrunken working domain
    assert lo[0] == pytest.approx(0.0, abs=1e-8) and lo[0] > 0
    assert hi[0] == pytest.approx(2.0, abs=1e-8) and hi[0] < 2.0


def test_domain_errors():
    with pytest.raises(DomainError):
        NegLog().value(np.array([-1.0]))
    with pytest.raises(DomainError):
        ScaledLogistic(1.0).check_dual(np.array([1.5]))
    with pytest.raises(DomainError):
        NegLog().check_dual(np.array([0.5]))


@given(st.floats(-30, 30))
@settings(max_examples=200, deadline=None)
def test_scaled_logistic_roundtrip_property(t):
    psi = ScaledLogistic(1.3)
    s = psi.grad(np.array([t]))
    if 0 < s[0] < 1.3:
        assert psi.conj_grad(s)[0] == pytest.approx(t, abs=1e-6 * (1 + abs(t)) + 1e-9 * np.exp(abs(t)))


def test_dict_roundtrip():
    for psi in PSIS:
        q = psi_from_dict(psi.to_dict())
        x = np.array([0.7, 1.2])
        assert q.value(x) == pytest.approx(psi.value(x))

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import inner_min, table_maps
from dualnash.errors import ConfigError, DomainError
from dualnash.mirror import (BallGenerator, GibbsEntropy, HalfSquaredNorm, IntervalEntropy, OrthantEntropy,
                             default_map, map_from_dict)
from dualnash.sets import Ball, Box, FullSpace, NonNegOrthant, Simplex

MAPS = table_maps()
NAMES = list(MAPS)


def draw(name, seed, m):
    m_, samp = MAPS[name]
    return np.asarray(samp(np.random.default_rng(seed), m), dtype=float)


@pytest.mark.parametrize("name", NAMES)
def test_conjugate_gradient_inverts_gradient(name):
    m, _ = MAPS[name]
    X = draw(name, 0, 1000)
    err = max(float(np.max(np.abs(m.conj_grad(m.grad(x)) - x))) for x in X)
    assert err <= 1e-8


@pytest.mark.parametrize("name", NAMES)
def test_conjugate_gradient_solves_the_inner_minimisation(name, rng):
    m, _ = MAPS[name]
    for _ in range(10):
        y = rng.normal(0, 2, m.dim)
        c = m.conj_grad(y)
        assert m.target.contains(c)
        assert np.max(np.abs(inner_min(m, y) - c) / (1 + np.abs(c))) <= 1e-6


@pytest.mark.parametrize("name", NAMES)
def test_conjugate_value_matches_its_gradient(name, rng):
    m, _ = MAPS[name]
    h = 1e-6
    for _ in range(5):
        y = rng.normal(0, 1, m.dim)
        fd = np.array([(m.conj_value(y + h * e) - m.conj_value(y - h * e)) / (2 * h) for e in np.eye(m.dim)])
        np.testing.assert_allclose(m.conj_grad(y), fd, atol=1e-6)


@pytest.mark.parametrize("name", NAMES)
@given(seed=st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_fenchel_young(name, seed):
    m, _ = MAPS[name]
    rng = np.random.default_rng(seed)
    x = draw(name, seed, 1)[0]
    y = rng.normal(0, 2, m.dim)
    assert m.value(x) + m.conj_value(y) >= x @ y - 1e-9
    xc = m.conj_grad(y)
    if m.target.contains(xc) and name != "half_squared_norm" or np.allclose(xc, y):
        assert m.value(xc) + m.conj_value(y) == pytest.approx(xc @ y, abs=1e-7 * (1 + abs(xc @ y)))


@pytest.mark.parametrize("name", NAMES)
@given(seed=st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_strong_convexity(name, seed):
    m, _ = MAPS[name]
    a, b = draw(name, seed, 2)
    assert m.bregman(a, b) >= 0.5 * m.mu * np.sum((a - b) ** 2) - 1e-10
    assert m.bregman(a, a) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", NAMES)
@given(seed=st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_three_point_identity(name, seed):
    m, _ = MAPS[name]
    x, y, z = draw(name, seed, 3)
    lhs = m.bregman(x, z)
    rhs = m.bregman(x, y) + m.bregman(y, z) - (x - y) @ (m.grad(z) - m.grad(y))
    assert lhs == pytest.approx(rhs, abs=1e-8 * (1 + abs(lhs)))


@pytest.mark.parametrize("name", NAMES)
@given(seed=st.integers(0, 2 ** 31), alpha=st.floats(1e-3, 1.0))
@settings(max_examples=40, deadline=None)
def test_mirror_step_bound(name, seed, alpha):
    # alpha <g, x - u> <= D(u, x) - D(u, x+) + alpha^2 |g|^2 / (2 mu)
    m, _ = MAPS[name]
    rng = np.random.default_rng(seed)
    x, u = draw(name, seed, 2)
    g = rng.normal(0, 1, m.dim)
    xp = m.step(x, g, alpha)
    if name == "orthant_entropy":
        # the modulus 1/U only holds on the working box [0, U]
        assume(np.all(xp <= m.working_upper))
    lhs = alpha * g @ (x - u)
    rhs = m.bregman(u, x) - m.bregman(u, xp) + alpha ** 2 * (g @ g) / (2 * m.mu)
    assert lhs <= rhs + 1e-9


# the identity needs a Legendre-type generator, which rules out the projection
@pytest.mark.parametrize("name", [n for n in NAMES if n != "half_squared_norm"])
def test_conjugate_bregman_is_the_primal_one_reversed(name):
    m, _ = MAPS[name]
    a, b = draw(name, 3, 2)
    assert m.conj_bregman(m.grad(b), m.grad(a)) == pytest.approx(m.bregman(a, b), abs=1e-9)


def test_gibbs_roundtrip_holds_modulo_constants(rng):
    m = GibbsEntropy(Simplex(3))
    y = rng.normal(size=3)
    d = m.grad(m.conj_grad(y)) - y
    np.testing.assert_allclose(d, d[0], atol=1e-12)


def test_closed_forms():
    assert np.allclose(IntervalEntropy(a=[0.0], b=[2.0]).conj_grad(np.array([0.0])), [1.0])
    assert np.allclose(OrthantEntropy(NonNegOrthant(1)).conj_grad(np.array([np.log(3.0)])), [3.0])
    b = BallGenerator(Ball([1.0, 0.0], 2.0))
    np.testing.assert_allclose(b.conj_grad(np.array([3.0, 4.0])), [1.0 + 2 * 3 / np.sqrt(26), 2 * 4 / np.sqrt(26)])
    np.testing.assert_allclose(HalfSquaredNorm(Box([0.0], [1.0])).conj_grad(np.array([2.0])), [1.0])
    np.testing.assert_allclose(GibbsEntropy(Simplex(2)).conj_grad(np.array([0.0, np.log(3.0)])), [0.25, 0.75])


def test_moduli():
    assert IntervalEntropy(a=[0.0, 0.0], b=[1.0, 4.0]).mu == pytest.approx(1.0)
    assert BallGenerator(Ball([0.0], 4.0)).mu == pytest.approx(0.25)
    assert OrthantEntropy(NonNegOrthant(2), working_upper=5.0).mu == pytest.approx(0.2)


def test_points_outside_the_set_are_rejected():
    with pytest.raises(DomainError):
        IntervalEntropy(a=[0.0], b=[1.0]).value(np.array([1.5]))
    with pytest.raises(DomainError):
        BallGenerator(Ball([0.0, 0.0], 1.0)).grad(np.array([2.0, 0.0]))
    with pytest.raises(ConfigError):
        GibbsEntropy(Box([0.0], [1.0]))


def test_boundary_points_are_clamped_not_rejected():
    m = IntervalEntropy(a=[0.0], b=[1.0])
    assert np.isfinite(m.grad(np.array([0.0]))).all()
    assert np.isfinite(GibbsEntropy(Simplex(2)).grad(np.array([1.0, 0.0]))).all()


def test_default_maps_per_set():
    assert isinstance(default_map(Box([0.0], [1.0])), IntervalEntropy)
    assert isinstance(default_map(Box([0.0], [np.inf])), HalfSquaredNorm)
    assert isinstance(default_map(Simplex(3)), GibbsEntropy)
    assert isinstance(default_map(Ball([0.0], 1.0)), BallGenerator)
    assert isinstance(default_map(NonNegOrthant(2)), OrthantEntropy)
    assert isinstance(default_map(FullSpace(2)), HalfSquaredNorm)
    assert isinstance(map_from_dict({"kind": "half_squared_norm"}, Box([0.0], [1.0])), HalfSquaredNorm)
    with pytest.raises(ConfigError):
        map_from_dict({"kind": "gibbs_entropy"}, Box([0.0], [1.0]))

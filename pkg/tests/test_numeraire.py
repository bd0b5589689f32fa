import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from numeraire_mot import couplings as cp
from numeraire_mot.checks import involution_error, reflection_identity_errors
from numeraire_mot.errors import MartingaleViolation, MeanMismatch
from numeraire_mot.measures import AtomList, LogNormal, TabulatedDensity, check_convex_order
from numeraire_mot.numeraire import (
    symmetrize_coupling,
    symmetrize_hedge,
    symmetrize_hedge_arrays,
    symmetrize_marginal,
    symmetrize_payoff,
)
from numeraire_mot.payoffs import NEGATIVE, POSITIVE, hedgeable, straddle_type_I, straddle_type_II, x_exp

from oracles import ln_cdf, ln_G, random_martingale_pair


def grid(rng, n=500):
    return np.exp(rng.uniform(-2, 2, (2, n)))


# ---- marginals


def test_two_atom_example():
    s = symmetrize_marginal(AtomList([0.8, 1.4], [2 / 3, 1 / 3]))
    np.testing.assert_allclose(s.points, [1 / 1.4, 1.25], rtol=1e-15)
    np.testing.assert_allclose(s.weights, [7 / 15, 8 / 15], rtol=1e-14)
    assert s.points[0] == pytest.approx(0.714286, abs=1e-6)


def test_reciprocal_two_point_law_is_fixed():
    m = AtomList([0.5, 2.0], [2 / 3, 1 / 3])
    s = symmetrize_marginal(m)
    np.testing.assert_allclose(s.points, m.points, rtol=1e-15)
    np.testing.assert_allclose(s.weights, m.weights, rtol=1e-14)


@pytest.mark.parametrize("sigma", [0.1, 0.2, 0.5])
def test_lognormal_is_fixed(sigma):
    s = symmetrize_marginal(LogNormal(sigma))
    assert s == LogNormal(sigma)
    # independently: F(y) = 1 - G(1/y) for the unit-mean log-normal
    y = np.geomspace(0.05, 20, 400)
    np.testing.assert_allclose(s.cdf(y), 1.0 - ln_G(sigma, 1.0 / y), atol=1e-14)


def test_tabulated_reflection_identities():
    x = np.linspace(0.3, 2.2, 600)
    m = TabulatedDensity(x, np.exp(-8 * (x - 1) ** 2))
    assert involution_error(m) <= 1e-12
    ef, eg = reflection_identity_errors(m)
    assert ef <= 1e-9 and eg <= 1e-9
    s = symmetrize_marginal(m)
    assert s.mean == pytest.approx(1.0, abs=1e-9)
    # density of the reflected law is p(1/y) / y^3
    y = np.linspace(0.6, 1.8, 50)
    np.testing.assert_allclose(s.pdf(y), m.pdf(1 / y) / y**3, rtol=1e-9)


def test_mean_must_be_one():
    with pytest.raises(MeanMismatch):
        symmetrize_marginal(AtomList([2.0], [1.0]))


def test_convex_order_is_preserved():
    a, b = symmetrize_marginal(LogNormal(0.2)), symmetrize_marginal(LogNormal(0.3))
    assert check_convex_order(a, b).ok
    x = np.linspace(0.4, 2.0, 400)
    t1 = TabulatedDensity(x, np.exp(-20 * (x - 1) ** 2))
    t2 = TabulatedDensity(x, np.exp(-8 * (x - 1) ** 2))
    assert check_convex_order(t1, t2).ok
    assert check_convex_order(symmetrize_marginal(t1), symmetrize_marginal(t2)).ok


# ---- payoffs


def test_type_II_reflects_to_type_I(rng):
    x, y = grid(rng)
    diff = symmetrize_payoff(straddle_type_II(1.0))(x, y) - straddle_type_I(1.0)(x, y)
    assert np.max(np.abs(diff)) <= 1e-12


@pytest.mark.parametrize("alpha", [0.5, 0.9, 1.3])
def test_type_II_reflects_to_scaled_type_I(rng, alpha):
    x, y = grid(rng)
    lhs = symmetrize_payoff(straddle_type_II(alpha))(x, y)
    rhs = alpha * straddle_type_I(1.0 / alpha)(x, y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_payoff_involution_and_sign_flip(rng):
    c = x_exp()
    s = symmetrize_payoff(c)
    assert s.sm_sign == NEGATIVE and symmetrize_payoff(s) is c
    assert symmetrize_payoff(s).sm_sign == POSITIVE
    # fresh evaluation, not the cached back-reference
    x, y = grid(rng)
    twice = x * 0 + y * s.evaluator(1 / x, 1 / y)
    np.testing.assert_allclose(twice, c(x, y), rtol=1e-13)


def test_reflected_growth_constant_is_measured():
    s = symmetrize_payoff(straddle_type_II(1.0))
    assert not s.kappa_exact
    assert np.isfinite(s.kappa) and s.kappa > 0


# ---- hedges


def test_hedge_of_forward_in_y(rng):
    phi, psi, h = (lambda x: 0 * x), (lambda y: y - 1.0), (lambda x: 0 * x)
    ps, qs, hs = symmetrize_hedge(phi, psi, h)
    x, y = grid(rng)
    assert np.max(np.abs(ps(x) + qs(y) + hs(x) * (y - x) - (1.0 - y))) <= 1e-12


def test_hedge_of_forward(rng):
    phi, psi, h = (lambda x: 0 * x), (lambda y: 0 * y), (lambda x: 0 * x + 1.0)
    ps, qs, hs = symmetrize_hedge(phi, psi, h)
    x, y = grid(rng)
    np.testing.assert_allclose(hs(x), -1.0 / x, rtol=1e-15)
    assert np.max(np.abs(ps(x) + qs(y) + hs(x) * (y - x) - (1.0 - y / x))) <= 1e-12


def test_zero_hedge(rng):
    z = lambda t: 0 * t
    x, y = grid(rng)
    ps, qs, hs = symmetrize_hedge(z, z, z)
    assert np.all(ps(x) + qs(y) + hs(x) * (y - x) == 0)


def test_tabulated_hedge_matches_functional_hedge(rng):
    a = rng.normal(size=3)
    phi, psi, h = (lambda x: a[0] * x**2), (lambda y: a[1] * np.log(y)), (lambda x: a[2] * np.sin(x))
    x, y = np.sort(np.exp(rng.uniform(-1, 1, (2, 20))), axis=1)
    u, v, p2, q2, h2 = symmetrize_hedge_arrays(x, y, phi(x), psi(y), h(x))
    ps, qs, hs = symmetrize_hedge(phi, psi, h)
    np.testing.assert_allclose(p2, ps(u), rtol=1e-13)
    np.testing.assert_allclose(q2, qs(v), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(h2, hs(u), rtol=1e-12, atol=1e-13)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_hedge_transform_identity(a):
    rng = np.random.default_rng(0)
    phi = lambda x: a[0] * np.cos(x) + a[1] * x
    psi = lambda y: a[2] * np.sqrt(y) + a[3] / (1 + y)
    h = lambda x: a[4] * np.exp(-x) + a[5]
    C = hedgeable(phi, psi, h)
    x, y = grid(rng, 200)
    ps, qs, hs = symmetrize_hedge(phi, psi, h)
    err = np.abs(ps(x) + qs(y) + hs(x) * (y - x) - symmetrize_payoff(C)(x, y))
    assert err.max() <= 1e-10 * (1 + np.abs(C(1 / x, 1 / y) * y).max())


# ---- couplings


def test_identity_kernel_maps_to_identity():
    k = symmetrize_coupling(cp.IdentityKernel(LogNormal(0.2)))
    assert isinstance(k, cp.IdentityKernel) and k.mu == LogNormal(0.2)


def test_kernel_atoms_example():
    k = cp.DiscreteKernel([1.0], [1.0], [0.5, 2.0], [[2 / 3, 1 / 3]])
    s = symmetrize_coupling(k)
    assert s.kernel_at(1.0) == [(pytest.approx(0.5), pytest.approx(2 / 3)), (pytest.approx(2.0), pytest.approx(1 / 3))]


def test_non_martingale_kernel_is_rejected():
    k = cp.DiscreteKernel([1.0], [1.0], [0.5, 2.0], [[0.5, 0.5]])
    with pytest.raises(MartingaleViolation):
        symmetrize_coupling(k)


@given(st.integers(0, 10_000), st.integers(2, 7))
def test_coupling_reflection_properties(seed, n):
    x, w, y, v, plan = random_martingale_pair(np.random.default_rng(seed), n)
    k = cp.DiscreteKernel.from_coupling(x, w, y, plan)
    s = symmetrize_coupling(k)
    r = cp.validate_coupling(s, symmetrize_marginal(k.mu), symmetrize_marginal(k.nu))
    assert r.martingale_err <= 1e-12 and r.marginal_err <= 1e-12
    back = symmetrize_coupling(s)
    np.testing.assert_allclose(back.x_points, k.x_points, rtol=1e-14)
    np.testing.assert_allclose(back.y_points, k.y_points, rtol=1e-14)
    np.testing.assert_allclose(back.coupling, k.coupling, atol=1e-14)


# ---- marginal properties


@given(st.lists(st.floats(0.2, 5.0), min_size=2, max_size=8, unique=True),
       st.lists(st.floats(0.05, 1.0), min_size=8, max_size=8))
def test_atom_reflection_identities(points, raw):
    p = np.array(points)
    w = np.array(raw[: p.size])
    w = w / w.sum()
    # rescale to unit mean
    m = AtomList(p / (p @ w), w)
    assert involution_error(m) <= 1e-9
    ef, eg = reflection_identity_errors(m)
    assert ef <= 1e-9 and eg <= 1e-9


@given(st.floats(0.05, 1.0))
def test_lognormal_identities_against_oracle(sigma):
    y = np.geomspace(0.05, 20, 200)
    s = symmetrize_marginal(LogNormal(sigma))
    np.testing.assert_allclose(s.G(y), 1.0 - ln_cdf(sigma, 1.0 / y), atol=1e-13)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from numeraire_mot.errors import Infeasible, Unbounded
from numeraire_mot.simplex import solve_lp

from oracles import highs_lp


def test_small_lp():
    # min -x1 - 2 x2  s.t. x1 + x2 + s = 4, x1 + 3 x2 + t = 6
    A = np.array([[1.0, 1, 1, 0], [1, 3, 0, 1]])
    r = solve_lp(A, [4.0, 6.0], [-1.0, -2, 0, 0])
    assert r.value == pytest.approx(-5.0, abs=1e-12)
    np.testing.assert_allclose(r.x[:2], [3.0, 1.0], atol=1e-12)
    # duals certify the value
    assert r.y @ [4.0, 6.0] == pytest.approx(r.value, abs=1e-12)


def test_infeasible():
    with pytest.raises(Infeasible):
        solve_lp(np.array([[1.0, 1.0]]), [-1.0], [1.0, 1.0])


def test_unbounded():
    with pytest.raises(Unbounded):
        solve_lp(np.array([[1.0, -1.0]]), [1.0], [-1.0, 0.0])


def test_redundant_rows_are_tolerated():
    A = np.array([[1.0, 1, 1], [2, 2, 2], [1, 0, -1]])
    r = solve_lp(A, [1.0, 2.0, 0.0], [1.0, 2.0, 3.0])
    res = highs_lp(A, [1.0, 2.0, 0.0], [1.0, 2.0, 3.0])
    assert r.value == pytest.approx(res.fun, abs=1e-10)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_lp(np.eye(2), [1.0], [1.0, 1.0])


@given(st.integers(0, 100_000), st.integers(2, 8), st.integers(1, 10))
def test_matches_highs_on_random_feasible_lps(seed, m, extra):
    rng = np.random.default_rng(seed)
    n = m + extra
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, n) * (rng.uniform(size=n) < 0.6)
    b = A @ x0
    # bounded: add sum x <= big via a slack column
    A = np.vstack([np.hstack([A, np.zeros((m, 1))]), np.ones((1, n + 1))])
    b = np.append(b, x0.sum() + 5.0)
    c = rng.normal(size=n + 1)
    ref = highs_lp(A, b, c)
    assert ref.status == 0
    r = solve_lp(A, b, c)
    assert r.value == pytest.approx(ref.fun, abs=1e-7 * (1 + abs(ref.fun)))
    assert np.max(np.abs(A @ r.x - b)) <= 1e-8
    assert np.all(r.x >= 0)
    # dual feasibility and strong duality
    assert np.min(c - A.T @ r.y) >= -1e-8
    assert r.y @ b == pytest.approx(r.value, abs=1e-7 * (1 + abs(r.value)))

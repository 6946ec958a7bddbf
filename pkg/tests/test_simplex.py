import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog as highs

from chainbell.simplex import Infeasible, Unbounded, linprog


def test_textbook_maximum():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
    res = linprog([3, 5], A_ub=[[1, 0], [0, 2], [3, 2]], b_ub=[4, 12, 18], maximize=True)
    assert res.fun == pytest.approx(36)
    assert np.allclose(res.x, [2, 6])
    assert res.duality_gap <= 1e-7
    # shadow prices of the textbook problem
    assert np.allclose(res.dual_ub, [0, 1.5, 1])


def test_redundant_equalities():
    A_eq = [[1, 1, 1], [2, 2, 2], [1, 0, -1]]
    res = linprog([1, 2, 3], A_eq=A_eq, b_eq=[1, 2, 0], maximize=True)
    assert res.fun == pytest.approx(2.0)


def test_negative_rhs_rows():
    res = linprog([1, 1], A_ub=[[-1, -1]], b_ub=[-2], A_eq=[[1, -1]], b_eq=[0])
    assert res.fun == pytest.approx(2.0)
    assert np.allclose(res.x, [1, 1])


def test_infeasible():
    with pytest.raises(Infeasible):
        linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1])


def test_unbounded():
    with pytest.raises(Unbounded):
        linprog([1, 1], A_ub=[[1, -1]], b_ub=[1], maximize=True)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [0.75, -150, 0.02, -6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    res = linprog(c, A_ub=A, b_ub=[0, 0, 1], maximize=True)
    assert res.fun == pytest.approx(0.05)


@given(st.integers(0, 10_000))
def test_random_lps_agree_with_highs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    m_ub, m_eq = int(rng.integers(0, 6)), int(rng.integers(0, 4))
    x0 = rng.uniform(0, 1, n)
    A_ub = np.vstack([rng.normal(size=(m_ub, n)), np.ones((1, n))])
    b_ub = A_ub @ x0 + rng.uniform(0, 1, m_ub + 1)
    A_eq = rng.normal(size=(m_eq, n))
    if m_eq >= 2:
        A_eq[-1] = A_eq[0] - 2 * A_eq[1]
    b_eq = A_eq @ x0
    c = rng.normal(size=n)
    ref = highs(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m_eq else None, b_eq=b_eq if m_eq else None)
    ours = linprog(c, A_ub, b_ub, A_eq if m_eq else None, b_eq if m_eq else None, maximize=True)
    assert ours.fun == pytest.approx(-ref.fun, abs=1e-7)
    assert ours.duality_gap <= 1e-7
    assert np.all(ours.x >= -1e-9)
    assert np.all(A_ub @ ours.x <= b_ub + 1e-8)

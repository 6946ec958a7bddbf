import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from chainbell.chained_bell import quantum_IN
from chainbell.hv_models import (
    BoundReport,
    DeterministicStrategy,
    EnumerationTooLarge,
    LeggettConfig,
    bell_bound_analytic,
    bell_bound_bruteforce,
    enumerate_strategy_values,
    leggett_bound,
    leggett_delta_oracle,
    malus_marginal,
    mixture_IN,
    strategy_from_index,
    violation_margin,
)

from .oracles import deterministic_IN


def test_bell_analytic_values():
    assert bell_bound_analytic(2).bound == 1.0
    assert bell_bound_analytic(3).bound == pytest.approx(16 / 27, abs=1e-15)
    assert bell_bound_analytic(4).bound == 0.375
    with pytest.raises(ValueError):
        bell_bound_analytic(1)


@pytest.mark.parametrize("d,n", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_vectorized_enumeration_matches_table_route(d, n):
    values = enumerate_strategy_values(d, n)
    for idx in range(d ** (2 * n)):
        s = strategy_from_index(d, n, idx)
        assert values[idx] == s.value() == deterministic_IN(d, s.alice_map, s.bob_map)


def test_strategy_order_is_lexicographic():
    strategies = [strategy_from_index(2, 2, i) for i in range(16)]
    keys = [s.alice_map + s.bob_map for s in strategies]
    assert keys == list(itertools.product(range(2), repeat=4))


@pytest.mark.parametrize("d,n,expected", [(2, 2, 1.0), (3, 2, 2.0), (2, 6, 1.0)])
def test_bruteforce_examples(d, n, expected):
    report = bell_bound_bruteforce(d, n)
    assert report.bound == expected
    assert report.kind == "brute-force"


@pytest.mark.parametrize("n", range(1, 7))
def test_bruteforce_d2_is_one(n):
    assert bell_bound_bruteforce(2, n).bound == 1.0


@pytest.mark.parametrize("d,n", [(2, 3), (3, 1), (3, 2), (3, 3), (4, 2), (5, 2)])
def test_bruteforce_dominates_analytic(d, n):
    brute = bell_bound_bruteforce(d, n).bound
    analytic = bell_bound_analytic(d).bound
    assert brute >= analytic
    if d >= 3:
        assert brute > analytic


def test_enumeration_guard():
    with pytest.raises(EnumerationTooLarge):
        bell_bound_bruteforce(5, 6)


@pytest.mark.parametrize("d,n", [(2, 2), (2, 4), (2, 6), (3, 2), (3, 3)])
def test_quantum_beats_local(d, n):
    assert quantum_IN(d, n) < bell_bound_bruteforce(d, n).bound


def test_mixture_single_strategy():
    s = DeterministicStrategy(2, 2, (0, 1), (1, 1))
    assert mixture_IN([(s, 1.0)]) == s.value()


def test_mixture_uniform_over_all_strategies():
    strategies = [strategy_from_index(2, 2, i) for i in range(16)]
    mixed = mixture_IN([(s, 1 / 16) for s in strategies])
    assert mixed == pytest.approx(np.mean([s.value() for s in strategies]), abs=1e-12)


def test_mixture_convexity():
    s1 = DeterministicStrategy(3, 2, (0, 0), (0, 0))
    s2 = DeterministicStrategy(3, 2, (1, 2), (0, 2))
    assert mixture_IN([(s1, 0.3), (s2, 0.7)]) >= min(s1.value(), s2.value())


@given(st.lists(st.integers(0, 80), min_size=1, max_size=6), st.data())
def test_mixture_linearity(indices, data):
    raw = data.draw(st.lists(st.floats(0.01, 1.0), min_size=len(indices), max_size=len(indices)))
    w = np.array(raw) / sum(raw)
    w[-1] = 1.0 - w[:-1].sum()
    strategies = [strategy_from_index(3, 2, i) for i in indices]
    value = mixture_IN(list(zip(strategies, w)))
    assert abs(value - sum(wi * s.value() for s, wi in zip(strategies, w))) <= 1e-12


def test_mixture_bad_weights():
    s = DeterministicStrategy(2, 1, (0,), (0,))
    with pytest.raises(ValueError):
        mixture_IN([(s, 0.5)])
    with pytest.raises(ValueError):
        mixture_IN([(s, 1.5), (s, -0.5)])


def test_strategy_validation():
    with pytest.raises(ValueError):
        DeterministicStrategy(2, 2, (0, 2), (0, 0))
    with pytest.raises(ValueError):
        DeterministicStrategy(2, 2, (0,), (0, 0))


def test_leggett_bounds():
    assert leggett_bound(LeggettConfig(6, "uniform-sphere")).bound == 0.5
    assert leggett_bound(LeggettConfig(1, "uniform-sphere")).bound == 0.5
    assert leggett_bound(LeggettConfig(6, "fixed-in-plane")).bound == pytest.approx(0.965926, abs=1e-6)
    assert leggett_bound(LeggettConfig(6, "two-orthogonal-planes")).bound == pytest.approx(0.683013, abs=1e-6)
    with pytest.raises(ValueError):
        LeggettConfig(6, dim=3)


def test_uniform_sphere_integral_by_quadrature():
    value, _ = integrate.quad(lambda t: abs(math.cos(t)) * math.sin(t) / 2, 0, math.pi, points=[math.pi / 2])
    assert value == pytest.approx(0.5, abs=1e-12)


def test_leggett_oracle_converges():
    samples = 10**6
    est = leggett_delta_oracle(samples, seed=3)
    assert abs(est - 0.5) <= 0.002
    assert abs(est - 0.5) <= 3 / math.sqrt(samples)


@pytest.mark.parametrize("a", [(0, 0, 1), (1, 1, 0), (0.3, -0.2, 0.9)])
def test_leggett_oracle_is_direction_independent(a):
    assert abs(leggett_delta_oracle(10**5, seed=11, a=a) - 0.5) <= 3 / math.sqrt(10**5)


def test_leggett_oracle_degenerate():
    assert leggett_delta_oracle(10**4, 0, a=(0, 0, 1), u=(0, 0, 1)) == pytest.approx(1.0)
    assert leggett_delta_oracle(10**4, 0, a=(0, 0, 1), u=(1, 0, 0)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        leggett_delta_oracle(100, 0)


def test_malus_marginal_normalized():
    u = np.array([[0, 0, 1], [1, 0, 0], [0.6, 0, 0.8]])
    p = malus_marginal((0, 0, 1), u)
    assert np.allclose(p.sum(axis=1), 1)
    assert np.allclose(p[:, 0], [1, 0.5, 0.9])


def test_violation_margin_examples():
    bm = bell_bound_analytic(2)
    assert 107 <= violation_margin(0.245, 0.007, bm) <= 108
    assert violation_margin(0.245, 0.007, 0.5) == pytest.approx(36.43, abs=0.01)
    assert violation_margin(0.524, 0.006, bell_bound_analytic(3)) == pytest.approx(11.43, abs=0.01)
    assert violation_margin(1.2, 0.1, bm) < 0
    with pytest.raises(ValueError):
        violation_margin(0.2, 0.0, bm)


def test_bound_report_serializes():
    r = BoundReport("Bell", 3, 2, 2.0, "brute-force")
    assert r.to_dict() == {"model": "Bell", "dim": 3, "n_settings": 2, "bound": 2.0, "kind": "brute-force"}

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog as highs

from chainbell.chained_bell import evaluate_IN, quantum_IN
from chainbell.hv_models import DeterministicStrategy
from chainbell.nonsignaling import (
    CONDITIONS,
    NSBox,
    SignalingError,
    appendixA_pointwise_check,
    box_from_joint,
    box_IN,
    build_polytope,
    certify,
    chained_pr_box,
    check_nonsignaling,
    delta_objective,
    lp_curve,
    lp_max_delta,
    lp_max_delta_all,
    sample_nonsignaling,
    sign_patterns,
    statistical_distance,
    theorem1_check,
)
from chainbell.qudit_core import JointTable, SchmidtState, SettingsFamily, born_joint_table, make_maximally_entangled


def uniform_box(d=2, n=2, z=2, c=1):
    return NSBox(np.full((n, n, c, d, d, z), 1.0 / (d * d * z)))


def deterministic_box(strategy: DeterministicStrategy, z=1):
    return box_from_joint(strategy.joint_table(), z)


def test_product_box_has_no_violations():
    assert check_nonsignaling(uniform_box(3, 2, 3, 2)) == []


def test_quantum_box_has_no_violations():
    joint = born_joint_table(SchmidtState.from_unnormalized([0.9, 0.3, 0.2]), SettingsFamily(3, 3))
    assert check_nonsignaling(box_from_joint(joint)) == []


def test_signaling_box_reports_one_violation():
    probs = np.full((2, 2, 2, 2), 0.25)
    probs[0, 1] = [[0.3, 0.3], [0.2, 0.2]]  # P(x=0 | A=1, B=2) = 0.6 instead of 0.5
    violations = check_nonsignaling(box_from_joint(JointTable(2, 2, probs)))
    assert len(violations) == 1
    v = violations[0]
    # Alice's marginal depends on Bob's setting: the X(Z) marginal condition at (A=1, C=1)
    assert v.condition == CONDITIONS[1]
    assert v.settings == (1, 1)
    assert v.magnitude == pytest.approx(0.1)


def test_c_dependent_box_violates_xy_condition():
    t = np.full((1, 1, 2, 2, 2, 1), 0.25)
    t[0, 0, 1, :, :, 0] = [[0.5, 0], [0, 0.5]]
    names = {v.condition for v in check_nonsignaling(NSBox(t))}
    assert CONDITIONS[0] in names


def test_unnormalized_box_rejected():
    with pytest.raises(ValueError):
        check_nonsignaling(NSBox(np.full((1, 1, 1, 2, 2, 1), 0.3)))


def test_statistical_distance_examples():
    assert statistical_distance([0.2, 0.8], [0.2, 0.8], 2) == 0
    assert statistical_distance([1, 0], [0, 1], 2) == 1
    assert statistical_distance([0.75, 0.25], [0.5, 0.5], 2) == 0.25
    with pytest.raises(ValueError):
        statistical_distance([1, 0], [1, 0, 0], 2)


def test_statistical_distance_divides_by_x_alphabet():
    p = np.array([[1.0, 0.0], [0.0, 0.0]])
    q = np.full((2, 2), 0.25)
    assert statistical_distance(p, q, 2) == pytest.approx(1.5 / 2)


@given(st.integers(2, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_marginal_distance_never_exceeds_joint(d, z, seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(d * z)).reshape(d, z)
    q = rng.dirichlet(np.ones(d * z)).reshape(d, z)
    assert statistical_distance(p.sum(1), q.sum(1), d) <= statistical_distance(p, q, d) + 1e-15


def test_distance_bound_ideal_qubit_box():
    box = certify(box_from_joint(born_joint_table(make_maximally_entangled(2), SettingsFamily(2, 6))))
    results = theorem1_check(box)
    assert len(results) == 6
    for r in results:
        assert r.delta == pytest.approx(0, abs=1e-12)
        assert r.bound == pytest.approx(0.5 * quantum_IN(2, 6))
        assert r.slack > 0


@pytest.mark.parametrize("d,n", [(2, 1), (2, 3), (3, 2), (4, 2)])
def test_distance_bound_deterministic_box(d, n):
    rng = np.random.default_rng(d * 10 + n)
    s = DeterministicStrategy(d, n, tuple(rng.integers(d, size=n)), tuple(rng.integers(d, size=n)))
    results = theorem1_check(deterministic_box(s))
    for r in results:
        assert r.delta == pytest.approx(2 * (d - 1) / d**2, abs=1e-15)
        assert r.bound == pytest.approx(d / 4 * s.value())
        assert r.slack >= 0


def test_distance_bound_refuses_signaling_box():
    probs = np.full((2, 2, 2, 2), 0.25)
    probs[0, 1] = [[0.3, 0.3], [0.2, 0.2]]
    with pytest.raises(SignalingError):
        theorem1_check(box_from_joint(JointTable(2, 2, probs)))


@pytest.mark.parametrize("d,n,z", list(itertools.product([2, 3], [2, 3], [1, 2, 3])))
def test_sampler_certified_and_normalized(d, n, z):
    box = sample_nonsignaling(d, n, z, seed=0)
    assert box.certified
    assert np.allclose(box.table.sum(axis=(3, 4, 5)), 1, atol=1e-12)


def test_sampler_pure_families():
    quantum = sample_nonsignaling(2, 2, 1, seed=4, weights=(1, 0, 0))
    # a single relabelled quantum box: Born marginals are uniform
    assert np.allclose(quantum.xz().sum(axis=(4,)), 0.5)
    assert box_IN(quantum) >= 0
    uniform = sample_nonsignaling(2, 2, 2, seed=4, weights=(0, 0, 1))
    assert np.allclose(uniform.xy(), 0.25)
    with pytest.raises(ValueError):
        sample_nonsignaling(2, 2, 1, seed=0, weights=(0.5, 0.6, 0))


def test_sampler_with_several_c_values():
    box = sample_nonsignaling(2, 2, 3, seed=9, c=2)
    assert box.c == 2
    assert check_nonsignaling(box) == []
    assert all(r.slack >= -1e-8 for r in theorem1_check(box))


def test_sampler_is_reproducible():
    a = sample_nonsignaling(3, 2, 2, seed=17)
    b = sample_nonsignaling(3, 2, 2, seed=17)
    assert np.array_equal(a.table, b.table)


def test_chained_pr_box_has_zero_IN():
    for d, n in [(2, 2), (3, 3), (4, 2)]:
        box = certify(NSBox(chained_pr_box(d, n)[:, :, None, :, :, None]))
        assert box_IN(box) == pytest.approx(0, abs=1e-15)
        assert all(r.delta == pytest.approx(0, abs=1e-15) for r in theorem1_check(box))


def test_pointwise_checks_examples():
    ideal = certify(box_from_joint(born_joint_table(make_maximally_entangled(3), SettingsFamily(3, 4))))
    rep = appendixA_pointwise_check(ideal)
    assert rep.ok
    assert rep.worst_slack["marginal-uniform"] == pytest.approx(0.75 * quantum_IN(3, 4), abs=1e-12)

    s = DeterministicStrategy(2, 1, (0,), (0,))
    rep = appendixA_pointwise_check(deterministic_box(s))
    assert rep.ok
    assert s.value() == 1.0
    assert rep.worst_slack["marginal-uniform"] == pytest.approx(0.5 * 1.0 - 0.5, abs=1e-15)

    rep = appendixA_pointwise_check(uniform_box())
    assert rep.ok and rep.worst_slack["marginal-uniform"] == pytest.approx(0.5 * box_IN(uniform_box()))


def test_box_json_round_trip():
    box = sample_nonsignaling(2, 2, 2, seed=1)
    back = NSBox.from_dict(box.to_dict())
    assert back.certified
    assert np.array_equal(back.table, box.table)
    assert box.to_dict()["order"] == ["a", "b", "c", "x", "y", "z"]


# --- linear programming -----------------------------------------------------------------


def test_lp_zero_cap_forces_zero_delta():
    assert lp_max_delta_all(2, 2, 2, 0.0) <= 1e-8


def test_lp_vacuous_cap_reaches_deterministic_value():
    for d, n, z in [(2, 2, 1), (2, 2, 2), (3, 2, 1)]:
        assert lp_max_delta_all(d, n, z, 2 * n * (d - 1)) >= 2 * (d - 1) / d**2 - 1e-9


def test_lp_single_pattern_matches_highs():
    poly = build_polytope(2, 2, 2)
    caps = [0.0, 0.3, 0.8, 1.7]
    for cap in caps:
        for s in list(sign_patterns(2, 2))[:5]:
            ours = lp_max_delta(2, 2, 2, cap, s, poly=poly)
            ref = highs(-delta_objective(poly, s), A_ub=poly.in_row[None, :], b_ub=[cap],
                        A_eq=poly.A_eq, b_eq=poly.b_eq, bounds=(0, None))
            assert ours == pytest.approx(-ref.fun, abs=1e-8)


def test_lp_optimum_is_a_valid_tight_box():
    poly = build_polytope(2, 2, 2)
    best, best_x = -1.0, None
    for s in sign_patterns(2, 2):
        from chainbell.simplex import linprog

        res = linprog(delta_objective(poly, s), A_ub=poly.in_row[None, :], b_ub=[0.6],
                      A_eq=poly.A_eq, b_eq=poly.b_eq, maximize=True)
        if res.fun > best:
            best, best_x = res.fun, res.x
    box = certify(NSBox(np.clip(best_x, 0, None).reshape(poly.shape)))
    results = theorem1_check(box)
    assert max(r.delta for r in results) == pytest.approx(best, abs=1e-9)
    # the LP optimum saturates the distance bound for qubits
    assert min(r.slack for r in results) == pytest.approx(0, abs=1e-8)
    assert appendixA_pointwise_check(box).ok


def test_lp_curve_monotone_and_below_bound():
    caps = np.linspace(0, 2, 9)
    rows = lp_curve(2, 2, 2, caps)
    deltas = [r[1] for r in rows]
    assert all(b >= a - 1e-8 for a, b in zip(deltas, deltas[1:]))
    for cap, delta, bound in rows:
        assert bound == 0.5 * cap
        assert delta <= bound + 1e-7


def test_larger_z_cannot_decrease_max_delta():
    for cap in (0.4, 1.0):
        assert lp_max_delta_all(2, 2, 2, cap) >= lp_max_delta_all(2, 2, 1, cap) - 1e-9


def test_lp_size_guard_and_bad_cap():
    with pytest.raises(ValueError):
        build_polytope(6, 6, 4)
    with pytest.raises(ValueError):
        lp_max_delta(2, 2, 1, -0.1, [1, -1])

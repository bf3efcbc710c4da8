import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rollpid.acceptance import PUBLISHED_K1_CASE1, case1_first_objective, grid_minimum
from rollpid.controller import PidGains
from rollpid.optimizer import (Bounds, OptimizerSettings, finite_diff_gradient, multistart,
                               optimize_gains)

BOX = Bounds()


def sq_dist(target):
    t = np.asarray(target, dtype=float)
    return lambda k: float(np.sum((k.as_array() - t) ** 2))


def test_interior_quadratic():
    r = optimize_gains(sq_dist([1, 2, 3]), PidGains(5, 5, 5), BOX)
    np.testing.assert_allclose(r.k_star.as_array(), [1, 2, 3], atol=1e-6)
    assert r.j_star <= 1e-10 and r.converged


def test_clipped_quadratic():
    r = optimize_gains(sq_dist([12, 2, 3]), PidGains(5, 5, 5), BOX)
    np.testing.assert_allclose(r.k_star.as_array(), [10, 2, 3], atol=1e-6)
    assert r.converged


def test_gradient_examples():
    poly = lambda k: k.kp ** 2 + 2 * k.ki + 3 * k.kd
    np.testing.assert_allclose(finite_diff_gradient(poly, PidGains(1, 1, 1)), [2, 2, 3], atol=1e-6)
    np.testing.assert_allclose(finite_diff_gradient(lambda k: 4.2, PidGains(1, 1, 1)), 0, atol=1e-9)


def test_gradient_one_sided_at_bounds():
    poly = lambda k: k.kp ** 2 + 2 * k.ki + 3 * k.kd
    g = finite_diff_gradient(poly, PidGains(0, 10, 0), bounds=BOX)
    np.testing.assert_allclose(g, [0, 2, 3], atol=1e-5)


def test_gradient_of_case1_objective_matches_forward_difference():
    objective, _ = case1_first_objective()
    k = np.array([0.1, 0.1, 0.1])
    central = finite_diff_gradient(objective, PidGains(*k), 1e-6)
    f0 = objective(PidGains(*k))
    h = 1e-8
    forward = np.array([(objective(PidGains(*(k + h * np.eye(3)[i]))) - f0) / h for i in range(3)])
    np.testing.assert_allclose(central, forward, rtol=1e-3)


def test_case1_first_period_beats_published_gains():
    objective, sc = case1_first_objective()
    r = optimize_gains(objective, sc.k0, sc.bounds)
    assert r.j_star <= objective(PUBLISHED_K1_CASE1) + 1e-6
    assert r.j_star <= objective(sc.k0)


def test_multistart_single_start_is_plain_run():
    objective = sq_dist([1, 2, 3])
    a = multistart(objective, BOX, 1, 0, PidGains(5, 5, 5))
    b = optimize_gains(objective, PidGains(5, 5, 5), BOX)
    assert a == b


def rastrigin(k):
    z = k.as_array() - 3.3
    return float(np.sum(z ** 2 - 3 * np.cos(2 * np.pi * z)) + 9)


def test_multistart_improves_on_multimodal_objective_and_is_deterministic():
    single = optimize_gains(rastrigin, PidGains(9, 9, 9), BOX)
    a = multistart(rastrigin, BOX, 20, 11, PidGains(9, 9, 9))
    b = multistart(rastrigin, BOX, 20, 11, PidGains(9, 9, 9))
    assert a.j_star <= single.j_star
    assert a == b


def test_multistart_dominates_grid_on_case1():
    objective, sc = case1_first_objective()
    r = multistart(objective, sc.bounds, 20, 0, sc.k0)
    assert r.j_star <= grid_minimum(objective, sc.bounds)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-8, 8), min_size=3, max_size=3),
       st.lists(st.floats(0.1, 5), min_size=3, max_size=3),
       st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_descent_and_feasibility_on_random_box_quadratics(target, weights, start):
    box = Bounds((-2, -1, 0), (1, 4, 6))
    visited = []

    def objective(k):
        visited.append(k.as_array())
        return float(np.sum(np.asarray(weights) * (k.as_array() - target) ** 2))

    k0 = np.asarray(box.lo) + np.asarray(start) * (np.asarray(box.hi) - np.asarray(box.lo))
    r = optimize_gains(objective, PidGains(*k0), box)
    assert all(box.contains(v) for v in visited)
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))
    assert r.j_star == objective(r.k_star)
    np.testing.assert_allclose(r.k_star.as_array(), box.clip(target), atol=1e-5)


@pytest.mark.parametrize("criterion", ["iae", "itae"])
def test_nonsmooth_criteria_use_simplex_search(criterion):
    target = np.array([1.0, 2.0, 3.0])
    objective = lambda k: float(np.sum(np.abs(k.as_array() - target)))
    r = optimize_gains(objective, PidGains(5, 5, 5), BOX, smooth=False)
    np.testing.assert_allclose(r.k_star.as_array(), target, atol=1e-6)
    assert r.converged
    assert all(b <= a for a, b in zip(r.history, r.history[1:]))


def test_evaluation_cap_returns_best_so_far():
    objective = lambda k: float(np.sum(np.cos(3 * k.as_array()) + 0.01 * k.as_array() ** 2))
    start = PidGains(5, 5, 5)
    r = optimize_gains(objective, start, BOX, OptimizerSettings(max_evals=12))
    assert not r.converged
    assert r.j_star <= objective(start)


def test_contract_violations():
    with pytest.raises(ValueError):
        optimize_gains(lambda k: float("nan"), PidGains(1, 1, 1), BOX)
    with pytest.raises(ValueError):
        optimize_gains(sq_dist([0, 0, 0]), PidGains(11, 1, 1), BOX)
    with pytest.raises(ValueError):
        Bounds((1, 0, 0), (0, 1, 1))
    with pytest.raises(ValueError):
        multistart(sq_dist([0, 0, 0]), BOX, 0, 0, PidGains(1, 1, 1))

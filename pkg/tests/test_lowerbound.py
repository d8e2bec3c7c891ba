import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isingsample.errors import ParameterOutOfRange
from isingsample.lowerbound import (
    free_energy_separation,
    generate_pair,
    heavy_edge_count,
    is_delta_dense,
    perturbed_l1_formula,
    probe_experiment,
    probe_failure_bound,
)
from isingsample.model import norms


def test_small_example():
    # eps Delta C(10,2) = 0.2 * 0.1 * 45 = 0.9 rounds to one heavy edge
    pert, unif = generate_pair(10, 0.2, 0.1, 1.0, seed=0)
    assert len(pert.heavy_edges) == 1
    i, j = pert.heavy_edges[0]
    assert pert.J[i, j] == pert.J[j, i] == 10.0
    assert norms(pert.model).max_entry == 10.0
    assert np.count_nonzero(pert.J != unif.J) == 2
    assert np.all(unif.J[~np.eye(10, dtype=bool)] == 1.0)


def test_too_small_instance_is_not_dense():
    # zero diagonal: ||vec J||_1 / n^2 = 1.96 < 0.2 * 10
    with pytest.raises(ParameterOutOfRange):
        generate_pair(10, 0.1, 0.2, 2.0)


@given(st.integers(10, 40), st.floats(0.0, 0.24), st.floats(0.05, 0.24), st.integers(0, 100))
def test_pairs_are_dense_and_symmetric(n, eps, delta, seed):
    try:
        pert, unif = generate_pair(n, eps, delta, 1.0, seed)
    except ParameterOutOfRange:
        return
    for inst in (pert, unif):
        assert np.array_equal(inst.J, inst.J.T)
        assert is_delta_dense(inst.J, delta)
    assert len(pert.heavy_edges) == heavy_edge_count(n, eps, delta)


def test_l1_formula_when_count_is_integral():
    # eps Delta C(n,2) = 0.2 * 0.125 * 120 = 3 heavy edges
    n, eps, delta = 16, 0.2, 0.125
    pert, unif = generate_pair(n, eps, delta, 1.5)
    assert norms(pert.model).l1 == pytest.approx(perturbed_l1_formula(n, eps, delta, 1.5))
    assert norms(unif.model).l1 == pytest.approx(2 * 1.5 * n * (n - 1) / 2)


def test_zero_epsilon_gives_identical_matrices():
    pert, unif = generate_pair(12, 0.0, 0.2, 1.0)
    assert np.array_equal(pert.J, unif.J) and pert.heavy_edges == ()


def test_heavy_set_depends_on_seed_only():
    a, _ = generate_pair(30, 0.2, 0.2, 1.0, seed=1)
    b, _ = generate_pair(30, 0.2, 0.2, 3.0, seed=1)
    c, _ = generate_pair(30, 0.2, 0.2, 1.0, seed=2)
    assert a.heavy_edges == b.heavy_edges != c.heavy_edges


@pytest.mark.parametrize(
    "args", [(10, 0.25, 0.1, 1.0), (10, 0.1, 0.0, 1.0), (10, 0.1, 0.3, 1.0), (10, 0.1, 0.1, 0.0), (1, 0.1, 0.1, 1.0)]
)
def test_parameter_validation(args):
    with pytest.raises(ParameterOutOfRange):
        generate_pair(*args)


def test_density_check():
    J = np.ones((4, 4)) - np.eye(4)
    assert is_delta_dense(J, 0.75) and not is_delta_dense(J, 0.76)


def test_separation_grows_and_ratio_converges():
    rep = free_energy_separation(8, 0.2, 0.125, [0.0, 0.5, 1.0, 2.0, 5.0])
    assert rep.rows[0].F == pytest.approx(8 * math.log(2))
    for r in rep.rows:
        assert r.F >= r.F_uniform - 1e-9  # heavier weights can only raise log Z
    seps = [r.separation for r in rep.rows]
    assert all(b >= a - 1e-9 for a, b in zip(seps, seps[1:]))
    last = rep.rows[-1]
    assert abs(last.ratio_uniform - rep.limit_uniform) / rep.limit_uniform <= 0.02
    assert abs(last.ratio - rep.limit) / rep.limit <= 0.02
    assert rep.limit_uniform == 56.0


def test_separation_target_reached_for_large_M():
    rep = free_energy_separation(8, 0.2, 0.125, [1.0, 5.0, 20.0])
    assert rep.first_separating_M is not None


def test_probe_bound_formula():
    assert probe_failure_bound(0, 0.1, 0.1) == 0.5
    assert probe_failure_bound(25, 0.1, 0.1) == pytest.approx(0.25)


def test_probe_without_looking_is_a_coin():
    res = probe_experiment(50, 0.1, 0.1, 1.0, 0, 4000, seed=0)
    assert res.failure_rate == pytest.approx(0.5, abs=4 * res.sigma)


def test_probe_failure_respects_bound_and_decreases():
    rates = []
    for k in (0, 5, 10, 25):
        res = probe_experiment(200, 0.1, 0.1, 1.0, k, 4000, seed=1)
        assert res.failure_rate >= res.bound - 3 * res.sigma
        rates.append(res.failure_rate)
    assert all(b <= a + 0.03 for a, b in zip(rates, rates[1:]))
    assert rates[-1] < rates[0]


def test_probe_deterministic():
    a = probe_experiment(40, 0.1, 0.1, 1.0, 5, 500, seed=3)
    b = probe_experiment(40, 0.1, 0.1, 1.0, 5, 500, seed=3)
    assert a == b


def test_probe_validation():
    with pytest.raises(ValueError):
        probe_experiment(5, 0.1, 0.1, 1.0, 11, 10)
    with pytest.raises(ValueError):
        probe_experiment(5, 0.1, 0.1, 1.0, 1, 0)

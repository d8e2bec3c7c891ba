import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isingsample.errors import DimensionMismatch, EnumerationTooLarge, InvalidSubset, MarginalOutOfRange
from isingsample.model import (
    IsingModel,
    Mrf,
    energy,
    exact_total_magnetization,
    free_energy_complete_graph,
    free_energy_exact,
    kl_free_energy_gap,
    norms,
    restrict_scaled,
    set_enumeration_guard,
    enumeration_guard,
    shift_field,
)
from isingsample.meanfield import variational_free_energy

from conftest import random_symmetric


def brute_log_z(J, h):
    n = len(h)
    vals = []
    for x in itertools.product([-1.0, 1.0], repeat=n):
        x = np.array(x)
        vals.append(x @ J @ x + h @ x)
    return float(np.log(np.sum(np.exp(vals))))


def test_construction_rejects_bad_matrices():
    with pytest.raises(ValueError):
        IsingModel(np.eye(2))
    with pytest.raises(ValueError):
        IsingModel(np.array([[0, 1.0], [0.5, 0]]))
    with pytest.raises(DimensionMismatch):
        IsingModel(np.zeros((2, 3)))
    with pytest.raises(DimensionMismatch):
        IsingModel(np.zeros((2, 2)), np.zeros(3))


def test_model_arrays_are_read_only():
    m = IsingModel(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        m.J[0, 1] = 1.0


def test_mrf_validation():
    with pytest.raises(ValueError):
        Mrf(3, {(1, 0): 1.0})
    with pytest.raises(InvalidSubset):
        Mrf(3, {(0, 3): 1.0})
    with pytest.raises(ValueError):
        Mrf(3, {(0, 1, 2): 1.0}, r=2)
    assert Mrf(3, {(0, 1, 2): 1.0}).r == 3
    assert Mrf.zeros(3).r == 1


def test_free_energy_small_examples():
    assert free_energy_exact(IsingModel.zeros(5)) == pytest.approx(5 * math.log(2), abs=1e-12)
    J = np.array([[0, 0.5], [0.5, 0]])
    assert free_energy_exact(IsingModel(J)) == pytest.approx(math.log(2 * math.e + 2 / math.e), abs=1e-12)
    J3 = 0.2 * (np.ones((3, 3)) - np.eye(3))
    assert free_energy_exact(IsingModel(J3), method="enumerate") == pytest.approx(brute_log_z(J3, np.zeros(3)), abs=1e-12)


def test_enumeration_matches_bruteforce_with_fields(rng):
    for n in (1, 3, 6, 9):
        J = random_symmetric(rng, n)
        h = rng.normal(size=n)
        assert free_energy_exact(IsingModel(J, h)) == pytest.approx(brute_log_z(J, h), abs=1e-10)


def test_block_enumeration_beyond_one_block(rng):
    # n=16 exercises the outer loop over high spins
    n = 16
    J = random_symmetric(rng, n, 0.3)
    h = rng.normal(size=n) * 0.3
    m = IsingModel(J, h)
    # compare against the MRF path, which materializes configurations differently
    assert free_energy_exact(m) == pytest.approx(free_energy_exact(m.to_mrf()), abs=1e-9)


def test_overflow_safety():
    J = 50.0 * (np.ones((6, 6)) - np.eye(6))
    F = free_energy_exact(IsingModel(J), method="enumerate")
    assert math.isfinite(F)
    assert F == pytest.approx(50.0 * 30 + math.log(2), rel=1e-12)


def test_guard():
    with pytest.raises(EnumerationTooLarge):
        free_energy_exact(IsingModel(np.zeros((8, 8)) + 0.0, np.arange(8.0)), guard=5)
    old = enumeration_guard()
    try:
        set_enumeration_guard(4)
        with pytest.raises(EnumerationTooLarge):
            free_energy_exact(Mrf(5, {(0, 1, 2): 1.0}))
    finally:
        set_enumeration_guard(old)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 16])
@pytest.mark.parametrize("w", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_complete_graph_closed_form(n, w):
    J = w * (np.ones((n, n)) - np.eye(n))
    assert free_energy_complete_graph(n, w) == pytest.approx(
        free_energy_exact(IsingModel(J), method="enumerate"), abs=1e-9
    )


def test_complete_graph_large_n_finite():
    assert math.isfinite(free_energy_complete_graph(400, 1 / 400))
    assert free_energy_complete_graph(10, 0.0) == pytest.approx(10 * math.log(2))


def test_energy_examples():
    assert energy(IsingModel(np.array([[0, 0.5], [0.5, 0]])), [1, 1]) == 1.0
    assert energy(Mrf(3, {(0, 1, 2): 1.0}), [1, -1, 1]) == -1.0
    assert energy(IsingModel.zeros(3), [1, -1, 1]) == 0.0
    with pytest.raises(DimensionMismatch):
        energy(IsingModel.zeros(3), [1, 1])
    with pytest.raises(ValueError):
        energy(IsingModel.zeros(2), [1, 0.5])


@given(st.integers(2, 7), st.integers(0, 10_000))
def test_spin_flip_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    m = IsingModel(random_symmetric(rng, n))
    x = rng.choice([-1.0, 1.0], size=n)
    assert energy(m, x) == pytest.approx(energy(m, -x))
    assert abs(exact_total_magnetization(m)) < 1e-9


def test_even_mrf_has_zero_magnetization():
    m = Mrf(5, {(0, 1): 0.7, (0, 1, 2, 3): -0.4, (2, 4): 1.1})
    assert abs(exact_total_magnetization(m)) < 1e-10


def test_to_mrf_preserves_free_energy(rng):
    m = IsingModel(random_symmetric(rng, 6), rng.normal(size=6))
    assert free_energy_exact(m.to_mrf()) == pytest.approx(free_energy_exact(m), abs=1e-12)


def test_restrict_scaled_examples():
    w = 0.3
    m = IsingModel(w * (np.ones((4, 4)) - np.eye(4)), np.full(4, 0.2))
    assert restrict_scaled(m, range(4)) is m
    sub = restrict_scaled(m, [0, 1])
    assert sub.J[0, 1] == pytest.approx(2 * w)
    assert sub.h[0] == pytest.approx(0.2)
    assert restrict_scaled(m, [0, 1], field_scaling="linear").h[0] == pytest.approx(0.4)
    mr = Mrf(4, {(0, 1, 2): 1.0, (3,): 0.5})
    out = restrict_scaled(mr, [0, 1, 2])
    assert dict(out.coeffs) == {(0, 1, 2): pytest.approx(16 / 9)}
    with pytest.raises(InvalidSubset):
        restrict_scaled(m, [0, 0])
    with pytest.raises(InvalidSubset):
        restrict_scaled(m, [0, 9])
    with pytest.raises(InvalidSubset):
        restrict_scaled(m, [])


def test_restrict_reindexes_in_given_order():
    J = np.zeros((4, 4))
    J[1, 3] = J[3, 1] = 1.0
    sub = restrict_scaled(IsingModel(J), [3, 1])
    assert sub.J[0, 1] == pytest.approx(2.0)


@given(st.integers(2, 8), st.integers(0, 10_000))
def test_norm_invariants(n, seed):
    rng = np.random.default_rng(seed)
    J = random_symmetric(rng, n)
    nm = norms(IsingModel(J))
    assert nm.frobenius**2 == pytest.approx(np.sum(J**2), rel=1e-12)
    nnz = np.count_nonzero(J)
    assert nm.max_entry <= nm.frobenius + 1e-15
    assert nm.frobenius <= math.sqrt(nnz) * nm.max_entry + 1e-12


def test_mrf_norms_per_degree():
    m = Mrf(4, {(0,): 1.0, (1, 2): 3.0, (0, 1): 4.0, (0, 1, 2): -2.0})
    nm = norms(m)
    assert nm.frobenius == pytest.approx((1.0, 5.0, 2.0))
    assert nm.max_entry == 4.0 and nm.l1 == 10.0


def test_kl_gap_examples():
    assert kl_free_energy_gap(IsingModel.zeros(4), np.zeros(4)) == pytest.approx(0.0, abs=1e-12)
    x = np.zeros(4)
    x[0] = 1.0
    assert kl_free_energy_gap(IsingModel.zeros(4), x) == pytest.approx(math.log(2))
    m = IsingModel(np.array([[0, 0.5], [0.5, 0]]))
    res = variational_free_energy(m)
    assert kl_free_energy_gap(m, res.argmax) >= -1e-9
    with pytest.raises(MarginalOutOfRange):
        kl_free_energy_gap(m, [1.5, 0])


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_kl_gap_nonnegative_for_any_product_measure(n, seed):
    rng = np.random.default_rng(seed)
    m = IsingModel(random_symmetric(rng, n), rng.normal(size=n))
    x = rng.uniform(-1, 1, size=n)
    assert kl_free_energy_gap(m, x) >= -1e-9


@given(st.integers(1, 10), st.integers(0, 10_000))
def test_crude_lower_bound(n, seed):
    rng = np.random.default_rng(seed)
    J = random_symmetric(rng, n)
    F = free_energy_exact(IsingModel(J))
    Fm = free_energy_exact(IsingModel(-J))
    assert math.isfinite(F) and math.isfinite(Fm)
    # log Z >= max energy, and log Z >= n log 2 + average energy (= 0 here)
    xs = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    e = np.einsum("ci,ij,cj->c", xs, J, xs)
    assert F >= e.max() - 1e-9
    assert F >= n * math.log(2) + e.min() - 1e-9


def test_shift_field():
    m = shift_field(IsingModel.zeros(3), 0.5)
    assert np.allclose(m.h, 0.5)
    mr = shift_field(Mrf(2, {(0,): 1.0}), 0.5)
    assert dict(mr.coeffs) == {(0,): 1.5, (1,): 0.5}


def test_uniform_field_magnetization_closed_form():
    t = 0.3
    m = IsingModel(np.zeros((5, 5)), np.full(5, t))
    assert exact_total_magnetization(m) == pytest.approx(5 * math.tanh(t))

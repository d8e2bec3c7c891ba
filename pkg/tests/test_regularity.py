import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isingsample.errors import InvalidSubset, TooLargeForExact
from isingsample.model import IsingModel, restrict_scaled
from isingsample.regularity import (
    CutDecomposition,
    CutMatrix,
    fk_decompose,
    infty_to_one_norm,
    max_entry_bound,
    restrict_cuts,
)

from conftest import random_symmetric


def brute_norm(M):
    m, n = M.shape
    best = -np.inf
    for x in itertools.product([-1.0, 1.0], repeat=m):
        for y in itertools.product([-1.0, 1.0], repeat=n):
            best = max(best, np.array(x) @ M @ np.array(y))
    return best


def test_cut_matrix_materialization():
    c = CutMatrix([2, 0], [1], 0.5)
    D = c.to_dense((3, 3))
    assert c.rows == (0, 2)
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[2, 1] = 0.5
    assert np.array_equal(D, expected)
    assert not CutMatrix([], [1], 1.0).to_dense((2, 2)).any()


def test_norm_examples():
    r = infty_to_one_norm(np.ones((3, 3)), mode="exact")
    assert r.value == 9 and np.all(r.x == 1) and np.all(r.y == 1)
    assert infty_to_one_norm(np.zeros((3, 4)), mode="exact").value == 0
    r = infty_to_one_norm(np.array([[1.0, -1.0], [-1.0, 1.0]]), mode="exact")
    assert r.value == 4
    assert r.x @ np.array([[1.0, -1.0], [-1.0, 1.0]]) @ r.y == 4


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10_000))
def test_exact_norm_matches_double_enumeration(m, n, seed):
    M = np.random.default_rng(seed).normal(size=(m, n))
    r = infty_to_one_norm(M, mode="exact")
    assert r.value == pytest.approx(brute_norm(M), abs=1e-12)
    assert r.x @ M @ r.y == pytest.approx(r.value, abs=1e-12)
    assert not r.lower_bound


@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 10_000))
def test_heuristic_is_a_lower_bound(m, n, seed):
    M = np.random.default_rng(seed).normal(size=(m, n))
    h = infty_to_one_norm(M, mode="heuristic", budget=8, seed=seed)
    assert h.lower_bound
    assert h.value <= infty_to_one_norm(M, mode="exact").value + 1e-12
    assert h.x @ M @ h.y == pytest.approx(h.value)


def test_exact_size_guard():
    with pytest.raises(TooLargeForExact):
        infty_to_one_norm(np.zeros((23, 30)), mode="exact")
    # the shorter side is enumerated, so a wide matrix is fine
    assert infty_to_one_norm(np.ones((3, 40)), mode="exact").value == 120


def test_norm_dominated_by_frobenius_bound(rng):
    M = rng.normal(size=(7, 9))
    assert infty_to_one_norm(M).value <= math.sqrt(63) * np.linalg.norm(M) + 1e-9


def check_contract(J, eps, d):
    m, n = J.shape
    frob = np.linalg.norm(J)
    W = d.residual(J)
    assert d.width <= 16 / eps**2
    assert d.coefficient_length <= 4 * frob / math.sqrt(m * n) + 1e-12
    assert np.linalg.norm(W) <= frob + 1e-12
    assert infty_to_one_norm(W, mode="exact").value <= 4 * eps * math.sqrt(m * n) * frob + 1e-9
    assert np.abs(W).max() <= max_entry_bound(d, J) + 1e-12


def test_decompose_zero():
    d = fk_decompose(np.zeros((4, 4)), 0.5)
    assert d.width == 0 and not d.residual(np.zeros((4, 4))).any()


def test_decompose_single_cut():
    J = CutMatrix([0, 1], [2, 3], 0.7).to_dense((4, 4))
    d = fk_decompose(J, 0.5)
    check_contract(J, 0.5, d)
    # the witness is the cut itself, so one round reproduces it
    assert np.allclose(d.to_dense(), J) or infty_to_one_norm(d.residual(J)).value <= 0.5 * 0.5 * 4 * np.linalg.norm(J)


@pytest.mark.parametrize("eps", [0.3, 0.4, 0.5])
def test_decompose_random_sign_matrix(eps):
    J = np.random.default_rng(1).choice([-1.0, 1.0], size=(12, 12))
    check_contract(J, eps, fk_decompose(J, eps))


@given(st.integers(2, 9), st.integers(2, 9), st.sampled_from([0.2, 0.35, 0.6, 0.9]), st.integers(0, 10_000))
def test_decompose_contract_property(m, n, eps, seed):
    J = np.random.default_rng(seed).normal(size=(m, n))
    check_contract(J, eps, fk_decompose(J, eps, seed=seed))


def test_decompose_certificate_bound_is_tighter_than_contract():
    J = np.random.default_rng(2).normal(size=(10, 10))
    d = fk_decompose(J, 0.5)
    assert d.exact_certificate
    assert d.final_witness <= 0.25 * 10 * np.linalg.norm(J) + 1e-12


def test_decompose_deterministic():
    J = np.random.default_rng(3).normal(size=(20, 20))
    a, b = fk_decompose(J, 0.5, seed=4), fk_decompose(J, 0.5, seed=4)
    assert not a.exact_certificate
    assert a.cuts == b.cuts


def test_decompose_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        fk_decompose(np.ones((2, 2)), 0.0)
    with pytest.raises(ValueError):
        fk_decompose(np.ones((2, 2)), 1.0)


def test_max_entry_bound_examples():
    empty = CutDecomposition((), (3, 3), 0.5)
    assert max_entry_bound(empty, np.zeros((3, 3))) == 0
    J = np.arange(9.0).reshape(3, 3)
    assert max_entry_bound(empty, J) == 8.0


def test_json_round_trip():
    J = np.random.default_rng(5).normal(size=(6, 6))
    d = fk_decompose(J, 0.5)
    back = CutDecomposition.from_json(d.to_json())
    assert np.allclose(back.to_dense(), d.to_dense())
    assert back.epsilon == 0.5


def test_restrict_cuts_identity_and_empty():
    d = CutDecomposition((CutMatrix([0, 1], [2], 1.5), CutMatrix([3], [0], 2.0)), (4, 4), 0.5)
    same = restrict_cuts(d, range(4))
    assert np.array_equal(same.to_dense(), d.to_dense())
    sub = restrict_cuts(d, [0, 1, 2])
    assert sub.width == 2
    assert sub.cuts[1].rows == () and sub.cuts[1].value == pytest.approx(2.0 * 4 / 3)
    with pytest.raises(InvalidSubset):
        restrict_cuts(d, [0, 0])


def test_restrict_cuts_matches_restricted_matrix():
    rng = np.random.default_rng(6)
    A = random_symmetric(rng, 8)
    d = fk_decompose(A, 0.5)
    Q = np.array([1, 3, 4, 7])
    got = restrict_cuts(d, Q).to_dense()
    expected = (8 / 4) * d.to_dense()[np.ix_(Q, Q)]
    assert np.allclose(got, expected)
    # on the zero-diagonal part this is the scaled model restriction
    off = expected - np.diag(np.diag(expected))
    D0 = d.to_dense() - np.diag(np.diag(d.to_dense()))
    D0 = (D0 + D0.T) / 2
    assert np.allclose(restrict_scaled(IsingModel(D0), Q).J, (off + off.T) / 2)

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from usm import (
    LearnOptions,
    Laplacian,
    Moe,
    dict_gradient,
    dict_objective,
    dict_update,
    incoherence,
    init_dictionary,
    learn,
    overcomplete_dct_dictionary,
)

from oracles import naive_gram_sq


def planted_instance(seed=42, m=16, k=20, n=200, nnz=3, scale=4.0):
    rng = np.random.default_rng(seed)
    D0 = rng.standard_normal((m, k))
    D0 /= np.linalg.norm(D0, axis=0)
    A0 = np.zeros((k, n))
    for j in range(n):
        s = rng.choice(k, size=nnz, replace=False)
        A0[s, j] = scale * (rng.standard_normal(nnz) + 0.4 * np.sign(rng.standard_normal(nnz)))
    return D0, A0, D0 @ A0


# ----------------------------------------------------------- initialization

def test_init_orthonormal_is_permutation():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    D = init_dictionary(Q, 6, seed=1)
    # every atom is one of the (unit norm) data columns, each used once
    used = set()
    for k in range(6):
        j = int(np.argmax(np.abs(Q.T @ D[:, k])))
        assert_allclose(np.abs(Q[:, j] @ D[:, k]), 1.0, rtol=1e-12)
        used.add(j)
    assert len(used) == 6


def test_init_deterministic_and_normalized():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((8, 30)) * 3.0
    D1 = init_dictionary(X, 12, seed=7)
    D2 = init_dictionary(X, 12, seed=7)
    assert_array_equal(D1, D2)
    assert_allclose(np.linalg.norm(D1, axis=0), 1.0, atol=1e-12)


def test_init_too_many_atoms():
    with pytest.raises(ValueError):
        init_dictionary(np.zeros((4, 5)), 6)


# -------------------------------------------------------------- incoherence

def test_incoherence_orthonormal():
    Q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((7, 7)))
    assert_allclose(incoherence(Q), 7.0, rtol=1e-12)


def test_incoherence_duplicate_atoms():
    d = np.array([1.0, 0.0, 0.0])
    assert_allclose(incoherence(np.column_stack([d, d])), 4.0, rtol=1e-15)


def test_incoherence_matches_naive():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((6, 11))
    D /= np.linalg.norm(D, axis=0)
    assert_allclose(incoherence(D), naive_gram_sq(D), rtol=1e-10)


# ----------------------------------------------------------- gradient check

@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0])
def test_dict_gradient_matches_finite_differences(mu):
    rng = np.random.default_rng(4)
    D = rng.standard_normal((6, 10))
    D /= np.linalg.norm(D, axis=0)
    X = rng.standard_normal((6, 40))
    A = rng.standard_normal((10, 40)) * 0.4
    G = dict_gradient(D, X, A, mu)
    h = 1e-6
    for _ in range(5):
        V = rng.standard_normal(D.shape)
        fd = (dict_objective(D + h * V, X, A, mu) - dict_objective(D - h * V, X, A, mu)) / (
            2.0 * h
        )
        assert_allclose(float(np.sum(G * V)), fd, rtol=1e-4)


# -------------------------------------------------------------- dict update

def test_dict_update_descends():
    rng = np.random.default_rng(5)
    D = rng.standard_normal((8, 12))
    D /= np.linalg.norm(D, axis=0)
    X = rng.standard_normal((8, 60))
    A = rng.standard_normal((12, 60)) * 0.3
    _, trace = dict_update(D, X, A, mu=0.5)
    assert np.all(np.diff(trace) <= 0.0)
    assert trace[-1] < trace[0]


def test_dict_update_mu_zero_reaches_least_squares():
    # planted feasible LS optimum (unit-norm true atoms), invertible codes
    rng = np.random.default_rng(6)
    Dtrue = rng.standard_normal((8, 8))
    Dtrue /= np.linalg.norm(Dtrue, axis=0)
    A = np.eye(8) + 0.1 * rng.standard_normal((8, 8))
    X = Dtrue @ A
    D0 = rng.standard_normal((8, 8))
    D0 /= np.linalg.norm(D0, axis=0)
    _, trace = dict_update(D0, X, A, mu=0.0, max_steps=3000, tol=1e-14)
    assert trace[-1] < 1e-6 * trace[0]


def test_dict_update_separates_duplicates():
    d = np.zeros(5)
    d[0] = 1.0
    D = np.column_stack([d, d])
    X = np.zeros((5, 3))
    A = np.zeros((2, 3))
    Dn, trace = dict_update(D, X, A, mu=1.0, max_steps=50)
    assert incoherence(Dn) < incoherence(D)
    assert np.all(np.diff(trace) <= 0.0)


def test_dict_update_trace_starts_at_initial_objective():
    rng = np.random.default_rng(7)
    D = rng.standard_normal((4, 6))
    D /= np.linalg.norm(D, axis=0)
    X = rng.standard_normal((4, 10))
    A = rng.standard_normal((6, 10)) * 0.2
    _, trace = dict_update(D, X, A, mu=0.2, max_steps=3)
    assert_allclose(trace[0], dict_objective(D, X, A, 0.2), rtol=1e-15)


# -------------------------------------------------------------------- learn

def test_learn_planted_instance():
    D0, A0, X = planted_instance()
    opts = LearnOptions(n_atoms=20, prior=Laplacian(1.0), lam=0.1, mu=1.0,
                        outer_iters=20, seed=3)
    res = learn(X, opts)
    tr = res.trace
    assert np.all(np.diff(tr) <= 1e-6 * np.abs(tr[:-1]))
    assert tr[-1] < tr[0]
    num = np.mean(np.sum((X - res.dictionary @ res.coeffs) ** 2, axis=0))
    den = np.mean(np.sum(X ** 2, axis=0))
    assert num < 1e-2 * den
    assert np.all(np.linalg.norm(res.dictionary, axis=0) <= 1.0 + 1e-12)


def test_learn_reduces_incoherence_with_positive_mu():
    D0, A0, X = planted_instance(seed=9)
    opts = LearnOptions(n_atoms=20, prior=Laplacian(1.0), outer_iters=12, seed=3)
    res = learn(X, opts)
    Dinit = init_dictionary(X, 20, seed=3)
    assert incoherence(res.dictionary) <= incoherence(Dinit) + 1e-6


def test_learn_deterministic():
    _, _, X = planted_instance(seed=10, n=80)
    opts = LearnOptions(n_atoms=12, prior=Moe(2.8, 0.07), lam=0.1, outer_iters=5, seed=5)
    r1 = learn(X, opts)
    r2 = learn(X, opts)
    assert_array_equal(r1.trace, r2.trace)
    assert_array_equal(r1.dictionary, r2.dictionary)


def test_learn_reseeds_unused_atoms():
    # one dominant direction: most atoms go unused and get re-seeded
    rng = np.random.default_rng(11)
    u = rng.standard_normal(10)
    u /= np.linalg.norm(u)
    X = np.outer(u, rng.uniform(2.0, 3.0, 40)) + 0.01 * rng.standard_normal((10, 40))
    opts = LearnOptions(n_atoms=6, prior=Laplacian(1.0), lam=0.5, mu=0.5,
                        outer_iters=6, seed=0)
    res = learn(X, opts)
    assert len(res.reseeds) > 0
    tr = res.trace
    assert np.all(np.diff(tr) <= 1e-6 * np.abs(tr[:-1]))


def test_learn_accepts_explicit_initial_dictionary():
    _, _, X = planted_instance(seed=12, n=60)
    Dinit = init_dictionary(X, 10, seed=1)
    opts = LearnOptions(n_atoms=10, prior=Laplacian(1.0), outer_iters=3, seed=1)
    res = learn(X, opts, dict_init=Dinit)
    assert res.dictionary.shape == (16, 10)


def test_learn_rejects_oversized_initial_norms():
    _, _, X = planted_instance(seed=13, n=50)
    bad = np.ones((16, 4))
    with pytest.raises(ValueError):
        learn(X, LearnOptions(n_atoms=4, prior=Laplacian(1.0)), dict_init=bad)


def test_learn_rejects_row_mismatch():
    _, _, X = planted_instance(seed=14, n=50)
    with pytest.raises(ValueError):
        learn(X, LearnOptions(n_atoms=4, prior=Laplacian(1.0)), dict_init=np.eye(4))


# ---------------------------------------------------------------- dct atoms

def test_dct_dictionary_shape_and_norms():
    D = overcomplete_dct_dictionary(8, 16)
    assert D.shape == (64, 256)
    assert_allclose(np.linalg.norm(D, axis=0), 1.0, atol=1e-12)


def test_dct_dictionary_has_constant_atom_and_zero_means():
    D = overcomplete_dct_dictionary(8, 16)
    first = D[:, 0]
    assert_allclose(first, first[0], atol=1e-12)
    assert np.abs(D[:, 1:].mean(axis=0)).max() < 1e-12


def test_dct_dictionary_spans_patch_space():
    D = overcomplete_dct_dictionary(8, 16)
    assert np.linalg.matrix_rank(D) == 64


def test_dct_dictionary_small_case_deterministic():
    assert_array_equal(
        overcomplete_dct_dictionary(4, 6), overcomplete_dct_dictionary(4, 6)
    )

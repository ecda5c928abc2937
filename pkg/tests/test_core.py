import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcrisk import (
    INF,
    CenterModel,
    ComplexityVector,
    Dataset,
    DomainError,
    KernelComponent,
    KernelModel,
    KernelSpec,
    LpConstraint,
    SubspaceModel,
    alpha,
    check_embedding,
    complexity_vector,
    harmonic_p_sum,
    in_class,
    lp_norm,
    order_components,
)
from mcrisk.core import check_embedding_batch, ordering, parse_p
from mcrisk.harness.synthetic import random_in_class_model
from mcrisk.learners import random_basis

P_GRID = [0.25, 0.5, 0.9, 1, 1.5, 2, 5, INF]

ps = st.sampled_from(P_GRID)
omegas = st.lists(st.floats(0, 1e3, allow_nan=False), min_size=1, max_size=8)


# -- alpha -------------------------------------------------------------------


@pytest.mark.parametrize("C, p, expected", [
    (4, INF, 4.0),
    (8, 1, 1 + math.log(8)),
    (9, 0.5, 2.0),
    (4, 2, 4.0),
    (100, 1, 5.60517018598809136804),
    (100, INF, 100.0),
])
def test_alpha_examples(C, p, expected):
    assert alpha(C, p) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("C, p", [(1, 2), (0, 1), (2.5, 1), (4, 0), (4, -1), (4, float("nan"))])
def test_alpha_domain(C, p):
    with pytest.raises(DomainError):
        alpha(C, p)


def test_alpha_accepts_inf_string():
    assert alpha(7, "inf") == 7.0
    assert parse_p("Infinity") == INF


@given(C=st.integers(2, 10_000), p=ps)
def test_harmonic_sum_below_alpha(C, p):
    assert harmonic_p_sum(C, p) <= alpha(C, p)


@pytest.mark.parametrize("p", [INF, 2, 1])
def test_alpha_nondecreasing_in_C(p):
    vals = [alpha(C, p) for C in range(2, 500)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", [0.25, 0.5, 0.9])
def test_alpha_constant_below_one(p):
    assert {alpha(C, p) for C in range(2, 200)} == {1 / (1 - p)}


@pytest.mark.parametrize("C, p, expected", [
    (3, INF, 3.0),
    (2, 1, 1.5),
    (4, 2, 2.78445705037617328890999314261),
    (1, 0.5, 1.0),
])
def test_harmonic_sum_examples(C, p, expected):
    assert harmonic_p_sum(C, p) == pytest.approx(expected, rel=1e-15)


# -- lp norms ----------------------------------------------------------------


@pytest.mark.parametrize("v, p, expected", [
    ((3, 4), 2, 5.0),
    ((1, 1), 0.5, 4.0),
    ((2, 7, 5), INF, 7.0),
    ((0, 0), 1, 0.0),
    ((), 2, 0.0),
])
def test_lp_norm_examples(v, p, expected):
    assert lp_norm(v, p) == pytest.approx(expected, rel=1e-15)


def test_lp_norm_rejects_negative():
    with pytest.raises(DomainError):
        lp_norm([1, -1], 2)


def test_lp_norm_no_overflow():
    assert lp_norm([1e300, 1e300], 2) == pytest.approx(math.sqrt(2) * 1e300)
    assert lp_norm([1e-300, 1e-300], 0.25) == pytest.approx(16e-300)


@given(v=omegas, p=ps)
def test_lp_norm_between_max_and_l_quarter(v, p):
    n = lp_norm(v, p)
    assert max(v) <= n * (1 + 1e-12)
    assert n <= lp_norm(v, 0.25) * (1 + 1e-12)


# -- complexity vectors and ordering -----------------------------------------


def test_complexity_vector_examples():
    I = np.eye(5)
    sub = SubspaceModel((I[:, :4], I[:, 4:]))
    assert complexity_vector(sub).values.tolist() == [2.0, 1.0]
    cen = CenterModel(np.array([[3.0, 4.0], [0.0, 0.0]]))
    assert complexity_vector(cen).values.tolist() == [5.0, 0.0]
    ker = KernelModel(KernelSpec("gaussian", gamma=0.3), (KernelComponent([[0.2, 0.1]], [2.0]),))
    assert complexity_vector(ker).values.tolist() == pytest.approx([2.0], rel=1e-15)


def test_complexity_vector_rejects_negative():
    with pytest.raises(DomainError):
        ComplexityVector([1.0, -0.1])


def test_ordering_examples():
    cen = CenterModel(np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 0.0]]))
    assert complexity_vector(order_components(cen)).values.tolist() == [3.0, 2.0, 1.0]
    assert ordering([2.0, 2.0]).tolist() == [0, 1]
    tied = CenterModel(np.array([[2.0, 0.0], [0.0, 2.0]]))
    assert np.array_equal(order_components(tied).centers, tied.centers)


def test_ordering_random_model_nonincreasing(rng):
    for _ in range(50):
        m = random_in_class_model("centers", LpConstraint(2, 3.0), 6, 4, rng)
        w = complexity_vector(order_components(m)).values
        assert np.all(np.diff(w) <= 0)


@given(v=omegas, p=ps)
def test_ordering_idempotent_and_norm_preserving(v, p):
    model = CenterModel(np.array(v)[:, None] * np.array([[1.0, 0.0]]))
    once = order_components(model)
    twice = order_components(once)
    assert np.array_equal(once.centers, twice.centers)
    assert lp_norm(complexity_vector(once), p) == pytest.approx(
        lp_norm(complexity_vector(model), p), rel=1e-12)


# -- embedding ---------------------------------------------------------------


def test_embedding_hand_example():
    model = CenterModel(np.array([[1.5, 0.0], [1.0, 0.0], [0.0, 0.5]]))
    assert check_embedding(model, LpConstraint(1, 3.0))


def test_embedding_rejects_out_of_class():
    model = CenterModel(np.array([[2.0, 0.0], [2.0, 0.0]]))
    assert not check_embedding(model, LpConstraint(1, 3.0))


def test_radii_at_infinity_all_equal_lambda():
    np.testing.assert_array_equal(LpConstraint(INF, 2.5).radii(7), np.full(7, 2.5))
    np.testing.assert_allclose(LpConstraint(2, 4.0).radii(4), [4, 4 / math.sqrt(2), 4 / math.sqrt(3), 2],
                               rtol=1e-15)


@settings(max_examples=200)
@given(v=omegas, p=ps)
def test_embedding_holds_for_normalized_vectors(v, p):
    w = np.asarray(v)
    norm = lp_norm(w, p)
    lam = norm if norm > 0 else 1.0
    c = LpConstraint(p, lam)
    model = CenterModel(w[:, None] * np.array([[0.0, 1.0]]))
    assert check_embedding(model, c)
    assert check_embedding_batch(w[None, :], c)[0]


def test_embedding_batch_matches_object(rng):
    c = LpConstraint(0.5, 2.0)
    W = rng.random((300, 4)) * 0.3
    batch = check_embedding_batch(W, c)
    obj = [check_embedding(CenterModel(np.diag(w)), c) for w in W]
    assert batch.tolist() == obj
    assert 0 < batch.sum() < len(W)


# -- domain types ------------------------------------------------------------


def test_dataset_infers_lambda_and_validates():
    data = Dataset([[3.0, 4.0], [0.0, 1.0]])
    assert data.lambda_x == 5.0 and data.n == 2 and data.d == 2
    assert data.frobenius() == pytest.approx(math.sqrt(26.0))
    with pytest.raises(DomainError):
        Dataset([[3.0, 4.0]], None, 4.9)
    with pytest.raises(DomainError):
        Dataset([[0.0]], [0.6])
    with pytest.raises(DomainError):
        Dataset([[0.0], [1.0]], [0.1])
    with pytest.raises(ValueError):
        data.points[0, 0] = 1.0


def test_constraint_validation():
    assert LpConstraint("inf", 1).p == INF
    for bad in [(0, 1), (-1, 1), (2, -1), (2, INF)]:
        with pytest.raises(DomainError):
            LpConstraint(*bad)


def test_subspace_model_requires_orthonormal():
    with pytest.raises(DomainError):
        SubspaceModel((np.array([[1.0], [1.0]]),))
    with pytest.raises(DomainError):
        SubspaceModel((np.eye(3)[:, :1], np.eye(2)[:, :1]))


def test_kernel_model_checks_cached_norm():
    comp = KernelComponent([[0.0]], [2.0], norm=2.0)
    KernelModel(KernelSpec("linear"), (KernelComponent([[1.0]], [2.0], norm=2.0),))
    with pytest.raises(DomainError):
        KernelModel(KernelSpec("gaussian"), (KernelComponent([[0.0]], [2.0], norm=3.0),))
    assert KernelModel(KernelSpec("gaussian"), (comp,)).components[0].norm == 2.0


def test_kernels_psd(rng):
    X = rng.standard_normal((30, 3))
    for k in [KernelSpec("gaussian", gamma=0.7), KernelSpec("linear"), KernelSpec("polynomial", degree=3)]:
        K = k(X, X)
        np.testing.assert_allclose(K, K.T, atol=1e-12)
        np.testing.assert_allclose(np.diag(K), k.diag(X), rtol=1e-12)
        assert np.linalg.eigvalsh(K).min() > -1e-8 * np.abs(K).max()


def test_random_in_class_models_are_in_class(rng):
    X = rng.standard_normal((20, 3))
    for p in [0.5, 1, 2, INF]:
        c = LpConstraint(p, 10.0)
        for kind in ["centers", "subspaces", "kernel"]:
            for _ in range(20):
                m = random_in_class_model(kind, c, 3, 3, rng, kernel=KernelSpec("gaussian"), anchors=X)
                assert in_class(m, c)


def test_random_basis_orthonormal(rng):
    for d in range(1, 12):
        for m in range(1, d + 1):
            B = random_basis(d, m, rng)
            np.testing.assert_allclose(B.T @ B, np.eye(m), atol=1e-12)

import numpy as np
import pytest
import scipy.sparse as sp

from src.core.two_sparse import TwoSparseMatrix
from src.data.generators import random_two_sparse
from src.linsolve import (InverseMaintenance, is_sdd, leverage_scores, lewis_exponent, lewis_weights,
                          mmatrix_scale, sampling_probabilities, sdd_solve, solve_two_sparse_gram)
from src.spectral.certificates import pencil_extremes
from src.utils.exceptions import ContractViolation


@pytest.fixture
def tall(rng):
    return random_two_sparse(40, 6, rng, single_fraction=0.4)


def test_leverage_scores_sum_to_rank(tall, rng):
    sigma = leverage_scores(tall)
    assert sigma.shape == (40,)
    assert sigma.sum() == pytest.approx(6.0)
    assert np.all((sigma >= 0) & (sigma <= 1.0))

    w = rng.uniform(0.1, 3.0, size=40)
    assert leverage_scores(tall, weights=w).sum() == pytest.approx(6.0)


def test_leverage_scores_reject_rank_deficiency():
    a = np.array([[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0]])
    with pytest.raises(ContractViolation) as info:
        leverage_scores(a)
    witness = info.value.witness
    assert np.allclose(a @ witness, 0.0, atol=1e-10)


def test_lewis_weights_fixed_point(tall):
    p = lewis_exponent(40, 6)
    assert 0 < p < 1
    result = lewis_weights(tall)
    assert result.converged
    # sigma sums to n and the regularization adds n more
    assert result.weights.sum() == pytest.approx(12.0, rel=1e-6)
    assert np.all(result.weights >= 6.0 / 40.0)

    warm = lewis_weights(tall, w0=result.weights)
    assert warm.converged and warm.n_iter <= 5


def test_lewis_weights_with_hessian_and_empty(tall, rng):
    hessian = rng.uniform(0.5, 2.0, size=40)
    assert lewis_weights(tall, hessian=hessian, p=2.0).converged
    assert np.allclose(lewis_weights(np.zeros((3, 0))).weights, 1.0)
    with pytest.raises(ContractViolation):
        lewis_weights(tall, hessian=-hessian)


def test_sdd_solve_laplacian_plus_identity(rng):
    n = 30
    lap = sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    m = lap + sp.identity(n)
    assert is_sdd(m)
    b = rng.standard_normal(n)
    report = sdd_solve(m, b, eps=1e-10)
    assert report.converged
    assert np.allclose(m @ report.x, b, atol=1e-8)

    ilu = sdd_solve(m, b, eps=1e-10, preconditioner="ilu")
    assert np.allclose(ilu.x, report.x, atol=1e-7)
    assert sdd_solve(m, np.zeros(n)).n_iter == 0
    with pytest.raises(ContractViolation):
        sdd_solve(m, b, preconditioner="amg")


def test_mmatrix_scale_makes_dominant():
    m = np.array([[1.0, -1.2, 0.0], [-1.2, 3.0, -1.0], [0.0, -1.0, 1.5]])
    assert not is_sdd(m)
    z = mmatrix_scale(m)
    assert np.all(z > 0)
    assert is_sdd(np.diag(z) @ m @ np.diag(z))

    with pytest.raises(ContractViolation):
        mmatrix_scale(np.array([[1.0, 0.5], [0.5, 1.0]]))


@pytest.mark.parametrize("dense_limit", [500, 0])
def test_two_sparse_gram_solve(tall, rng, dense_limit):
    w = rng.uniform(0.5, 2.0, size=40)
    x_star = rng.standard_normal(6)
    g = tall.gram(w).toarray()
    rhs = g @ x_star
    report = solve_two_sparse_gram(tall, w, rhs, eps=1e-10, dense_limit=dense_limit)
    assert report.residual <= 1e-6
    assert np.allclose(report.x, x_star, atol=1e-5)


def test_two_sparse_gram_solve_skips_deleted_rows(rng):
    a = TwoSparseMatrix(2, [[(0, 1.0)], [(0, 1.0), (1, -2.0)], [(1, 3.0)]])
    a.delete_row(1)
    rhs = np.array([1.0, 9.0])
    report = solve_two_sparse_gram(a, np.ones(3), rhs, dense_limit=0)
    assert np.allclose(report.x, [1.0, 1.0], atol=1e-6)


def test_sampling_probabilities_cap():
    p = sampling_probabilities([0.0, 1e-3, 1.0], 8, constant=40.0)
    assert p[0] == 0.0 and p[2] == 1.0
    assert p[1] == pytest.approx(40.0 * 1e-3 * np.log(8))


def test_inverse_maintenance_solves_exactly(tall, rng):
    v = rng.uniform(0.5, 2.0, size=40)
    im = InverseMaintenance(tall, v, np.ones(40), rng=rng)
    assert im.n_sampled == 40
    assert im.approximation_factor() == pytest.approx(0.0, abs=1e-9)

    x_star = rng.standard_normal(6)
    v_bar = v * rng.uniform(0.9, 1.1, size=40)
    b = tall.gram(v_bar).toarray() @ x_star
    report = im.solve(v_bar, b, eps=1e-10)
    assert report.converged
    assert np.allclose(report.x, x_star, atol=1e-6)


def test_inverse_maintenance_with_sparse_sampling(tall, rng):
    v = np.ones(40)
    sigma = leverage_scores(tall)
    im = InverseMaintenance(tall, v, sigma, sampling_constant=0.3, rng=rng)
    x_star = rng.standard_normal(6)
    b = tall.gram(v).toarray() @ x_star
    report = im.solve(v, b, eps=1e-9)
    assert report.converged
    assert np.allclose(report.x, x_star, atol=1e-5)

    im.scale(0, 2.0, 10.0)
    assert im.s[0] == 1.0 and im.v[0] == 2.0
    assert im.counters["resamples"] == 41
    with pytest.raises(ContractViolation):
        im.scale(0, 0.0, 1.0)
    with pytest.raises(ContractViolation):
        im.solve(v, np.ones(5))


def test_lewis_weights_tolerate_rank_deficiency():
    # rank one: the second column repeats the first
    a = np.array([[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0], [0.5, 0.5]])
    result = lewis_weights(a)
    assert result.converged
    assert np.all(np.isfinite(result.weights))
    # scores sum to the rank and the regularization adds n
    assert result.weights.sum() == pytest.approx(1.0 + 2.0, rel=1e-6)

    collapsed = lewis_weights(a, hessian=np.array([1.0, 1e30, 1e30, 1e30]))
    assert np.all(np.isfinite(collapsed.weights))


def test_inverse_maintenance_regularizes_singular_gram():
    a = TwoSparseMatrix(2, [[(0, 1.0), (1, 1.0)], [(0, 2.0), (1, 2.0)], [(0, -1.0), (1, -1.0)]])
    im = InverseMaintenance(a, np.ones(3), np.ones(3), rng=0)
    b = np.array([1.0, 1.0])
    report = im.solve(np.ones(3), b, eps=1e-8)
    assert im.counters["regularized"] >= 1
    assert report.converged
    assert np.allclose(a.gram().toarray() @ report.x, b, atol=1e-6)


def test_inverse_maintenance_falls_back_to_cg(tall, rng):
    v = rng.uniform(0.5, 2.0, size=40)
    im = InverseMaintenance(tall, v, np.ones(40), rng=rng, max_sweeps=1)
    x_star = rng.standard_normal(6)
    # the preconditioner is half the target, so one sweep leaves the residual at 1
    b = tall.gram(2.0 * v).toarray() @ x_star
    report = im.solve(2.0 * v, b, eps=1e-10)
    assert im.counters["fallbacks"] == 1
    assert report.converged
    assert np.allclose(report.x, x_star, atol=1e-6)


def test_sampled_gram_approximates_on_most_seeds():
    a = random_two_sparse(60, 6, np.random.default_rng(11), single_fraction=0.4)
    v = np.random.default_rng(12).uniform(0.5, 2.0, size=60)
    sigma = leverage_scores(a, weights=v)
    good = 0
    for seed in range(100):
        im = InverseMaintenance(a, v, sigma, sampling_constant=40.0, rng=seed)
        good += im.approximation_factor() <= 0.1
    assert good >= 99


def test_richardson_contracts_per_sweep(tall, rng):
    v = rng.uniform(0.5, 2.0, size=40)
    im = InverseMaintenance(tall, v, leverage_scores(tall, weights=v), rng=rng)
    assert im.approximation_factor() <= 0.1

    v_bar = v * rng.uniform(0.95, 1.05, size=40)
    lo, hi = pencil_extremes(tall.gram(v_bar).toarray(), im.preconditioner().toarray())
    # error map of one sweep is I - H^{-1} A^T Vbar A
    assert max(abs(1.0 - lo), abs(1.0 - hi)) <= 2.0 / 3.0

    x_star = rng.standard_normal(6)
    report = im.solve(v_bar, tall.gram(v_bar).toarray() @ x_star, eps=1e-8)
    assert report.converged and report.n_iter <= 40
    assert im.counters["fallbacks"] == 0

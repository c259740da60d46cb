import numpy as np
import pytest

from src.core.graph import LossyLaplacianView
from src.core.two_sparse import TwoSparseMatrix
from src.data.generators import random_two_sparse
from src.hh.interface import HeavyHitter, HeavySampler
from src.hh.parameters import HhParameters
from src.hh.reduction import reduce_row, two_sparse_reduce
from src.oracles.heavy import check_heavy, exact_heavy_set
from src.oracles.validity import sampling_validity
from src.utils.exceptions import ContractViolation

PARAMS = HhParameters(phi=0.02, beta=0.05, eps_ad=1e-3)


@pytest.mark.parametrize("pairs", [
    [(0, 2.0)],
    [(1, -0.5)],
    [(0, 1.0), (2, 3.0)],
    [(0, -1.5), (1, -0.25)],
    [(1, 2.0), (2, -4.0)],
    [(2, -1.0), (0, 1.0)],
])
def test_reduce_row_preserves_row_values(pairs, rng):
    n = 3
    tail, head, eta, gain = reduce_row(pairs, n)
    assert eta >= 1.0
    assert tail != head
    for _ in range(3):
        h = rng.standard_normal(n)
        y = np.concatenate([h, -h])
        expected = sum(v * h[j] for j, v in pairs)
        assert gain * (y[head] - eta * y[tail]) == pytest.approx(expected)


def test_reduce_row_rejects_zero_row():
    with pytest.raises(ContractViolation):
        reduce_row([(0, 0.0)], 2)


def test_reduction_applies_and_covers(rng):
    a = random_two_sparse(12, 5, rng)
    red = two_sparse_reduce(a)
    assert red.n_vertices == 10 and red.n_edges == 12

    h = rng.standard_normal(5)
    assert np.allclose(red.apply(h), a.matvec(h))

    w = rng.uniform(0.5, 2.0, size=12)
    dense = a.to_dense()
    cover = LossyLaplacianView(red.mirrored_cover(w)).L.toarray()
    p = np.vstack([np.eye(5), -np.eye(5)])
    assert np.allclose(dense.T @ np.diag(w) @ dense, p.T @ cover @ p / 2.0)

    eta_max, gain_max = red.magnitude_bounds()
    assert eta_max >= 1.0 and gain_max >= 1.0
    with pytest.raises(ContractViolation):
        red.lift(np.zeros(4))


def test_heavy_hitter_on_identity():
    hh = HeavyHitter(TwoSparseMatrix.from_dense(np.eye(2)), params=PARAMS, rng=0)
    assert list(hh.query_heavy([3.0, 1.0], 2.0)) == [0]
    assert hh.query_heavy([0.0, 0.0], 1.0).size == 0
    with pytest.raises(ContractViolation):
        hh.query_heavy([1.0, 1.0], 0.0)


def test_heavy_hitter_matches_exact_under_updates(rng):
    a = random_two_sparse(20, 6, rng)
    g = rng.uniform(0.5, 2.0, size=20)
    hh = HeavyHitter(a, g=g, params=PARAMS, rng=rng)

    h = rng.standard_normal(6)
    assert check_heavy(hh.query_heavy(h, 0.8), a, h, 0.8, g=g).passed

    hh.scale(3, 0.0)
    hh.scale(4, 5.0)
    hh.delete_row(7)
    i = hh.insert_row([(0, 1.0), (5, -2.0)], g=1.5)
    assert i == 20

    h = rng.standard_normal(6)
    assert list(hh.query_heavy(h, 0.8)) == list(exact_heavy_set(a, h, 0.8, g=hh.g))
    assert 3 not in hh.query_heavy(h, 1e-9)
    assert np.allclose(hh.values(h), hh.g * a.matvec(h))

    with pytest.raises(ContractViolation):
        hh.scale(7, 1.0)
    with pytest.raises(ContractViolation):
        hh.scale(0, np.inf)


def test_heavy_sampler_is_unbiased(rng):
    n = 5
    a = random_two_sparse(15, n, rng)
    g = rng.uniform(0.5, 2.0, size=15)
    g[2] = 0.0
    # C2 = sqrt(2n) makes every probability one on the doubled vertex set
    sampler = HeavySampler(a, g=g, params=PARAMS, rng=rng, constants=(4.0, 1.0, float(np.sqrt(2 * n)), 0.0))
    h = rng.standard_normal(n)

    r = sampler.sample(h)
    assert 2 not in set(r.edges)
    p = sampler.probabilities()
    assert p[2] == 0.0
    assert np.allclose(np.delete(p, 2), 1.0)

    active = np.delete(np.arange(15), 2)
    report = sampling_validity(lambda: sampler.sample(h), 15, 1500, active=active, tol=0.12)
    assert report.passed


def test_heavy_sampler_scale_and_constants(rng):
    a = random_two_sparse(6, 3, rng)
    sampler = HeavySampler(a, params=PARAMS, rng=rng)
    sampler.scale(1, 2.0, 0.5)
    assert sampler.g[1] == 2.0 and sampler.tau[1] == 0.5
    with pytest.raises(ContractViolation):
        sampler.scale(1, 1.0, -1.0)
    with pytest.raises(ContractViolation):
        HeavySampler(a, params=PARAMS, constants=(1.0, 1.0, 1.0))

    empty = HeavySampler(a, g=np.zeros(6), params=PARAMS, rng=rng)
    assert empty.sample(np.ones(3)).edges.size == 0

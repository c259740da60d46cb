import numpy as np
import pytest

from src.hh.sampling import PartialSumTree, SampledDiagonal, draw_count, jl_matrix, jl_rows
from src.utils.exceptions import ContractViolation


def test_partial_sum_tree_totals_and_updates():
    tree = PartialSumTree([1.0, 2.0, 3.0])
    assert tree.total == pytest.approx(6.0)
    tree.update(1, 0.5)
    assert tree.total == pytest.approx(4.5)
    assert tree[1] == pytest.approx(0.5)
    assert np.allclose(tree.values(), [1.0, 0.5, 3.0])

    with pytest.raises(ContractViolation):
        tree.update(3, 1.0)
    with pytest.raises(ContractViolation):
        tree.update(0, -1.0)
    with pytest.raises(ContractViolation):
        PartialSumTree([1.0, -2.0])


def test_partial_sum_tree_draws_proportionally(rng):
    tree = PartialSumTree([1.0, 0.0, 3.0, 0.0, 4.0])
    draws = tree.sample(rng, 40000)
    freq = np.bincount(draws, minlength=5) / draws.size
    assert freq[1] == 0.0 and freq[3] == 0.0
    assert np.allclose(freq, [0.125, 0.0, 0.375, 0.0, 0.5], atol=0.015)

    tree.update(4, 0.0)
    assert not np.any(tree.sample(rng, 1000) == 4)


def test_partial_sum_tree_without_mass(rng):
    tree = PartialSumTree([0.0, 0.0])
    assert tree.sample(rng, 0).size == 0
    with pytest.raises(ContractViolation):
        tree.sample(rng, 3)


def test_jl_sketch_shape():
    assert jl_rows(10, 5, constant=1.0, max_rows=4) == 4
    assert jl_rows(10, 5, constant=48.0, max_rows=10 ** 6) > 100
    j = jl_matrix(16, 7, np.random.default_rng(0))
    assert j.shape == (16, 7)
    assert np.allclose(np.abs(j), 0.25)


def test_draw_count_is_exact_in_expectation(rng):
    counts = np.array([draw_count(2.3, rng) for _ in range(20000)])
    assert set(np.unique(counts)) <= {2, 3}
    assert counts.mean() == pytest.approx(2.3, abs=0.02)
    assert draw_count(0.0, rng) == 0


def test_sampled_diagonal_merges_and_relabels():
    r = SampledDiagonal.from_draws([3, 1, 3], [2.0, 1.0, 2.0], 2.0, 3)
    assert list(r.edges) == [1, 3]
    assert np.allclose(r.values, [0.5, 2.0])
    assert np.allclose(r.to_dense(5), [0.0, 0.5, 0.0, 2.0, 0.0])

    moved = r.relabel(np.array([0, 9, 0, 4]))
    assert list(moved.edges) == [4, 9]
    assert np.allclose(moved.values, [2.0, 0.5])

    both = SampledDiagonal.concat([moved, SampledDiagonal.empty(), SampledDiagonal(np.array([5]), np.array([1.0]), 2)])
    assert list(both.edges) == [4, 5, 9]
    assert both.n_draws == 5

import math
from typing import NamedTuple

import numpy as np

from src.utils.common_utils import as_generator
from src.utils.exceptions import ContractViolation

__all__ = [
    'SampledDiagonal',
    'PartialSumTree',
    'jl_rows',
    'jl_matrix',
    'draw_count'
]


class PartialSumTree(object):
    """Complete binary tree over nonnegative leaf values.

    Supports point updates and drawing leaves with probability proportional to
    their value, both in ``O(log n)`` per leaf. Draws are vectorized over the
    requested sample size.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size and (values.min() < 0 or not np.all(np.isfinite(values))):
            raise ContractViolation("PartialSumTree holds finite nonnegative values only.")

        self.size = values.shape[0]
        self._leaves = 1
        while self._leaves < max(self.size, 1):
            self._leaves *= 2

        self._tree = np.zeros(2 * self._leaves)
        self._tree[self._leaves:self._leaves + self.size] = values
        for i in range(self._leaves - 1, 0, -1):
            self._tree[i] = self._tree[2 * i] + self._tree[2 * i + 1]

    @property
    def total(self):
        return float(self._tree[1])

    def __getitem__(self, i):
        return float(self._tree[self._leaves + i])

    def values(self):
        return self._tree[self._leaves:self._leaves + self.size].copy()

    def update(self, i, value):
        if not 0 <= i < self.size:
            raise ContractViolation("Leaf {0} outside of [0, {1}).".format(i, self.size))
        if value < 0 or not np.isfinite(value):
            raise ContractViolation("PartialSumTree holds finite nonnegative values only.")
        pos = self._leaves + i
        delta = value - self._tree[pos]
        while pos >= 1:
            self._tree[pos] += delta
            pos //= 2
        # accumulated rounding in inner nodes must not leave negative mass behind
        if self._tree[1] < 0:
            self._tree[1] = 0.0

    def sample(self, rng, size):
        """Draw ``size`` leaf indices i.i.d. proportionally to the leaf values."""
        rng = as_generator(rng)
        if size == 0:
            return np.zeros(0, dtype=np.int64)
        if self.total <= 0:
            raise ContractViolation("Cannot sample from a PartialSumTree of zero mass.")

        target = rng.random(size) * self._tree[1]
        node = np.ones(size, dtype=np.int64)
        while node[0] < self._leaves:
            left = 2 * node
            go_right = target >= self._tree[left]
            # never descend into an empty subtree
            go_right &= self._tree[left + 1] > 0
            go_right |= self._tree[left] <= 0
            target = np.where(go_right, target - self._tree[left], target)
            node = np.where(go_right, left + 1, left)
        return node - self._leaves


def jl_rows(n_edges, n_vertices, constant=48.0, max_rows=1024):
    """Sketch dimension for a query budget of ``|E|^3`` and failure rate ``|V|^-10``."""
    budget = 3.0 * math.log(max(n_edges, 2)) + 10.0 * math.log(max(n_vertices, 2))
    return int(min(max_rows, max(1, math.ceil(constant * budget))))


def jl_matrix(k, m, rng=None):
    """Dense ``k x m`` sketch with independent ``+-1/sqrt(k)`` entries."""
    rng = as_generator(rng)
    signs = rng.integers(0, 2, size=(k, m)) * 2.0 - 1.0
    return signs / np.sqrt(k)


def draw_count(expected, rng):
    """Randomized rounding of a nonnegative draw count, exact in expectation."""
    if expected <= 0:
        return 0
    base = math.floor(expected)
    return int(base + (as_generator(rng).random() < expected - base))


class SampledDiagonal(NamedTuple):
    """Sparse random diagonal matrix: ``R[edges[k], edges[k]] = values[k]``."""
    edges: np.ndarray
    values: np.ndarray
    n_draws: int

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), 0)

    @classmethod
    def from_draws(cls, edge_ids, inv_prob, c0, n_draws):
        """Sum the accepted draws ``p_e^{-1} 1_e`` and divide by ``C0``."""
        if len(edge_ids) == 0:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0), int(n_draws))
        edges, inverse = np.unique(np.asarray(edge_ids, dtype=np.int64), return_inverse=True)
        values = np.zeros(edges.shape[0])
        np.add.at(values, inverse, np.asarray(inv_prob, dtype=np.float64))
        return cls(edges, values / c0, int(n_draws))

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        n_draws = int(sum(p.n_draws for p in parts))
        parts = [p for p in parts if p.edges.size]
        if not parts:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0), n_draws)
        edges = np.concatenate([p.edges for p in parts])
        values = np.concatenate([p.values for p in parts])
        order = np.argsort(edges, kind="stable")
        return cls(edges[order], values[order], n_draws)

    def relabel(self, ids):
        """Map local edge positions to the ids ``ids[pos]``."""
        if not self.edges.size:
            return self
        edges = np.asarray(ids, dtype=np.int64)[self.edges]
        order = np.argsort(edges, kind="stable")
        return SampledDiagonal(edges[order], self.values[order], self.n_draws)

    def to_dense(self, m):
        out = np.zeros(m)
        out[self.edges] = self.values
        return out

import numpy as np

from src.utils.exceptions import ContractViolation
from .general import GeneralLossyHh
from .parameters import HhParameters
from .reduction import reduce_row, two_sparse_reduce
from .sampling import SampledDiagonal

__all__ = [
    'HeavyHitter',
    'HeavySampler'
]


class _ReducedStructure(object):
    """A GeneralLossyHh over the lossy-graph form of a two-sparse matrix.

    Row ``i`` of ``A`` with row weight ``g_i`` is edge ``i`` with weight
    ``|gain_i| g_i``. Rows with weight zero are kept out of the structure.
    """

    def __init__(self, a, g=None, tau=None, params=None, rng=None):

        self.a = a
        self.n_cols = a.n_cols
        n_rows = a.n_rows
        self.g = np.ones(n_rows) if g is None else np.abs(np.asarray(g, dtype=np.float64)).copy()
        self.tau = np.zeros(n_rows) if tau is None else np.asarray(tau, dtype=np.float64).copy()

        if self.g.shape[0] != n_rows or self.tau.shape[0] != n_rows:
            raise ContractViolation("g and tau need one entry per row ({0}).".format(n_rows))
        if n_rows and (not np.all(np.isfinite(self.g)) or self.tau.min() < 0):
            raise ContractViolation("Row weights must be finite and tau nonnegative.")

        if params is None:
            params = HhParameters.from_configs(max(n_rows, 2))
        self.params = params

        reduction = two_sparse_reduce(a)
        self._gain = np.zeros(n_rows)
        self._gain[reduction.row_ids] = reduction.gain
        self._edge = {}
        for k, i in enumerate(reduction.row_ids):
            self._edge[int(i)] = (int(reduction.tails[k]), int(reduction.heads[k]), float(reduction.eta[k]))

        active = reduction.row_ids[self.g[reduction.row_ids] > 0]
        pos = np.searchsorted(reduction.row_ids, active)
        self.structure = GeneralLossyHh.initialize(
            reduction.n_vertices, reduction.tails[pos], reduction.heads[pos], reduction.eta[pos],
            np.abs(reduction.gain[pos]) * self.g[active], tau=self.tau[active],
            params=params, edge_ids=active, rng=rng)
        self.reduction = reduction

    def _check_row(self, i):
        if not self.a.is_alive(i):
            raise ContractViolation("Row {0} is not a live row.".format(i))

    def _set_weight(self, i, b):
        b = abs(float(b))
        if not np.isfinite(b):
            raise ContractViolation("Row weights must be finite, got {0}.".format(b))
        present = i in self.structure.weight
        self.g[i] = b
        if b == 0.0:
            if present:
                self.structure.delete(i)
            return
        weight = abs(self._gain[i]) * b
        if present:
            self.structure.scale(i, weight)
        else:
            tail, head, eta = self._edge[i]
            self.structure.insert(tail, head, eta, weight, edge_id=i, tau=self.tau[i])

    def _set_tau(self, i, b):
        if b < 0 or not np.isfinite(b):
            raise ContractViolation("tau entries must be finite and nonnegative, got {0}.".format(b))
        self.tau[i] = float(b)
        if i in self.structure.weight:
            self.structure.scale_tau(i, b)

    def insert_row(self, pairs, g=1.0, tau=0.0):
        """Append a row to ``A`` and to the structure; returns its id."""
        tail, head, eta, gain = reduce_row(pairs, self.n_cols)
        i = self.a.insert_row(pairs)
        self.g = np.concatenate([self.g, np.zeros(i + 1 - self.g.shape[0])])
        self.tau = np.concatenate([self.tau, np.zeros(i + 1 - self.tau.shape[0])])
        self._gain = np.concatenate([self._gain, np.zeros(i + 1 - self._gain.shape[0])])
        self._gain[i] = gain
        self._edge[i] = (tail, head, eta)
        self.tau[i] = float(tau)
        self._set_weight(i, g)
        return i

    def delete_row(self, i):
        self._check_row(i)
        if i in self.structure.weight:
            self.structure.delete(i)
        self.a.delete_row(i)
        self.g[i] = 0.0
        del self._edge[i]

    def values(self, h):
        """Exact ``G A h`` over all rows."""
        return self.g * self.a.matvec(h)

    def counter_summary(self):
        return self.structure.counter_summary()


class HeavyHitter(_ReducedStructure):
    """Rows ``i`` with ``|g_i (A h)_i| >= eps`` for a two-sparse ``A``.

    Args:
        a: TwoSparseMatrix; rows may be inserted and deleted later.
        g: nonnegative row weights, all ones by default.
        params: HhParameters for every expander part.
        rng: numpy Generator or seed.
    """

    def __init__(self, a, g=None, params=None, rng=None):
        super(HeavyHitter, self).__init__(a, g=g, params=params, rng=rng)

    def scale(self, i, b):
        """Set ``g_i <- b``."""
        i = int(i)
        self._check_row(i)
        self._set_weight(i, b)

    def query_heavy(self, h, eps):
        if eps <= 0:
            raise ContractViolation("Heavy hitter threshold must be positive, got {0}.".format(eps))
        if self.structure.n_edges == 0:
            return np.zeros(0, dtype=np.int64)
        return self.structure.query_heavy(self.reduction.lift(h), eps)


class HeavySampler(_ReducedStructure):
    """Random diagonal ``R`` over the rows of a two-sparse ``A`` for ``delta = G A h``.

    Row ``i`` enters with probability at least
    ``min(1, C1 (m / sqrt(n)) delta_i^2 / |delta|^2 + C2 / sqrt(n) + C3 tau_i)``
    up to the norm estimate, and ``E[R] = I`` on rows with positive weight.

    Args:
        a: TwoSparseMatrix.
        g: nonnegative row weights.
        tau: nonnegative leverage overestimates, one per row.
        constants: ``(C0, C1, C2, C3)`` used when :meth:`sample` is called without them.
    """

    def __init__(self, a, g=None, tau=None, params=None, rng=None, constants=(1.0, 1.0, 1.0, 1.0)):
        super(HeavySampler, self).__init__(a, g=g, tau=tau, params=params, rng=rng)
        if len(constants) != 4 or min(constants) < 0:
            raise ContractViolation("Sampling constants must be four nonnegative numbers.")
        self.constants = tuple(float(c) for c in constants)

    def scale(self, i, a_value, b):
        """Set ``g_i <- a_value`` and ``tau_i <- b``."""
        i = int(i)
        self._check_row(i)
        self._set_tau(i, b)
        self._set_weight(i, a_value)

    def sample(self, h, constants=None):
        c0, c1, c2, c3 = self.constants if constants is None else constants
        if self.structure.n_edges == 0:
            return SampledDiagonal.empty()
        return self.structure.sample(self.reduction.lift(h), c0, c1, c2, c3)

    def probabilities(self):
        """Per-row ``p_i`` of the last sample as a dense vector (zero for rows outside the structure)."""
        p = np.zeros(self.a.n_rows)
        last = self.structure.last_probabilities
        if last is not None:
            ids, probs = last
            p[ids] = probs
        return p

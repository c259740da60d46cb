import numpy as np

from src.core.graph import LossyGraph
from src.utils.exceptions import ContractViolation

__all__ = [
    'TwoSparseReduction',
    'reduce_row',
    'two_sparse_reduce'
]


def reduce_row(pairs, n_cols):
    """Rewrite one two-sparse row as ``gain * (1_head - eta 1_tail)`` over the
    doubled column space, so that ``row . h == gain * (1_head - eta 1_tail) . [h; -h]``.

    Entries of equal sign move the second one to its mirror column, a single
    entry is split in half between its column and the mirror.

    Returns:
        (tail, head, eta, gain) with ``eta >= 1``.
    """
    pairs = [(int(j), float(v)) for j, v in pairs if v != 0.0]
    if not pairs:
        raise ContractViolation("A zero row has no edge in the lossy reduction.")

    if len(pairs) == 1:
        j, alpha = pairs[0]
        lifted = [(j, alpha / 2.0), (n_cols + j, -alpha / 2.0)]
    else:
        (i, alpha), (j, beta) = pairs
        if (alpha > 0) == (beta > 0):
            lifted = [(i, alpha), (n_cols + j, -beta)]
        else:
            lifted = [(i, alpha), (j, beta)]

    (pos_col, p), (neg_col, q) = sorted(lifted, key=lambda x: -x[1])
    q = -q

    if q >= p:
        return neg_col, pos_col, q / p, p
    return pos_col, neg_col, p / q, -q


class TwoSparseReduction(object):
    """Lossy-graph form of a two-sparse matrix ``A``: ``A h = G B [h; -h]``.

    Vertices are the ``2n`` doubled columns; edge ``k`` stands for live row
    ``row_ids[k]`` of ``A`` and ``gain[k]`` is its signed scale.
    """

    def __init__(self, n_cols, row_ids, tails, heads, eta, gain):
        self.n_cols = int(n_cols)
        self.row_ids = np.asarray(row_ids, dtype=np.int64)
        self.tails = np.asarray(tails, dtype=np.int64)
        self.heads = np.asarray(heads, dtype=np.int64)
        self.eta = np.asarray(eta, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)

    @property
    def n_vertices(self):
        return 2 * self.n_cols

    @property
    def n_edges(self):
        return self.row_ids.shape[0]

    def lift(self, h):
        h = np.asarray(h, dtype=np.float64).reshape(-1)
        if h.shape[0] != self.n_cols:
            raise ContractViolation("Vector of length {0} given, {1} columns expected.".format(h.shape[0], self.n_cols))
        return np.concatenate([h, -h])

    def graph(self, weights=None):
        """LossyGraph over the doubled columns with weights ``|gain| * weights``."""
        w = np.abs(self.gain)
        if weights is not None:
            w = w * np.asarray(weights, dtype=np.float64)
        return LossyGraph(self.n_vertices, self.tails, self.heads, eta=self.eta, weight=w)

    def apply(self, h):
        """``G B [h; -h]`` for the live rows, in ``row_ids`` order."""
        y = self.lift(h)
        return self.gain * (y[self.heads] - self.eta * y[self.tails])

    def mirrored_cover(self, weights=None):
        """Every edge together with its copy shifted by ``n`` columns, weighted ``w_e gain_e^2``.

        The lossy Laplacian ``K`` of the cover satisfies
        ``A^T W A = P^T K P / 2`` with ``P = [I; -I]``, so ``A^T W A x = b``
        is solved by ``x = restrict(y)`` for any ``y`` with ``K y = [b; -b]``.
        """
        w = self.gain ** 2
        if weights is not None:
            w = w * np.asarray(weights, dtype=np.float64)
        n2 = self.n_vertices
        tails = np.concatenate([self.tails, (self.tails + self.n_cols) % n2])
        heads = np.concatenate([self.heads, (self.heads + self.n_cols) % n2])
        return LossyGraph(n2, tails, heads, eta=np.concatenate([self.eta, self.eta]),
                          weight=np.concatenate([w, w]))

    def restrict(self, y):
        y = np.asarray(y, dtype=np.float64)
        return 0.5 * (y[:self.n_cols] - y[self.n_cols:])

    def magnitude_bounds(self):
        """``(max eta, max(|G|, 1/|G|))`` over the edges."""
        if self.n_edges == 0:
            return 1.0, 1.0
        g = np.abs(self.gain)
        return float(self.eta.max()), float(max(g.max(), (1.0 / g).max()))

    def __repr__(self):
        return "TwoSparseReduction(n={0}, m={1})".format(self.n_cols, self.n_edges)


def two_sparse_reduce(a):
    """Lossy-graph form of every live row of the TwoSparseMatrix ``a``."""
    n = a.n_cols
    rows = a.alive_rows()
    out = np.zeros((rows.shape[0], 4))
    for k, i in enumerate(rows):
        try:
            out[k] = reduce_row(a.row(int(i)), n)
        except ContractViolation:
            raise ContractViolation("Row {0} is zero and has no edge in the lossy reduction.".format(int(i)))
    return TwoSparseReduction(n, rows, out[:, 0].astype(np.int64), out[:, 1].astype(np.int64), out[:, 2], out[:, 3])

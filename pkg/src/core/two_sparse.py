import numpy as np
import scipy.sparse as sp

from src.utils.exceptions import ContractViolation

__all__ = [
    'TwoSparseMatrix',
    'matvec',
    'magnitude_bound'
]


class TwoSparseMatrix(object):
    """Row-sparse matrix with at most two nonzeros per row.

    Rows keep their id for their whole life: deleted rows leave a hole which
    reads as an all-zero row, so ids handed out by :meth:`insert_row` stay valid.
    """

    def __init__(self, n_cols, rows=None):

        self.n_cols = int(n_cols)

        capacity = max(4, len(rows) if rows is not None else 0)
        self._cols = np.full((capacity, 2), -1, dtype=np.int64)
        self._vals = np.zeros((capacity, 2))
        self._alive = np.zeros(capacity, dtype=bool)
        self._n_rows = 0

        if rows is not None:
            for pairs in rows:
                self.insert_row(pairs)

    @classmethod
    def from_dense(cls, a):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        rows = []
        for i in range(a.shape[0]):
            nz = np.nonzero(a[i])[0]
            rows.append([(int(j), float(a[i, j])) for j in nz])
        return cls(a.shape[1], rows)

    def _grow(self):
        capacity = 2 * self._cols.shape[0]
        cols = np.full((capacity, 2), -1, dtype=np.int64)
        vals = np.zeros((capacity, 2))
        alive = np.zeros(capacity, dtype=bool)
        cols[:self._n_rows] = self._cols[:self._n_rows]
        vals[:self._n_rows] = self._vals[:self._n_rows]
        alive[:self._n_rows] = self._alive[:self._n_rows]
        self._cols, self._vals, self._alive = cols, vals, alive

    def insert_row(self, pairs):
        pairs = [(int(j), float(v)) for j, v in pairs]

        if len(pairs) > 2:
            raise ContractViolation("A two-sparse row holds at most 2 entries, got {0}.".format(len(pairs)))
        if len(pairs) == 2 and pairs[0][0] == pairs[1][0]:
            raise ContractViolation("Duplicate column {0} in row.".format(pairs[0][0]))
        for j, v in pairs:
            if not 0 <= j < self.n_cols:
                raise ContractViolation("Column {0} outside of [0, {1}).".format(j, self.n_cols))
            if v == 0.0 or not np.isfinite(v):
                raise ContractViolation("Stored entries must be finite and nonzero, got {0}.".format(v))

        if self._n_rows == self._cols.shape[0]:
            self._grow()

        i = self._n_rows
        for k, (j, v) in enumerate(pairs):
            self._cols[i, k] = j
            self._vals[i, k] = v
        self._alive[i] = True
        self._n_rows += 1

        return i

    def _check_alive(self, i):
        if not (0 <= i < self._n_rows) or not self._alive[i]:
            raise ContractViolation("Row {0} is not a live row.".format(i))

    def delete_row(self, i):
        self._check_alive(i)
        self._alive[i] = False
        self._cols[i] = -1
        self._vals[i] = 0.0

    def scale_row(self, i, factor):
        self._check_alive(i)
        if factor == 0.0 or not np.isfinite(factor):
            raise ContractViolation("Row scale must be finite and nonzero.")
        self._vals[i] *= factor

    def row(self, i):
        self._check_alive(i)
        return [(int(self._cols[i, k]), float(self._vals[i, k])) for k in range(2) if self._cols[i, k] >= 0]

    def is_alive(self, i):
        return 0 <= i < self._n_rows and bool(self._alive[i])

    @property
    def n_rows(self):
        return self._n_rows

    @property
    def shape(self):
        return self._n_rows, self.n_cols

    def alive_rows(self):
        return np.nonzero(self._alive[:self._n_rows])[0]

    def entries(self):
        """(cols, vals) arrays of shape (n_rows, 2); absent entries have col -1 and value 0."""
        return self._cols[:self._n_rows], self._vals[:self._n_rows]

    def matvec(self, h):
        h = np.asarray(h, dtype=np.float64).reshape(-1)
        if h.shape[0] != self.n_cols:
            raise ContractViolation("Vector of length {0} given, {1} columns expected.".format(h.shape[0], self.n_cols))
        cols, vals = self.entries()
        safe = np.where(cols >= 0, cols, 0)
        if self.n_cols == 0:
            return np.zeros(self._n_rows)
        return (vals * h[safe]).sum(axis=1)

    def rmatvec(self, y):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        cols, vals = self.entries()
        out = np.zeros(self.n_cols)
        mask = cols >= 0
        np.add.at(out, cols[mask], (vals * y[:, None])[mask])
        return out

    def to_csr(self):
        cols, vals = self.entries()
        mask = cols >= 0
        rows = np.repeat(np.arange(self._n_rows), 2).reshape(-1, 2)
        return sp.csr_matrix((vals[mask], (rows[mask], cols[mask])), shape=(self._n_rows, self.n_cols))

    def to_dense(self):
        return self.to_csr().toarray()

    def gram(self, weights=None):
        """``A^T diag(weights) A`` as a sparse matrix."""
        a = self.to_csr()
        if weights is None:
            return (a.T @ a).tocsr()
        return (a.T @ sp.diags(np.asarray(weights, dtype=np.float64)) @ a).tocsr()

    def magnitude_bound(self):
        _, vals = self.entries()
        nz = np.abs(vals[vals != 0.0])
        if nz.size == 0:
            # all-zero matrix
            return 1.0
        return float(max(nz.max(), (1.0 / nz).max()))

    def compacted(self):
        """Copy without holes, together with the old ids of the kept rows."""
        ids = self.alive_rows()
        out = TwoSparseMatrix(self.n_cols, [self.row(i) for i in ids])
        return out, ids

    def copy(self):
        out = TwoSparseMatrix(self.n_cols)
        out._cols = self._cols.copy()
        out._vals = self._vals.copy()
        out._alive = self._alive.copy()
        out._n_rows = self._n_rows
        return out

    def __repr__(self):
        return "TwoSparseMatrix({0}x{1}, live={2})".format(self._n_rows, self.n_cols, int(self._alive.sum()))


def matvec(a, h):
    return a.matvec(h)


def magnitude_bound(a):
    return a.magnitude_bound()

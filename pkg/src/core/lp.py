import numpy as np
import scipy.linalg

from src.utils.exceptions import ContractViolation, InfeasibleError
from src.utils.logging import DEBUG
from .two_sparse import TwoSparseMatrix

__all__ = [
    'LpInstance',
    'FixedVariables',
    'eliminate_fixed',
    'independent_constraints'
]


def _vector(x, size, name):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != size:
        raise ContractViolation("'{0}' has {1} entries, {2} expected.".format(name, x.shape[0], size))
    if not np.all(np.isfinite(x)):
        raise ContractViolation("'{0}' has non-finite entries.".format(name))
    return x


class LpInstance(object):
    """``min c^T x  s.t.  A^T x = b,  lower <= x <= upper`` with two-sparse ``A`` (m x n)."""

    def __init__(self, a, b, c, lower, upper):

        if not isinstance(a, TwoSparseMatrix):
            raise ContractViolation("Constraint matrix must be a TwoSparseMatrix.")

        if a.alive_rows().shape[0] != a.n_rows:
            a, _ = a.compacted()

        self.a = a
        m, n = a.shape

        self.b = _vector(b, n, "b")
        self.c = _vector(c, m, "c")
        self.lower = _vector(lower, m, "lower")
        self.upper = _vector(upper, m, "upper")

        bad = np.nonzero(~(self.lower < self.upper))[0]
        if bad.size:
            raise ContractViolation("lower < upper violated at variable {0} ({1} >= {2}); "
                                    "fixed variables must be eliminated first."
                                    .format(int(bad[0]), self.lower[bad[0]], self.upper[bad[0]]))

    @property
    def m(self):
        return self.a.n_rows

    @property
    def n(self):
        return self.a.n_cols

    def magnitude_bound(self):
        width = self.upper - self.lower
        parts = [self.a.magnitude_bound(), 1.0]
        for v in (self.c, self.b, self.upper, self.lower):
            if v.size:
                parts.append(np.abs(v).max())
        if width.size:
            parts.append(width.max() / width.min())
        return float(max(parts))

    def objective(self, x):
        return float(self.c @ x)

    def residual(self, x):
        """``A^T x - b``."""
        return self.a.rmatvec(x) - self.b


class FixedVariables(object):
    """Bookkeeping for variables with ``lower == upper`` removed at ingestion."""

    def __init__(self, m_full, free, values):
        self.m_full = m_full
        self.free = free
        self.values = values

    @property
    def n_fixed(self):
        return self.m_full - self.free.shape[0]

    def expand(self, x_free):
        x = np.array(self.values, dtype=np.float64)
        x[self.free] = x_free
        return x


def eliminate_fixed(rows, n_cols, b, c, lower, upper):
    """Build an :class:`LpInstance` from raw data, substituting variables with ``lower == upper``.

    Returns:
        (LpInstance, FixedVariables, objective offset)
    """
    a_full = TwoSparseMatrix(n_cols, rows)
    m = a_full.n_rows

    c = _vector(c, m, "c")
    lower = _vector(lower, m, "lower")
    upper = _vector(upper, m, "upper")
    b = _vector(b, n_cols, "b")

    if np.any(lower > upper):
        i = int(np.nonzero(lower > upper)[0][0])
        raise ContractViolation("Empty box at variable {0} ({1} > {2}).".format(i, lower[i], upper[i]))

    fixed = lower == upper
    values = np.where(fixed, lower, 0.0)
    free = np.nonzero(~fixed)[0]

    b_free = b - a_full.rmatvec(values)
    offset = float(c[fixed] @ lower[fixed])

    a = TwoSparseMatrix(n_cols, [a_full.row(i) for i in free])
    inst = LpInstance(a, b_free, c[free], lower[free], upper[free])

    return inst, FixedVariables(m, free, values), offset


def independent_constraints(inst, tol=1e-10):
    """Drop constraint columns of ``A`` that are linear combinations of the others.

    The kept columns are the leading pivots of a column-pivoted QR of ``A``.
    A dropped column ``a_j = A_keep w`` is consistent when ``b_j = w^T b_keep``.

    Returns:
        (LpInstance over the kept columns, kept column ids)

    Raises:
        InfeasibleError: when ``b`` contradicts one of the dropped columns,
            so that ``A^T x = b`` has no solution at all.
    """
    n = inst.n
    if n == 0 or inst.m == 0:
        return inst, np.arange(n)

    a = inst.a.to_dense()
    _, r, piv = scipy.linalg.qr(a, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int((diag > tol * max(diag.max(), 1e-300)).sum()) if diag.size else 0
    if rank == n:
        return inst, np.arange(n)

    keep, drop = np.sort(piv[:rank]), np.sort(piv[rank:])
    if rank:
        w = scipy.linalg.lstsq(a[:, keep], a[:, drop])[0]
        implied = w.T @ inst.b[keep]
    else:
        implied = np.zeros(drop.shape[0])

    mismatch = np.abs(inst.b[drop] - implied)
    b_scale = 1.0 + float(np.abs(inst.b).max())
    k = int(np.argmax(mismatch))
    if mismatch[k] > 1e-8 * b_scale:
        raise InfeasibleError("Constraint column {0} depends on the others but b disagrees by {1:.3e}."
                              .format(int(drop[k]), float(mismatch[k])),
                              report={"rank": rank, "column": int(drop[k]), "mismatch": float(mismatch[k])})

    column = np.full(n, -1, dtype=np.int64)
    column[keep] = np.arange(rank)
    rows = [[(int(column[j]), v) for j, v in inst.a.row(i) if column[j] >= 0] for i in range(inst.m)]
    DEBUG(lambda: "independent_constraints: rank {0} of {1}, dropped {2}".format(rank, n, drop.tolist()))
    return LpInstance(TwoSparseMatrix(rank, rows), inst.b[keep], inst.c, inst.lower, inst.upper), keep

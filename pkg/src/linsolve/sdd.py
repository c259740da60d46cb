from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.core.graph import LossyLaplacianView
from src.core.two_sparse import TwoSparseMatrix
from src.hh.reduction import two_sparse_reduce
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG, WARN

__all__ = [
    'SolveReport',
    'sdd_violation',
    'is_sdd',
    'mmatrix_scale',
    'sdd_solve',
    'solve_two_sparse_gram'
]


class SolveReport(NamedTuple):
    x: np.ndarray
    residual: float  # ||M x - b|| / ||b||
    n_iter: int
    converged: bool


def _as_csr(m):
    if sp.issparse(m):
        return m.tocsr().astype(np.float64)
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    return sp.csr_matrix(m)


def sdd_violation(m):
    """Largest ``sum_{j != i} |M_ij| - M_ii`` over the rows, relative to ``||M||_inf``."""
    m = _as_csr(m)
    if m.shape[0] == 0:
        return 0.0
    diag = m.diagonal()
    row_abs = np.asarray(abs(m).sum(axis=1)).reshape(-1)
    off = row_abs - np.abs(diag)
    scale = max(row_abs.max(), 1e-300)
    return float(((off - diag) / scale).max())


def is_sdd(m, tol=1e-9):
    """Rowwise ``M_ii >= sum_{j != i} |M_ij| - tol ||M||_inf``."""
    return sdd_violation(m) <= tol


def _relative_residual(m, x, b):
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return float(np.linalg.norm(m @ x))
    return float(np.linalg.norm(m @ x - b) / norm_b)


def _preconditioner(m, kind):
    n = m.shape[0]
    if kind == "ilu":
        try:
            ilu = spla.spilu(m.tocsc(), drop_tol=1e-4, fill_factor=10)
            return spla.LinearOperator((n, n), matvec=ilu.solve)
        except RuntimeError:
            DEBUG("sdd_solve: incomplete factorization failed, using the diagonal")
    elif kind != "jacobi":
        raise ContractViolation("Invalid preconditioner '{}' provided. Use 'jacobi' or 'ilu'.".format(kind))
    d = m.diagonal()
    inv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    return spla.LinearOperator((n, n), matvec=lambda r: inv * r)


def sdd_solve(m, b, eps=1e-10, max_iter=None, preconditioner="jacobi", x0=None):
    """Preconditioned conjugate gradient on a symmetric positive semidefinite ``M``.

    Stops at relative residual ``eps``; at the iteration cap the last iterate
    is returned with ``converged=False``. ``b`` must lie in the range of ``M``.
    """
    m = _as_csr(m)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    n = m.shape[0]
    if b.shape[0] != n:
        raise ContractViolation("Right-hand side has {0} entries, {1} expected.".format(b.shape[0], n))

    if n == 0 or not np.any(b):
        return SolveReport(np.zeros(n), 0.0, 0, True)

    if max_iter is None:
        max_iter = 10 * n

    count = [0]

    def _callback(_):
        count[0] += 1

    x, _ = spla.cg(m, b, x0=x0, rtol=eps, atol=0.0, maxiter=max_iter,
                   M=_preconditioner(m, preconditioner), callback=_callback)

    residual = _relative_residual(m, x, b)
    converged = residual <= eps * 1.01
    if not converged:
        DEBUG(lambda: "sdd_solve: residual {0:.3e} after {1} iterations".format(residual, count[0]))
    return SolveReport(x, residual, count[0], converged)


def mmatrix_scale(m, mu=None, tol=1e-12, max_iter=None):
    """Positive diagonal ``z`` with ``diag(z) M diag(z)`` diagonally dominant.

    Solves ``(M + mu I) z = 1`` with ``mu = 1e-12 trace(M) / n``; ``M z >= 0``
    then holds rowwise and is the dominance condition of the scaled matrix.
    Off-diagonal entries must be nonpositive.
    """
    m = _as_csr(m)
    n = m.shape[0]
    if n == 0:
        return np.zeros(0)

    off = (m - sp.diags(m.diagonal())).tocoo()
    scale = max(np.abs(m.data).max() if m.nnz else 0.0, 1e-300)
    pos = off.data > 1e-12 * scale
    if pos.any():
        k = int(np.nonzero(pos)[0][0])
        raise ContractViolation("Not an M-matrix: positive off-diagonal entry at ({0}, {1}); "
                                "reduce two-sparse systems to lossy-incidence form first."
                                .format(int(off.row[k]), int(off.col[k])),
                                witness=(int(off.row[k]), int(off.col[k])))

    if mu is None:
        mu = 1e-12 * max(m.diagonal().sum(), 1e-300) / n
    shifted = (m + mu * sp.identity(n, format="csr")).tocsr()
    ones = np.ones(n)

    report = sdd_solve(shifted, ones, eps=tol, max_iter=max_iter)
    z = report.x
    if not report.converged or z.min() <= 0:
        DEBUG("mmatrix_scale: falling back to a direct solve")
        z = spla.spsolve(shifted.tocsc(), ones)
    if not np.all(np.isfinite(z)) or z.min() <= 0:
        raise ContractViolation("No positive scaling found; the matrix is not a nonsingular M-matrix.")
    return z


def _dense_gram_solve(g, rhs):
    try:
        factor = scipy.linalg.cho_factor(g)
        return scipy.linalg.cho_solve(factor, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        DEBUG("solve_two_sparse_gram: Cholesky failed, using least squares")
        return scipy.linalg.lstsq(g, rhs)[0]


def solve_two_sparse_gram(a, weights, rhs, eps=1e-12, dense_limit=500, max_iter=None):
    """Solve ``A^T diag(weights) A x = rhs`` for a two-sparse ``A``.

    Up to ``dense_limit`` columns the Gram matrix is factored densely. Above it
    the system goes through the mirrored cover of the lossy reduction of
    ``A``, whose lossy Laplacian ``K`` is an M-matrix: ``K`` is scaled to
    diagonal dominance by :func:`mmatrix_scale` and solved by :func:`sdd_solve`.
    """
    rhs = np.asarray(rhs, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    n = a.n_cols

    if n == 0:
        return SolveReport(np.zeros(0), 0.0, 0, True)

    if n <= dense_limit:
        g = a.gram(weights).toarray()
        x = _dense_gram_solve(g, rhs)
        return SolveReport(x, _relative_residual(g, x, rhs), 1, True)

    nonzero = [i for i in a.alive_rows() if a.row(int(i))]
    reduced = TwoSparseMatrix(n, [a.row(int(i)) for i in nonzero])
    reduction = two_sparse_reduce(reduced)
    cover = reduction.mirrored_cover(weights[np.asarray(nonzero, dtype=np.int64)][reduction.row_ids])
    k = LossyLaplacianView(cover).L
    target = np.concatenate([rhs, -rhs])

    z = mmatrix_scale(k)
    scaled = (sp.diags(z) @ k @ sp.diags(z)).tocsr()
    if is_sdd(scaled):
        report = sdd_solve(scaled, z * target, eps=eps, max_iter=max_iter)
        y = z * report.x
    else:
        WARN("solve_two_sparse_gram: scaled cover is not diagonally dominant "
             "(violation {0:.3e}), solving unscaled".format(sdd_violation(scaled)))
        report = sdd_solve(k, target, eps=eps, max_iter=max_iter)
        y = report.x

    x = reduction.restrict(y)
    g = a.gram(weights)
    return SolveReport(x, _relative_residual(g, x, rhs), report.n_iter, report.converged)

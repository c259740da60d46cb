import math
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.core.two_sparse import TwoSparseMatrix
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG, WARN

__all__ = [
    'LewisWeights',
    'as_dense',
    'leverage_scores',
    'lewis_exponent',
    'lewis_weights'
]


class LewisWeights(NamedTuple):
    weights: np.ndarray
    n_iter: int
    converged: bool
    change: float  # relative change of one more undamped iteration


def as_dense(a):
    """Dense float copy of a TwoSparseMatrix, a scipy sparse matrix or an array."""
    if isinstance(a, TwoSparseMatrix):
        return a.to_dense()
    if sp.issparse(a):
        return a.toarray()
    return np.atleast_2d(np.asarray(a, dtype=np.float64))


def _scores(a, rank_tol, strict=True):
    m, n = a.shape
    if n == 0:
        return np.zeros(m)
    if strict and m < n:
        raise ContractViolation("A {0}x{1} matrix cannot have full column rank.".format(m, n))

    u, s, vt = scipy.linalg.svd(a, full_matrices=False)
    full_rank = s.size == n and s[0] > 0.0 and s[-1] > rank_tol * s[0]
    if full_rank:
        return np.minimum((u ** 2).sum(axis=1), 1.0)
    if strict:
        raise ContractViolation("Weighted matrix is rank deficient (sigma_min/sigma_max = {0:.3e})."
                                .format(s[-1] / s[0] if s[0] else 0.0), witness=vt[-1])

    # leverage over the numerical column space
    kept = s > rank_tol * s[0] if s.size else np.zeros(0, dtype=bool)
    return np.minimum((u[:, kept] ** 2).sum(axis=1), 1.0)


def leverage_scores(a, weights=None, rank_tol=1e-12):
    """``sigma_i = (W^{1/2} A (A^T W A)^{-1} A^T W^{1/2})_{ii}`` by a thin SVD.

    Raises ContractViolation with a null-space vector as ``witness`` when the
    weighted matrix does not have full column rank.
    """
    a = as_dense(a)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != a.shape[0] or (weights.size and weights.min() < 0):
            raise ContractViolation("Leverage weights must be {0} nonnegative numbers.".format(a.shape[0]))
        a = a * np.sqrt(weights)[:, None]
    return _scores(a, rank_tol)


def lewis_exponent(m, n):
    """``p = 1 - 1 / (4 log(4m/n))``."""
    if n == 0:
        return 1.0
    return 1.0 - 1.0 / (4.0 * math.log(4.0 * m / n))


def lewis_weights(a, hessian=None, p=None, tol=1e-8, max_iter=500, w0=None):
    """Regularized l_p Lewis weights ``w = sigma(W^{1/2 - 1/p} A') + n/m`` of
    ``A' = diag(hessian)^{-1/2} A``.

    The fixed point is found by iteration damped with the geometric mean of
    the old and new weights; plain iteration oscillates for ``p < 1``.
    ``w0`` warm starts it. Convergence is
    declared when one more undamped step moves every weight by at most ``tol``
    relative. Without constraint columns the weights are all ones. A rank
    deficient ``A'`` (a collapsed Hessian or dependent columns) gets leverage
    scores over its numerical column space instead of an error.
    """
    a = as_dense(a)
    m, n = a.shape

    if hessian is not None:
        hessian = np.asarray(hessian, dtype=np.float64).reshape(-1)
        if hessian.shape[0] != m or (m and hessian.min() <= 0):
            raise ContractViolation("Barrier Hessian must be {0} positive numbers.".format(m))
        a = a / np.sqrt(hessian)[:, None]

    if n == 0 or m == 0:
        return LewisWeights(np.ones(m), 0, True, 0.0)

    if p is None:
        p = lewis_exponent(m, n)
    exponent = 0.5 - 1.0 / p
    reg = n / m

    w = np.full(m, (n + reg * m) / m) if w0 is None else np.maximum(np.asarray(w0, dtype=np.float64), reg)
    change = np.inf
    for it in range(1, max_iter + 1):
        target = _scores(a * (w ** exponent)[:, None], rank_tol=1e-14, strict=False) + reg
        change = float(np.abs(target / w - 1.0).max())
        if change <= tol:
            DEBUG(lambda: "lewis_weights: converged in {0} iterations (p={1:.4f})".format(it, p))
            return LewisWeights(target, it, True, change)
        w = np.sqrt(w * target)

    WARN("lewis_weights: no fixed point within {0} iterations (change {1:.3e}).".format(max_iter, change))
    return LewisWeights(w, max_iter, False, change)

import numpy as np

from src.core.two_sparse import TwoSparseMatrix
from .report import OracleReport, digest

__all__ = [
    'exact_heavy_set',
    'check_heavy'
]


def exact_heavy_set(a, h, eps, g=None):
    """``{i : |g_i (A h)_i| >= eps}`` by a full dense scan."""
    dense = a.to_dense() if isinstance(a, TwoSparseMatrix) else np.atleast_2d(np.asarray(a, dtype=np.float64))
    values = dense @ np.asarray(h, dtype=np.float64)
    if g is not None:
        values = values * np.asarray(g, dtype=np.float64)
    return np.nonzero(np.abs(values) >= eps)[0]


def check_heavy(answer, a, h, eps, g=None):
    """Compare a heavy-hitter answer with :func:`exact_heavy_set`."""
    exact = exact_heavy_set(a, h, eps, g=g)
    answer = np.unique(np.asarray(answer, dtype=np.int64))
    missing = np.setdiff1d(exact, answer)
    extra = np.setdiff1d(answer, exact)
    return OracleReport("exact_heavy_set", digest(h, eps), exact, 0.0,
                        missing.size == 0 and extra.size == 0,
                        details={"missing": missing, "extra": extra})

from typing import NamedTuple

import numpy as np

from src.utils.exceptions import ContractViolation

__all__ = [
    'BarrierValues',
    'barrier_eval'
]


class BarrierValues(NamedTuple):
    phi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def barrier_eval(x, lower, upper):
    """Log barrier ``phi_i = -log(x_i - l_i) - log(u_i - x_i)`` and its first two derivatives."""
    x = np.asarray(x, dtype=np.float64)
    lo = x - np.asarray(lower, dtype=np.float64)
    hi = np.asarray(upper, dtype=np.float64) - x

    if x.size and (lo.min() <= 0 or hi.min() <= 0):
        i = int(np.argmin(np.minimum(lo, hi)))
        raise ContractViolation("Point touches its box at coordinate {0} (x={1}, box=[{2}, {3}])."
                                .format(i, x[i], x[i] - lo[i], x[i] + hi[i]))

    return BarrierValues(-np.log(lo) - np.log(hi),
                         1.0 / hi - 1.0 / lo,
                         1.0 / lo ** 2 + 1.0 / hi ** 2)

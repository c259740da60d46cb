from typing import NamedTuple

import numpy as np

from src.linsolve.sdd import solve_two_sparse_gram
from src.utils.exceptions import ConvergenceError
from src.utils.logging import INFO

__all__ = [
    'FinalPoint',
    'duality_lower_bound',
    'final_point'
]


class FinalPoint(NamedTuple):
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    residual: float  # ||A^T x - b||_inf
    objective: float
    lower_bound: float
    gap: float
    gap_constant: float  # gap / (n mu)


def duality_lower_bound(lp, z):
    """``b^T z + sum_i min(s_i l_i, s_i u_i)`` with ``s = c - A z``; a lower bound on the LP optimum."""
    s = lp.c - (lp.a.matvec(z) if lp.n else 0.0)
    return float(lp.b @ z + np.minimum(s * lp.lower, s * lp.upper).sum())


def final_point(lp, pt, tol=1e-9, dense_limit=500, fraction_to_boundary=0.99):
    """Project a centered point onto ``A^T x = b`` and certify its duality gap.

    The correction ``dx = H^{-1} A (A^T H^{-1} A)^{-1} (b - A^T x)`` uses the
    barrier scaling ``H = mu T Phi''`` of the point. The dual slack is kept, so
    ``s = c - A z`` still holds. When the correction would leave the box it is
    damped, and the call fails if the residual then stays above ``tol``.
    """
    x = pt.x.copy()
    r = -lp.residual(x)
    b_scale = 1.0 + (float(np.abs(lp.b).max()) if lp.n else 0.0)

    if lp.n and np.abs(r).max() > 0:
        h_inv = 1.0 / (pt.mu * pt.tau * pt.hess)
        y = solve_two_sparse_gram(lp.a, h_inv, r, dense_limit=dense_limit).x
        dx = h_inv * lp.a.matvec(y)

        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(dx > 0, (lp.upper - x) / dx, np.inf)
            down = np.where(dx < 0, (lp.lower - x) / dx, np.inf)
        alpha_max = float(min(up.min(), down.min()))
        alpha = 1.0 if alpha_max > 1.0 else fraction_to_boundary * alpha_max
        x = np.clip(x + alpha * dx, lp.lower, lp.upper)

    residual = float(np.abs(lp.residual(x)).max()) if lp.n else 0.0
    if residual > tol * b_scale:
        raise ConvergenceError("Final projection left residual {0:.3e} (allowed {1:.3e}).".format(
            residual, tol * b_scale))

    objective = float(lp.c @ x)
    lower = duality_lower_bound(lp, pt.z)
    gap = max(objective - lower, 0.0)
    constant = gap / (max(lp.n, 1) * pt.mu)

    INFO("final_point: objective {0:.9g}, gap {1:.3e} = {2:.2f} n mu".format(objective, gap, constant))
    return FinalPoint(x, pt.s.copy(), pt.z.copy(), residual, objective, lower, gap, constant)

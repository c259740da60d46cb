import math
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import torch
import torch.nn.functional as F

from src.utils.common_utils import torch_generator
from src.utils.exceptions import ContractViolation
from src.utils.logging import WARN, DEBUG
from .eigs import dense_eigs

__all__ = [
    'PowerResult',
    'LeastEigvec',
    'power_iteration',
    'least_eigvec',
    'normalized_operator'
]

_EPS = 1e-300


class PowerResult(NamedTuple):
    v: np.ndarray
    rayleigh: float
    n_iter: int
    converged: bool


class LeastEigvec(NamedTuple):
    v: np.ndarray
    rayleigh: float
    n_iter: int
    converged: bool
    precondition_ok: bool


def _to_operator(m, n=None):
    """Return (matvec on float64 torch vectors, dimension)."""
    if isinstance(m, torch.Tensor):
        mat = m.to(torch.float64)
        return (lambda x: torch.mv(mat, x)), mat.shape[0]

    if sp.issparse(m):
        coo = m.tocoo()
        mat = torch.sparse_coo_tensor(np.vstack([coo.row, coo.col]), coo.data,
                                      size=coo.shape, dtype=torch.float64).coalesce()
        return (lambda x: torch.sparse.mm(mat, x.unsqueeze(1)).squeeze(1)), coo.shape[0]

    if isinstance(m, np.ndarray):
        mat = torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64))
        return (lambda x: torch.mv(mat, x)), mat.shape[0]

    if callable(m):
        if n is None:
            raise ContractViolation("A callable operator needs its dimension 'n'.")
        return (lambda x: torch.from_numpy(np.asarray(m(x.numpy()), dtype=np.float64))), int(n)

    raise ContractViolation("Unsupported operator type {0}.".format(type(m)))


def _single_run(op, x0, max_iter, eps):
    v = F.normalize(x0, dim=0, eps=_EPS)
    rho = torch.zeros((), dtype=torch.float64)
    n_iter = 0
    converged = False

    while True:
        u = op(v)
        rho = torch.dot(v, u)
        residual = torch.linalg.norm(u - rho * v)
        if residual <= eps * torch.abs(rho) or torch.linalg.norm(u) == 0:
            converged = True
            break
        if n_iter >= max_iter:
            break
        v = F.normalize(u, dim=0, eps=_EPS)
        n_iter += 1

    return v, float(rho), n_iter, converged


def power_iteration(m, eps, seed=None, n=None, max_iter=None, restarts=3):
    """Top eigenvector of a PSD operator.

    Iterates from ``restarts`` independent random unit vectors and keeps the one
    with the largest Rayleigh quotient. A run stops once the residual
    ``||Mv - rho v||`` falls below ``eps * rho`` or after ``max_iter`` steps
    (default ``200 log(n/eps)``).

    Args:
        m: dense array, scipy sparse matrix, torch tensor, or a callable
            matvec together with ``n``.
        eps: relative accuracy.
        seed: numpy Generator or int for the start vectors.
    """
    op, dim = _to_operator(m, n)

    if dim == 0:
        return PowerResult(np.zeros(0), 0.0, 0, True)

    if eps <= 0:
        raise ContractViolation("Power iteration needs eps > 0, got {0}.".format(eps))

    if max_iter is None:
        max_iter = int(math.ceil(200 * max(1.0, math.log(dim / eps))))

    generator = torch_generator(seed)

    best = None
    for _ in range(max(1, restarts)):
        x0 = torch.rand(dim, generator=generator, dtype=torch.float64) * 2.0 - 1.0
        result = _single_run(op, x0, max_iter, eps)
        if best is None or result[1] > best[1]:
            best = result

    v, rho, n_iter, converged = best

    if not converged:
        WARN("Power iteration hit its cap of {0} steps (Rayleigh quotient {1:.6e}).".format(max_iter, rho))

    return PowerResult(v.numpy().copy(), rho, n_iter, converged)


def normalized_operator(view, d, eps_ad=0.0):
    """Sparse ``D^{-1/2} L_G D^{-1/2} + eps_ad I``."""
    d = np.asarray(d, dtype=np.float64)
    s = np.zeros_like(d)
    s[d > 0] = 1.0 / np.sqrt(d[d > 0])
    op = sp.diags(s) @ view.L @ sp.diags(s)
    if eps_ad:
        op = op + eps_ad * sp.identity(d.shape[0])
    return op.tocsr()


def least_eigvec(view, d, eps_ad, c=1.0, lambda2=None, seed=None, restarts=3, dense_limit=600):
    """Approximate bottom eigenvector of ``D^{-1/2} L_G D^{-1/2} + eps_ad I``.

    Runs power iteration on ``4I - M`` with accuracy ``eps_ad / 4``. ``lambda2``
    is (a lower bound on) the second eigenvalue of the smoothed normalized
    Laplacian; it sizes the iteration cap and is checked against the
    balance of the graph. When omitted it is computed densely for small graphs.
    """
    n = view.n_vertices
    mat = normalized_operator(view, d, eps_ad)

    beta = view.graph.balance()

    if lambda2 is None and n <= dense_limit:
        lambda2 = float(dense_eigs(view.N_smooth).values[1]) if n > 1 else 1.0

    precondition_ok = True
    if lambda2 is None:
        gap_factor = 1.0
    else:
        if lambda2 <= 0.0 or beta > lambda2 / (40.0 * c):
            precondition_ok = False
            WARN("Spectral gap precondition fails: beta={0:.3e}, lambda2(N)={1:.3e}, c={2}."
                 .format(beta, lambda2, c))
        gap_factor = max(1.0, 16.0 * c / lambda2) if lambda2 > 0 else 1e4

    eps = max(eps_ad / 4.0, 1e-14)
    max_iter = int(math.ceil(200.0 * max(1.0, math.log(max(n, 2) / eps)) * gap_factor))

    shifted = (4.0 * sp.identity(n) - mat).tocsr()
    result = power_iteration(shifted, eps, seed=seed, max_iter=max_iter, restarts=restarts)

    gershgorin = float(np.abs(mat).sum(axis=1).max()) if n else 0.0
    if gershgorin > 4.0:
        top = power_iteration(mat, 1e-6, seed=seed, restarts=1).rayleigh
        if top > 4.0 * (1.0 + 1e-9):
            raise ContractViolation("4I - M is not PSD (largest eigenvalue about {0:.6f}); "
                                    "the degree proxy is too small.".format(top))

    rayleigh = float(result.v @ (mat @ result.v))

    DEBUG(lambda: "least_eigvec: n={0}, iterations={1}, rayleigh={2:.3e}".format(n, result.n_iter, rayleigh))

    return LeastEigvec(result.v, rayleigh, result.n_iter, result.converged, precondition_ok)

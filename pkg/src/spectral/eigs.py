from typing import NamedTuple

import numpy as np

from src.utils.exceptions import ContractViolation
from src.utils.logging import WARN, DEBUG

__all__ = [
    'EigenPairs',
    'dense_eigs',
    'sign_normalize'
]


class EigenPairs(NamedTuple):
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns, unit norm
    n_sweeps: int


def _round_robin(n):
    """Pairings of [0, n) into rounds of disjoint pairs covering every pair once."""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.int64), np.array(q, dtype=np.int64)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def sign_normalize(vectors, tol=1e-12):
    """Flip columns so that their first nonzero coordinate is positive."""
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    single = vectors.ndim == 1
    if single:
        vectors = vectors[:, None]
    for k in range(vectors.shape[1]):
        nz = np.nonzero(np.abs(vectors[:, k]) > tol)[0]
        if nz.size and vectors[nz[0], k] < 0:
            vectors[:, k] = -vectors[:, k]
    return vectors[:, 0] if single else vectors


def dense_eigs(m, tol=1e-12, max_sweeps=100):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order, so that
    all rotations of a round act on disjoint index pairs and are applied together.
    Iteration stops once the off-diagonal Frobenius mass is at most
    ``tol * ||M||_F``.
    """
    a = np.array(m, dtype=np.float64, copy=True)

    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("dense_eigs expects a square matrix, got shape {0}.".format(a.shape))

    n = a.shape[0]
    if n == 0:
        return EigenPairs(np.zeros(0), np.zeros((0, 0)), 0)

    scale_inf = np.abs(a).sum(axis=1).max()
    if np.abs(a - a.T).max() > 1e-9 * max(scale_inf, 1e-300):
        raise ContractViolation("dense_eigs expects a symmetric matrix (asymmetry {0:.3e})."
                                .format(np.abs(a - a.T).max()))
    a = 0.5 * (a + a.T)

    v = np.eye(n)
    scale = np.linalg.norm(a)

    if scale == 0.0:
        return EigenPairs(np.zeros(n), v, 0)

    rounds = _round_robin(n)
    n_sweeps = 0
    converged = n == 1

    for n_sweeps in range(1, max_sweeps + 1):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            converged = True
            n_sweeps -= 1
            break

        for p, q in rounds:
            if p.size == 0:
                continue
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]

            active = np.abs(apq) > 1e-300
            safe_apq = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe_apq)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            col_p = a[:, p].copy()
            col_q = a[:, q].copy()
            a[:, p] = col_p * c - col_q * s
            a[:, q] = col_p * s + col_q * c

            row_p = a[p, :].copy()
            row_q = a[q, :].copy()
            a[p, :] = c[:, None] * row_p - s[:, None] * row_q
            a[q, :] = s[:, None] * row_p + c[:, None] * row_q

            a[p, q] = 0.0
            a[q, p] = 0.0

            vec_p = v[:, p].copy()
            vec_q = v[:, q].copy()
            v[:, p] = vec_p * c - vec_q * s
            v[:, q] = vec_p * s + vec_q * c
    else:
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        converged = off <= tol * scale

    if not converged:
        WARN("Jacobi eigensolver stopped after {0} sweeps without reaching tolerance {1:.1e}."
             .format(max_sweeps, tol))

    DEBUG(lambda: "Jacobi eigensolver: n={0}, sweeps={1}".format(n, n_sweeps))

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")

    return EigenPairs(values[order], sign_normalize(v[:, order]), n_sweeps)

import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.spectral.certificates import pencil_extremes
from src.utils.common_utils import as_generator
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG, WARN
from .sdd import SolveReport, solve_two_sparse_gram

__all__ = [
    'InverseMaintenance',
    'sampling_probabilities'
]


def sampling_probabilities(sigma_bar, n, constant=40.0):
    """``p_i = min(1, constant * sigma_bar_i * log n)``."""
    sigma_bar = np.asarray(sigma_bar, dtype=np.float64)
    return np.minimum(1.0, constant * sigma_bar * math.log(max(n, 2)))


class InverseMaintenance(object):
    """Maintains a sampled Gram preconditioner ``A^T V^{1/2} S V^{1/2} A`` and
    solves ``A^T Vbar A x = b`` against it by preconditioned Richardson sweeps.

    ``S`` keeps row ``i`` with probability ``p_i = min(1, C sigma_bar_i log n)``
    and weight ``1 / p_i``. Each :meth:`scale` resamples its row; the
    preconditioner is refactored lazily on the next :meth:`solve`.

    Args:
        a: TwoSparseMatrix without deleted rows.
        v: positive row weights.
        sigma_bar: overestimates of the leverage scores of ``V^{1/2} A``.
        sampling_constant: ``C`` above.
        dense_limit: column count up to which the preconditioner is factored densely;
            above it every preconditioner solve goes through the M-matrix path.
        ridge: relative ridge added to a numerically singular ``A^T V A``; its
            pseudo-inverse is used when even the ridge does not help.
        debug_checks: compare the preconditioner with ``A^T V A`` densely after each refactoring.
    """

    def __init__(self, a, v, sigma_bar, sampling_constant=40.0, rng=None,
                 dense_limit=500, max_sweeps=100, ridge=1e-12, debug_checks=False):

        self.a = a
        self.csr = a.to_csr()
        self.m, self.n = a.shape
        self.sampling_constant = float(sampling_constant)
        self.dense_limit = dense_limit
        self.max_sweeps = max_sweeps
        self.ridge = float(ridge)
        self.debug_checks = debug_checks
        self.rng = as_generator(rng)

        self.counters = {"factorizations": 0, "resamples": 0, "sweeps": 0, "solves": 0, "fallbacks": 0,
                         "regularized": 0}
        self._factor = None
        self.initialize(v, sigma_bar)

    def _check_weights(self, v, sigma_bar):
        v = np.asarray(v, dtype=np.float64).reshape(-1).copy()
        sigma_bar = np.asarray(sigma_bar, dtype=np.float64).reshape(-1).copy()
        if v.shape[0] != self.m or sigma_bar.shape[0] != self.m:
            raise ContractViolation("v and sigma_bar need one entry per row ({0}).".format(self.m))
        if self.m and (v.min() <= 0 or sigma_bar.min() < 0):
            raise ContractViolation("v must be positive and sigma_bar nonnegative.")
        return v, sigma_bar

    def initialize(self, v, sigma_bar):
        self.v, self.sigma_bar = self._check_weights(v, sigma_bar)
        self.p = sampling_probabilities(self.sigma_bar, self.n, self.sampling_constant)
        keep = self.rng.random(self.m) < self.p
        self.s = np.where(keep, 1.0 / np.maximum(self.p, 1e-300), 0.0)
        self.counters["resamples"] += self.m
        self._factor = None

    def scale(self, i, a_value, b):
        """``v_i <- a_value``, ``sigma_bar_i <- b`` and resample ``S_ii``."""
        if not 0 <= i < self.m:
            raise ContractViolation("Row {0} outside of [0, {1}).".format(i, self.m))
        if a_value <= 0 or b < 0:
            raise ContractViolation("v must be positive and sigma_bar nonnegative.")
        self.v[i] = a_value
        self.sigma_bar[i] = b
        self.p[i] = sampling_probabilities(b, self.n, self.sampling_constant)
        self.s[i] = 1.0 / self.p[i] if self.rng.random() < self.p[i] else 0.0
        self.counters["resamples"] += 1
        self._factor = None

    @property
    def n_sampled(self):
        return int(np.count_nonzero(self.s))

    def _gram(self, weights):
        return (self.csr.T @ sp.diags(weights) @ self.csr).tocsr()

    def preconditioner(self):
        """``A^T V^{1/2} S V^{1/2} A`` as a sparse matrix."""
        return self._gram(self.v * self.s)

    def _regularized_factor(self, g):
        try:
            factor = scipy.linalg.cho_factor(g)
            return lambda r: scipy.linalg.cho_solve(factor, r)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            pass

        self.counters["regularized"] += 1
        ridge = self.ridge * max(float(np.trace(g)) / max(self.n, 1), 1e-300)
        try:
            factor = scipy.linalg.cho_factor(g + ridge * np.eye(self.n))
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            WARN("InverseMaintenance: A^T V A stays singular under a ridge, using its pseudo-inverse")
            pinv = scipy.linalg.pinvh(g)
            return lambda r: pinv @ r
        WARN("InverseMaintenance: A^T V A is numerically singular, factored with ridge {0:.3e}".format(ridge))
        return lambda r: scipy.linalg.cho_solve(factor, r)

    def _factorize(self):
        weights = self.v * self.s
        self.counters["factorizations"] += 1

        if self.n <= self.dense_limit:
            try:
                factor = scipy.linalg.cho_factor(self._gram(weights).toarray())
                self._factor = lambda r: scipy.linalg.cho_solve(factor, r)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                WARN("InverseMaintenance: sampled Gram is singular, keeping every row")
                self.counters["fallbacks"] += 1
                self.p = np.ones(self.m)
                self.s = np.ones(self.m)
                weights = self.v.copy()
                self._factor = self._regularized_factor(self._gram(weights).toarray())
        else:
            self._factor = lambda r: solve_two_sparse_gram(self.a, weights, r, dense_limit=self.dense_limit).x

        if self.debug_checks:
            factor = self.approximation_factor()
            if factor > 0.1:
                WARN("InverseMaintenance: sampled Gram is only a {0:.3f}-approximation".format(factor))

    def approximation_factor(self):
        """Smallest ``t`` with ``e^{-t} A^T V A <= A^T V^{1/2} S V^{1/2} A <= e^t A^T V A``, densely."""
        lo, hi = pencil_extremes(self.preconditioner().toarray(), self._gram(self.v).toarray())
        if lo <= 0 or not np.isfinite(hi):
            return np.inf
        return float(max(math.log(hi), -math.log(lo)))

    def solve(self, v_bar, b, eps=1e-8):
        """``x`` with ``A^T Vbar A x ~= b`` up to relative residual ``eps``.

        Richardson sweeps ``x <- x + H_pre^{-1} (b - A^T Vbar A x)``. If the
        residual stops shrinking, conjugate gradient with the same
        preconditioner takes over.
        """
        v_bar = np.asarray(v_bar, dtype=np.float64).reshape(-1)
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        if v_bar.shape[0] != self.m or b.shape[0] != self.n:
            raise ContractViolation("Solve needs {0} row weights and {1} right-hand entries."
                                    .format(self.m, self.n))
        self.counters["solves"] += 1

        if self.n == 0 or not np.any(b):
            return SolveReport(np.zeros(self.n), 0.0, 0, True)
        if self._factor is None:
            self._factorize()

        target = self._gram(v_bar)
        norm_b = np.linalg.norm(b)
        x = np.zeros(self.n)
        r = b.copy()
        residual = 1.0
        stalled = 0

        for sweep in range(1, self.max_sweeps + 1):
            x = x + self._factor(r)
            r = b - target @ x
            prev, residual = residual, np.linalg.norm(r) / norm_b
            self.counters["sweeps"] += 1
            if residual <= eps:
                DEBUG(lambda: "InverseMaintenance: {0} sweeps, residual {1:.3e}".format(sweep, residual))
                return SolveReport(x, float(residual), sweep, True)
            stalled = stalled + 1 if residual > 2.0 / 3.0 * prev else 0
            if stalled >= 3:
                break

        WARN("InverseMaintenance: Richardson stalled at residual {0:.3e}, switching to CG".format(residual))
        self.counters["fallbacks"] += 1
        return self._cg(target, b, x, eps)

    def _cg(self, target, b, x, eps):
        count = [0]

        def _callback(_):
            count[0] += 1

        precond = spla.LinearOperator((self.n, self.n), matvec=self._factor)
        x, _ = spla.cg(target, b, x0=x, rtol=eps, atol=0.0, maxiter=10 * self.n, M=precond, callback=_callback)
        residual = float(np.linalg.norm(b - target @ x) / np.linalg.norm(b))
        return SolveReport(x, residual, count[0], residual <= eps * 1.01)

    def __repr__(self):
        return "InverseMaintenance(m={0}, n={1}, sampled={2})".format(self.m, self.n, self.n_sampled)

import numpy as np

from src.core.lp import LpInstance
from src.core.two_sparse import TwoSparseMatrix
from src.spectral.eigs import dense_eigs
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG, INFO
from .path_following import centrality_parameters, evaluate_point, path_weights
from .barrier import barrier_eval

__all__ = [
    'ModifiedLp',
    'initialize_lp'
]


class ModifiedLp(object):
    """An LP padded with one auxiliary variable per constraint column so that
    the box midpoint becomes exactly feasible.

    Column ``j`` with residual ``r_j = b_j - (A^T x_mid)_j`` gets the row
    ``beta sign(r_j) e_j`` and an auxiliary variable in ``[0, 2|r_j|/beta]``
    started at ``|r_j|/beta``. A column with ``r_j = 0`` gets the two rows
    ``+beta e_j`` and ``-beta e_j`` with equal auxiliary values, which keeps
    every auxiliary variable strictly inside its box. Auxiliary variables
    cost ``2 ||c||_1 / delta'`` each, so they vanish at the optimum of a
    feasible instance.
    """

    def __init__(self, inst, delta, C=100.0, zero_tol=1e-12):

        if delta <= 0:
            raise ContractViolation("delta must be positive, got {0}.".format(delta))
        if inst.m == 0:
            raise ContractViolation("The LP has no variables.")

        self.inst = inst
        self.delta = float(delta)
        m, n = inst.m, inst.n

        self.x_mid = 0.5 * (inst.lower + inst.upper)
        self.xi = float((inst.upper - inst.lower).max())
        self.W = inst.magnitude_bound()

        r = inst.b - inst.a.rmatvec(self.x_mid)
        self.beta = float(np.abs(r).max()) / self.xi + 1.0 if n else 1.0
        self.x_tilde_init = np.abs(r) / self.beta

        zero = np.abs(r) <= zero_tol * (1.0 + (np.abs(inst.b).max() if n else 0.0))
        self.sigma = np.where(zero, 0.0, np.sign(r))

        self.c_l1 = float(np.abs(inst.c).sum())
        c_l1 = self.c_l1 if self.c_l1 > 0 else 1.0
        self.delta_prime = self.delta / (10.0 * m * self.W ** 2) * min(1.0, c_l1)
        self.aux_cost = 2.0 * c_l1 / self.delta_prime

        # one row per column with a residual, two per column without
        aux_cols, aux_signs, aux_init = [], [], []
        pair_value = self.xi / (2.0 * self.beta)
        for j in range(n):
            if zero[j]:
                aux_cols.extend([j, j])
                aux_signs.extend([1.0, -1.0])
                aux_init.extend([pair_value, pair_value])
            else:
                aux_cols.append(j)
                aux_signs.append(self.sigma[j])
                aux_init.append(self.x_tilde_init[j])

        self.aux_cols = np.asarray(aux_cols, dtype=np.int64)
        self.aux_signs = np.asarray(aux_signs, dtype=np.float64)
        aux_init = np.asarray(aux_init, dtype=np.float64)

        rows = [inst.a.row(i) for i in range(m)]
        rows.extend([(int(j), self.beta * s)] for j, s in zip(self.aux_cols, self.aux_signs))
        a_bar = TwoSparseMatrix(n, rows)

        k = self.aux_cols.shape[0]
        self.lp = LpInstance(a_bar, inst.b,
                             np.concatenate([inst.c, np.full(k, self.aux_cost)]),
                             np.concatenate([inst.lower, np.zeros(k)]),
                             np.concatenate([inst.upper, 2.0 * aux_init]))
        self.x_init = np.concatenate([self.x_mid, aux_init])

        self.params = centrality_parameters(self.lp.m, n, C=C, b=inst.b)
        self.mu_init = 4.0 * m * c_l1 * self.xi / (self.params.eps * self.delta_prime)

    @property
    def m(self):
        return self.inst.m

    @property
    def n_aux(self):
        return self.aux_cols.shape[0]

    def extract(self, x_bar):
        """Original variables of a point of the padded LP."""
        return np.asarray(x_bar)[:self.m].copy()

    def aux_mass(self, x_bar):
        return float(np.asarray(x_bar)[self.m:].sum())

    def aux_bound(self):
        """Largest auxiliary mass of a delta-optimal point when the original LP is feasible."""
        c_l1 = self.c_l1 if self.c_l1 > 0 else 1.0
        return self.delta_prime * (0.5 * self.xi + self.delta / (2.0 * c_l1))

    def min_singular_value(self):
        """``sigma_min`` of the padded constraint matrix, from the eigenvalues of its Gram matrix."""
        if self.lp.n == 0:
            return np.inf
        values = dense_eigs(self.lp.a.gram().toarray()).values
        return float(np.sqrt(max(values[0], 0.0)))

    def __repr__(self):
        return "ModifiedLp(m={0}, n={1}, aux={2}, beta={3:.3g}, mu_init={4:.3e})".format(
            self.m, self.inst.n, self.n_aux, self.beta, self.mu_init)


def initialize_lp(inst, delta, ipm_configs=None, linsolve_configs=None):
    """Padded LP and its starting point ``(x_init, s = c_bar, mu_init)``.

    Returns:
        (ModifiedLp, CenteredPoint)
    """
    ipm_configs = ipm_configs or {}
    linsolve_configs = linsolve_configs or {}

    mlp = ModifiedLp(inst, delta, C=ipm_configs.get("C", 100.0))
    lp = mlp.lp

    dense_limit = linsolve_configs.get("dense_limit", 500)
    if lp.n and lp.n <= dense_limit:
        sigma_min = mlp.min_singular_value()
        if sigma_min < 1.0 - 1e-9:
            raise ContractViolation("Padded constraint matrix has sigma_min {0:.3e} < 1.".format(sigma_min))
        DEBUG(lambda: "initialize_lp: sigma_min(A_bar) = {0:.4f}".format(sigma_min))

    hess = barrier_eval(mlp.x_init, lp.lower, lp.upper).hess
    tau = path_weights(lp, hess, tol=linsolve_configs.get("lewis_tol", 1e-8),
                       max_iter=linsolve_configs.get("lewis_max_iter", 500))
    start = evaluate_point(lp, mlp.x_init, np.zeros(lp.n), mlp.mu_init, tau, dense_limit=dense_limit)

    INFO("initialize_lp: {0}, centrality {1:.3e} (eps {2:.3e})".format(mlp, start.centrality, mlp.params.eps))
    return mlp, start

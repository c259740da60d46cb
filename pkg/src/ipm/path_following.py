import math
from typing import NamedTuple

import numpy as np

from src.linsolve.inverse_maintenance import InverseMaintenance
from src.linsolve.leverage import lewis_exponent, lewis_weights
from src.linsolve.sdd import solve_two_sparse_gram
from src.utils.common_utils import as_generator
from src.utils.configs import default_base_configs
from src.utils.exceptions import ContractViolation, ConvergenceError
from src.utils.logging import DEBUG, INFO, WARN
from .barrier import barrier_eval

__all__ = [
    'CentralityParameters',
    'CenteredPoint',
    'PathFollower',
    'centrality_parameters',
    'evaluate_point',
    'path_following',
    'path_weights'
]

_MAX_REDUCTION = 0.9


class CentralityParameters(NamedTuple):
    C: float
    p: float
    eps: float
    gamma: float
    c_norm: float
    feasibility_tol: float  # on the weighted primal residual
    residual_floor: float  # on ||A^T x - b||_inf


def centrality_parameters(m, n, C=100.0, b=None):
    """Thresholds of an eps-centered point for an m x n constraint matrix.

    ``eps = 1 / (4 C log(m/n))``, ``gamma = eps^2 / (C^2 log(C m / eps^2))``
    and ``C_norm = C / (1 - p)``; the ratio ``m/n`` is floored at ``e``.
    """
    n_eff = max(n, 1)
    ratio = max(m / n_eff, math.e)
    eps = min(1.0 / 80.0, 1.0 / (4.0 * C * math.log(ratio)))
    gamma = eps ** 2 / (C ** 2 * math.log(C * max(m, 1) / eps ** 2))
    p = lewis_exponent(max(m, n_eff), n_eff)
    c_norm = C / (1.0 - p)
    b_inf = float(np.abs(b).max()) if b is not None and len(b) else 0.0
    return CentralityParameters(C, p, eps, gamma, c_norm, eps * gamma / c_norm, 1e-9 * (1.0 + b_inf))


def path_weights(lp, hess, tol=1e-8, max_iter=500, w0=None):
    """Central-path weights: regularized Lewis weights of ``diag(hess)^{-1/2} A``;
    all ones when there are no constraint columns."""
    if lp.n == 0:
        return np.ones(lp.m)
    return lewis_weights(lp.a, hessian=hess, tol=tol, max_iter=max_iter, w0=w0).weights


class CenteredPoint(object):
    """Primal point ``x``, dual witness ``z`` with slack ``s = c - A z`` and path parameter ``mu``,
    together with the measured centrality and feasibility residuals."""

    def __init__(self, x, z, mu, tau, barrier, s, centrality, feasibility, residual, dual_residual):
        self.x = x
        self.z = z
        self.mu = mu
        self.tau = tau
        self.barrier = barrier
        self.s = s
        self.centrality = centrality
        self.feasibility = feasibility
        self.residual = residual
        self.dual_residual = dual_residual

    @property
    def grad(self):
        return self.barrier.grad

    @property
    def hess(self):
        return self.barrier.hess

    def is_centered(self, params):
        feasible = self.feasibility <= params.feasibility_tol or self.residual <= params.residual_floor
        return self.centrality <= params.eps and feasible and self.dual_residual <= 1e-9

    def objective(self, lp):
        return float(lp.c @ self.x)

    def as_record(self, lp):
        return {"mu": self.mu, "centrality": self.centrality, "feasibility": self.feasibility,
                "residual": self.residual, "objective": self.objective(lp)}

    def __repr__(self):
        return "CenteredPoint(mu={0:.3e}, centrality={1:.3e}, feasibility={2:.3e})".format(
            self.mu, self.centrality, self.feasibility)


def evaluate_point(lp, x, z, mu, tau, dense_limit=500):
    """Measure the centrality conditions of ``(x, c - A z, mu)`` for weights ``tau``."""
    barrier = barrier_eval(x, lp.lower, lp.upper)
    az = lp.a.matvec(z) if lp.n else np.zeros(lp.m)
    s = lp.c - az

    scale = mu * tau
    centrality = float(np.abs((s + scale * barrier.grad) / (scale * np.sqrt(barrier.hess))).max()) if lp.m else 0.0

    r = lp.residual(x)
    residual = float(np.abs(r).max()) if lp.n else 0.0
    if lp.n and np.any(r):
        y = solve_two_sparse_gram(lp.a, 1.0 / (tau * barrier.hess), r, dense_limit=dense_limit).x
        feasibility = float(math.sqrt(max(r @ y, 0.0)))
    else:
        feasibility = 0.0

    c_scale = 1.0 + (float(np.abs(lp.c).max()) if lp.m else 0.0)
    dual_residual = float(np.abs(az + s - lp.c).max()) / c_scale if lp.m else 0.0

    return CenteredPoint(x, z, mu, tau, barrier, s, centrality, feasibility, residual, dual_residual)


class PathFollower(object):
    """Follows the weighted central path of ``min c^T x, A^T x = b, l <= x <= u`` downwards in ``mu``.

    Each accepted step shrinks ``mu`` by the current reduction and recenters
    with damped Newton steps; a success doubles the reduction (up to 0.9), a
    failure quarters it down to the short-step value ``1/(64 sqrt n)``.
    Newton systems ``A^T (mu T Phi'')^{-1} A`` are solved through an
    :class:`InverseMaintenance` whose rows are rescaled every step.
    """

    def __init__(self, lp, params, ipm_configs=None, linsolve_configs=None, rng=None, trace=None):

        base = default_base_configs()
        self.lp = lp
        self.params = params
        self.ipm_configs = dict(base["ipm_configs"], **(ipm_configs or {}))
        self.linsolve_configs = dict(base["linsolve_configs"], **(linsolve_configs or {}))
        self.rng = as_generator(rng)
        self.trace = trace

        self.dense_limit = self.linsolve_configs["dense_limit"]
        self.cg_tol = self.linsolve_configs["cg_tol"]
        self._solver = None

        self.counters = {"steps": 0, "newton_steps": 0, "rejected": 0, "objective_increases": 0}
        self.hessian_spread = 0.0
        self.trajectory = []

    def weights(self, hess, w0=None):
        return path_weights(self.lp, hess, tol=self.linsolve_configs["lewis_tol"],
                            max_iter=self.linsolve_configs["lewis_max_iter"], w0=w0)

    def evaluate(self, x, z, mu, tau):
        return evaluate_point(self.lp, x, z, mu, tau, dense_limit=self.dense_limit)

    def _solve(self, v, tau, rhs):
        if self._solver is None:
            self._solver = InverseMaintenance(self.lp.a, v, tau,
                                              sampling_constant=self.linsolve_configs["sampling_constant"],
                                              rng=self.rng, dense_limit=self.dense_limit)
        else:
            self._solver.initialize(v, tau)
        return self._solver.solve(v, rhs, eps=self.cg_tol).x

    def newton_step(self, pt, mu):
        """Damped Newton step towards the ``mu``-central point from ``pt``.

        Returns the new ``(x, z)`` and the step length.
        """
        lp = self.lp
        h = mu * pt.tau * pt.hess
        g = lp.c + mu * pt.tau * pt.grad

        if lp.n:
            rhs = -lp.residual(pt.x) + lp.a.rmatvec(g / h)
            z_new = self._solve(1.0 / h, pt.tau, rhs)
            dx = -(g - lp.a.matvec(z_new)) / h
        else:
            z_new = pt.z
            dx = -g / h

        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(dx > 0, (lp.upper - pt.x) / dx, np.inf)
            down = np.where(dx < 0, (lp.lower - pt.x) / dx, np.inf)
        alpha_max = float(min(up.min(), down.min())) if lp.m else np.inf
        alpha = min(1.0, self.ipm_configs["fraction_to_boundary"] * alpha_max)

        return pt.x + alpha * dx, pt.z + alpha * (z_new - pt.z), alpha

    def recenter(self, pt, mu):
        """Newton steps at ``mu`` from ``pt`` until the point is centered.

        Returns (CenteredPoint or None, number of Newton steps).
        """
        x, z, tau = pt.x, pt.z, pt.tau
        cur = self.evaluate(x, z, mu, tau)

        for k in range(self.ipm_configs["max_newton_steps"] + 1):
            if cur.is_centered(self.params):
                return cur, k
            if k == self.ipm_configs["max_newton_steps"]:
                break
            x, z, _ = self.newton_step(cur, mu)
            self.counters["newton_steps"] += 1
            try:
                barrier = barrier_eval(x, self.lp.lower, self.lp.upper)
            except ContractViolation:
                return None, k + 1
            tau = self.weights(barrier.hess, w0=tau)
            cur = self.evaluate(x, z, mu, tau)

        DEBUG(lambda: "recenter: mu={0:.3e} not centered (centrality {1:.3e}, feasibility {2:.3e})"
              .format(mu, cur.centrality, cur.feasibility))
        return None, self.ipm_configs["max_newton_steps"]

    def _accept(self, pt, newton_steps, reduction):
        lp = self.lp
        self.counters["steps"] += 1
        record = dict(pt.as_record(lp), newton_steps=newton_steps, reduction=reduction)
        self.trajectory.append(record)
        if self.trace is not None:
            self.trace.record(**record)

        root = np.sqrt(pt.hess)
        if root.size:
            self.hessian_spread = max(self.hessian_spread, float(math.log(root.max() / root.min())))

    def follow(self, start, mu_final):
        """Take ``start`` down to ``mu_final``; raises ConvergenceError when even a short step fails."""
        if mu_final <= 0:
            raise ContractViolation("mu_final must be positive, got {0}.".format(mu_final))

        pt = start
        if not pt.is_centered(self.params):
            pt, k = self.recenter(pt, pt.mu)
            if pt is None:
                raise ConvergenceError("Starting point could not be centered at mu={0:.3e}.".format(start.mu),
                                       trajectory=self.trajectory)
            self._accept(pt, k, 0.0)

        floor = min(self.ipm_configs["min_reduction"], 1.0 / (64.0 * math.sqrt(max(self.lp.n, 1))))
        reduction = self.ipm_configs["initial_reduction"]
        slack = 2.0 * max(self.lp.n, 1)

        while pt.mu > mu_final:
            mu = max(mu_final, pt.mu * (1.0 - reduction))
            cand, k = self.recenter(pt, mu)

            if cand is None:
                self.counters["rejected"] += 1
                if reduction <= floor:
                    WARN("PathFollower: short step from mu={0:.3e} failed".format(pt.mu))
                    raise ConvergenceError("Centrality repair failed within {0} Newton steps at mu={1:.3e}."
                                           .format(self.ipm_configs["max_newton_steps"], mu),
                                           trajectory=self.trajectory)
                reduction = max(floor, reduction / 4.0)
                continue

            if cand.objective(self.lp) > pt.objective(self.lp) + slack * pt.mu:
                self.counters["objective_increases"] += 1
                DEBUG(lambda: "PathFollower: objective rose at mu={0:.3e}".format(mu))

            pt = cand
            self._accept(pt, k, reduction)
            reduction = min(_MAX_REDUCTION, 2.0 * reduction)

        INFO("PathFollower: mu={0:.3e} after {1} steps ({2} Newton steps, {3} rejected)".format(
            pt.mu, self.counters["steps"], self.counters["newton_steps"], self.counters["rejected"]))
        return pt


def path_following(lp, start, mu_final, params, ipm_configs=None, linsolve_configs=None, rng=None, trace=None):
    """Centered point at ``mu_final`` reached from the centered point ``start``."""
    follower = PathFollower(lp, params, ipm_configs=ipm_configs, linsolve_configs=linsolve_configs,
                            rng=rng, trace=trace)
    return follower.follow(start, mu_final)

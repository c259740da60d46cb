import math

import numpy as np

from src.core.graph import gain_incidence
from src.core.lp import eliminate_fixed, independent_constraints
from src.utils.configs import default_configs
from src.utils.exceptions import ContractViolation, InfeasibleError
from src.utils.logging import INFO, WARN
from .initialization import initialize_lp
from .path_following import PathFollower
from .rounding import final_point

__all__ = [
    'LpSolution',
    'FlowSolution',
    'solve_two_sparse_lp',
    'mincost_lp',
    'maxflow_lp',
    'solve_generalized_mincost',
    'solve_generalized_maxflow'
]


class LpSolution(object):
    """Result of :func:`solve_two_sparse_lp` in terms of the original instance."""

    def __init__(self, x, objective, residual, aux_mass=0.0, aux_bound=0.0, gap=0.0, gap_constant=0.0,
                 mu_final=0.0, counters=None, trace=None, warnings=None):
        self.x = x
        self.objective = objective
        self.residual = residual
        self.aux_mass = aux_mass
        self.aux_bound = aux_bound
        self.gap = gap
        self.gap_constant = gap_constant
        self.mu_final = mu_final
        self.counters = counters if counters is not None else {}
        self.trace = trace if trace is not None else []
        self.warnings = warnings if warnings is not None else []

    def as_dict(self, with_trace=False):
        out = {
            "x": self.x,
            "objective": self.objective,
            "residual_inf": self.residual,
            "aux_mass": self.aux_mass,
            "aux_bound": self.aux_bound,
            "gap_bound": self.gap,
            "gap_constant": self.gap_constant,
            "mu_final": self.mu_final,
            "counters": self.counters,
            "warnings": self.warnings,
        }
        if with_trace:
            out["trace"] = self.trace
        return out


class FlowSolution(object):

    def __init__(self, flow, value, imbalance, lp):
        self.flow = flow
        self.value = value
        self.imbalance = imbalance
        self.lp = lp

    def as_dict(self, with_trace=False):
        out = self.lp.as_dict(with_trace=with_trace)
        del out["x"]
        out.update(flow=self.flow, value=self.value, imbalance_inf=self.imbalance)
        return out


def _sections(configs):
    configs = default_configs(configs)
    return configs["ipm_configs"], configs["linsolve_configs"]


def solve_two_sparse_lp(inst, delta=1e-5, configs=None, rng=None, trace=None):
    """Approximately solve ``min c^T x, A^T x = b, l <= x <= u`` for a two-sparse ``A``.

    The instance is padded with auxiliary variables (:func:`initialize_lp`),
    followed down the central path to ``mu_final = 2 delta / (gap_safety ||tau||_1)``,
    projected onto the constraints and cut back to the original variables.

    Constraint columns that depend on the others are dropped first
    (:func:`independent_constraints`), so the Newton systems stay nonsingular.

    Raises:
        InfeasibleError: when ``b`` contradicts a dependent constraint, or when
            the auxiliary variables carry more than ten times the mass a
            feasible instance allows.
    """
    ipm_configs, linsolve_configs = _sections(configs)

    if inst.m == 0:
        residual = float(np.abs(inst.b).max()) if inst.n else 0.0
        if residual > delta:
            raise InfeasibleError("An LP without variables needs b = 0 (|b|_inf = {0:.3e}).".format(residual),
                                  report={"residual_inf": residual})
        return LpSolution(np.zeros(0), 0.0, residual)

    original = inst
    inst, kept = independent_constraints(original)

    mlp, start = initialize_lp(inst, delta, ipm_configs=ipm_configs, linsolve_configs=linsolve_configs)
    lp = mlp.lp

    follower = PathFollower(lp, mlp.params, ipm_configs=ipm_configs, linsolve_configs=linsolve_configs,
                            rng=rng, trace=trace)
    mu_final = min(start.mu, 2.0 * delta / (ipm_configs["gap_safety"] * float(start.tau.sum())))
    pt = follower.follow(start, mu_final)

    fp = final_point(lp, pt, dense_limit=linsolve_configs["dense_limit"],
                     fraction_to_boundary=ipm_configs["fraction_to_boundary"])

    warnings = []
    aux_mass, aux_bound = mlp.aux_mass(fp.x), mlp.aux_bound()
    report = {"aux_mass": aux_mass, "aux_bound": aux_bound, "objective_padded": fp.objective}
    if aux_mass > 10.0 * aux_bound:
        raise InfeasibleError("Auxiliary mass {0:.3e} exceeds ten times its bound {1:.3e}; "
                              "the LP looks infeasible.".format(aux_mass, aux_bound), report=report)

    c_inf = max(float(np.abs(inst.c).max()), 1.0)
    spread_bound = 10.0 * (math.log(max(mlp.W, 1.0)) + math.log(max(1.0 / mu_final, 1.0))
                           + math.log(c_inf) + math.log(max(inst.m, 2)))
    if follower.hessian_spread > spread_bound:
        warnings.append("hessian_spread")
        WARN("solve_two_sparse_lp: barrier Hessian spread {0:.1f} above {1:.1f}".format(
            follower.hessian_spread, spread_bound))
    if follower.counters["objective_increases"]:
        warnings.append("objective_increases")

    x = np.clip(mlp.extract(fp.x), inst.lower, inst.upper)
    residual = float(np.abs(original.residual(x)).max()) if original.n else 0.0
    objective = original.objective(x)

    counters = dict(follower.counters)
    if follower._solver is not None:
        counters.update({"solver_" + k: v for k, v in follower._solver.counters.items()})
    counters["hessian_spread"] = follower.hessian_spread
    counters["dropped_constraints"] = original.n - kept.shape[0]

    INFO("solve_two_sparse_lp: objective {0:.9g}, residual {1:.3e}, aux mass {2:.3e}".format(
        objective, residual, aux_mass))
    return LpSolution(x, objective, residual, aux_mass=aux_mass, aux_bound=aux_bound, gap=fp.gap,
                      gap_constant=fp.gap_constant, mu_final=mu_final, counters=counters,
                      trace=follower.trajectory, warnings=warnings)


def _edge_rows(tails, heads, gains, column):
    """Two-sparse rows ``gamma_e e_head - e_tail`` over the columns kept by ``column``
    (a vertex -> column map, -1 for dropped vertices)."""
    rows = []
    for a, b, g in zip(tails, heads, gains):
        entries = {}
        for v, val in ((int(b), float(g)), (int(a), -1.0)):
            j = column[v]
            if j >= 0:
                entries[j] = entries.get(j, 0.0) + val
        rows.append([(j, val) for j, val in sorted(entries.items()) if val != 0.0])
    return rows


def _check_network(n_vertices, tails, heads, gains, capacity):
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    gains = np.asarray(gains, dtype=np.float64)
    capacity = np.asarray(capacity, dtype=np.float64)
    m = tails.shape[0]
    if heads.shape[0] != m or gains.shape[0] != m or capacity.shape[0] != m:
        raise ContractViolation("tails, heads, gains and capacities need one entry per edge.")
    if m and (min(tails.min(), heads.min()) < 0 or max(tails.max(), heads.max()) >= n_vertices):
        raise ContractViolation("Edge endpoints must lie in [0, {0}).".format(n_vertices))
    if m and (gains.min() <= 0 or capacity.min() < 0):
        raise ContractViolation("Gains must be positive and capacities nonnegative.")
    return tails, heads, gains, capacity


def mincost_lp(n_vertices, tails, heads, gains, cost, capacity, demand):
    """Gain-form min-cost flow as a two-sparse LP over the edges.

    Returns:
        (LpInstance, FixedVariables)
    """
    tails, heads, gains, capacity = _check_network(n_vertices, tails, heads, gains, capacity)
    demand = np.asarray(demand, dtype=np.float64)
    if demand.shape[0] != n_vertices:
        raise ContractViolation("Demand has {0} entries, {1} vertices expected.".format(demand.shape[0], n_vertices))

    rows = _edge_rows(tails, heads, gains, np.arange(n_vertices))
    inst, fixed, _ = eliminate_fixed(rows, n_vertices, demand, cost, np.zeros(tails.shape[0]), capacity)
    return inst, fixed


def maxflow_lp(n_vertices, tails, heads, gains, capacity, s, t):
    """Gain-form ``s``-``t`` max-flow as a two-sparse LP: conservation at the inner
    vertices and the negated inflow at ``t`` as cost.

    Returns:
        (LpInstance, FixedVariables, inner vertex ids)
    """
    tails, heads, gains, capacity = _check_network(n_vertices, tails, heads, gains, capacity)
    if s == t or not (0 <= s < n_vertices and 0 <= t < n_vertices):
        raise ContractViolation("Source and sink must be two different vertices, got {0} and {1}.".format(s, t))

    column = np.full(n_vertices, -1, dtype=np.int64)
    inner = [v for v in range(n_vertices) if v not in (s, t)]
    column[inner] = np.arange(len(inner))

    rows = _edge_rows(tails, heads, gains, column)
    into_t = np.where(heads == t, gains, 0.0) - np.where(tails == t, 1.0, 0.0)
    inst, fixed, _ = eliminate_fixed(rows, len(inner), np.zeros(len(inner)), -into_t,
                                     np.zeros(tails.shape[0]), capacity)
    return inst, fixed, inner


def solve_generalized_mincost(n_vertices, tails, heads, gains, cost, capacity, demand, delta=1e-5,
                              configs=None, rng=None, trace=None):
    """``min c^T f`` subject to gain-form imbalances ``B^T f = d`` and ``0 <= f <= u``.

    Edge ``e`` takes ``f_e`` out of its tail and delivers ``gamma_e f_e`` at its
    head. Edges of capacity zero are fixed at zero.
    """
    inst, fixed = mincost_lp(n_vertices, tails, heads, gains, cost, capacity, demand)
    sol = solve_two_sparse_lp(inst, delta, configs=configs, rng=rng, trace=trace)

    flow = fixed.expand(sol.x)
    imbalance = gain_incidence(n_vertices, tails, heads, gains).T @ flow - np.asarray(demand, dtype=np.float64)
    return FlowSolution(flow, float(np.asarray(cost, dtype=np.float64) @ flow),
                        float(np.abs(imbalance).max()) if n_vertices else 0.0, sol)


def solve_generalized_maxflow(n_vertices, tails, heads, gains, capacity, s, t, delta=1e-5,
                              configs=None, rng=None, trace=None):
    """Largest net inflow at ``t`` over flows conserved (in gain form) at every vertex but ``s`` and ``t``.

    Returns a FlowSolution whose ``value`` is the net gain-form inflow at ``t``
    and whose ``imbalance`` is the largest violation of conservation.
    """
    inst, fixed, inner = maxflow_lp(n_vertices, tails, heads, gains, capacity, s, t)
    sol = solve_two_sparse_lp(inst, delta, configs=configs, rng=rng, trace=trace)

    flow = fixed.expand(sol.x)
    net = gain_incidence(n_vertices, tails, heads, gains).T @ flow
    imbalance = float(np.abs(net[inner]).max()) if inner else 0.0
    return FlowSolution(flow, float(net[t]), imbalance, sol)

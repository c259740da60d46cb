import itertools
import math
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from src.utils.logging import INFO
from .report import OracleReport, digest

__all__ = [
    'OracleLp',
    'enumeration_size',
    'lp_vertex_enumerate',
    'lp_reference',
    'check_lp'
]


class OracleLp(NamedTuple):
    value: float  # inf when infeasible
    x: np.ndarray  # None when infeasible
    method: str
    n_patterns: int

    @property
    def feasible(self):
        return self.x is not None


def _equations(inst):
    """Dense ``A`` and a maximal independent subset of the constraint columns."""
    a = inst.a.to_dense()
    if inst.n == 0 or inst.m == 0:
        return a, np.zeros(0, dtype=np.int64)
    _, r, piv = scipy.linalg.qr(a, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int((diag > 1e-10 * max(diag.max(), 1e-300)).sum()) if diag.size else 0
    return a, np.sort(piv[:rank])


def enumeration_size(inst):
    """Number of basis/bound patterns vertex enumeration would visit."""
    _, eqs = _equations(inst)
    r = eqs.shape[0]
    return math.comb(inst.m, r) * 2 ** (inst.m - r)


def lp_vertex_enumerate(inst, budget=1 << 22, slack=1e-7):
    """Exact optimum of a small box-constrained LP by visiting every basic solution.

    For each set of basic variables (lexicographic order) and each assignment
    of the other variables to a bound, the basic variables are solved for and
    the point is kept if it satisfies all bounds and constraints within
    ``slack``. Above ``budget`` patterns the HiGHS reference answers instead;
    its result then reports ``method="highs"`` with the pattern count it skipped.
    """
    a, eqs = _equations(inst)
    m, r = inst.m, eqs.shape[0]
    size = math.comb(m, r) * 2 ** (m - r)
    if size > budget:
        INFO("lp_vertex_enumerate: {0} patterns over the budget of {1}, using HiGHS".format(size, budget))
        return lp_reference(inst)._replace(n_patterns=size)

    lower, upper, c, b = inst.lower, inst.upper, inst.c, inst.b
    b_scale = 1.0 + (np.abs(b).max() if b.size else 0.0)
    best_value, best_x = np.inf, None

    for basis in itertools.combinations(range(m), r):
        basis = np.asarray(basis, dtype=np.int64)
        rest = np.setdiff1d(np.arange(m), basis)
        system = a[np.ix_(basis, eqs)].T
        if r and abs(np.linalg.det(system)) < 1e-12:
            continue

        # every bound pattern of the nonbasic variables at once
        patterns = np.array(list(itertools.product((0, 1), repeat=rest.shape[0])), dtype=bool)
        patterns = patterns.reshape(2 ** rest.shape[0], rest.shape[0])
        x = np.zeros((patterns.shape[0], m))
        x[:, rest] = np.where(patterns, upper[rest], lower[rest])
        if r:
            rhs = b[eqs][None, :] - x[:, rest] @ a[np.ix_(rest, eqs)]
            x[:, basis] = np.linalg.solve(system, rhs.T).T

        ok = np.all(x >= lower - slack, axis=1) & np.all(x <= upper + slack, axis=1)
        if inst.n:
            ok &= np.abs(x @ a - b).max(axis=1) <= slack * b_scale
        if not ok.any():
            continue
        values = x[ok] @ c
        k = int(np.argmin(values))
        if values[k] < best_value - 1e-12:
            best_value, best_x = float(values[k]), np.clip(x[ok][k], lower, upper)

    return OracleLp(best_value, best_x, "enumeration", size)


def lp_reference(inst):
    """Optimum through ``scipy.optimize.linprog`` with the HiGHS backend."""
    a = inst.a.to_dense()
    bounds = list(zip(inst.lower.tolist(), inst.upper.tolist()))
    if inst.n:
        res = linprog(inst.c, A_eq=a.T, b_eq=inst.b, bounds=bounds, method="highs")
    else:
        res = linprog(inst.c, bounds=bounds, method="highs")
    if res.status == 2:
        return OracleLp(np.inf, None, "highs", 0)
    if res.status != 0:
        INFO("lp_reference: HiGHS stopped with status {0} ({1})".format(res.status, res.message))
        return OracleLp(np.inf, None, "highs", 0)
    return OracleLp(float(res.fun), np.asarray(res.x), "highs", 0)


def check_lp(inst, x, delta, budget=1 << 22):
    """Check ``c^T x <= OPT + delta``, ``|A^T x - b|_inf <= delta`` and the bounds against the oracle.

    The report is named after the oracle that answered: ``lp_vertex_enumerate``
    within ``budget`` patterns, ``lp_reference`` (HiGHS) above it.
    """
    ref = lp_vertex_enumerate(inst, budget=budget)
    enumerated = ref.method == "enumeration"
    x = np.asarray(x, dtype=np.float64)
    residual = float(np.abs(inst.residual(x)).max()) if inst.n else 0.0
    in_box = bool(np.all(x >= inst.lower - 1e-12) and np.all(x <= inst.upper + 1e-12))
    gap = inst.objective(x) - ref.value
    passed = ref.feasible and gap <= delta and residual <= delta and in_box
    return OracleReport("lp_vertex_enumerate" if enumerated else "lp_reference",
                        digest(inst.c, inst.b, inst.lower, inst.upper), ref.value, delta, passed,
                        details={"method": ref.method, "enumerated": enumerated, "n_patterns": ref.n_patterns,
                                 "budget": budget, "oracle_gap": gap, "residual_inf": residual, "in_box": in_box})

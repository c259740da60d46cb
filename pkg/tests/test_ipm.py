import numpy as np
import pytest

from src.core.lp import LpInstance, eliminate_fixed, independent_constraints
from src.core.two_sparse import TwoSparseMatrix
from src.data.generators import random_feasible_lp, random_lossy_network
from src.ipm import (IpmTrace, ModifiedLp, barrier_eval, centrality_parameters, duality_lower_bound,
                     initialize_lp, maxflow_lp, mincost_lp, solve_generalized_maxflow, solve_generalized_mincost,
                     solve_two_sparse_lp)
from src.oracles.lp import check_lp, lp_reference, lp_vertex_enumerate
from src.utils.exceptions import ContractViolation, InfeasibleError

DELTA = 1e-3


def _simplex_lp(total=1.0):
    """``min x_0`` subject to ``x_0 + x_1 = total`` in the unit box."""
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    return LpInstance(a, [total], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])


def test_barrier_values():
    values = barrier_eval(np.array([0.5, 0.25]), np.zeros(2), np.ones(2))
    assert values.phi[0] == pytest.approx(2.0 * np.log(2.0))
    assert values.grad[0] == pytest.approx(0.0)
    assert values.hess[0] == pytest.approx(8.0)
    assert values.grad[1] == pytest.approx(1.0 / 0.75 - 4.0)
    with pytest.raises(ContractViolation):
        barrier_eval(np.array([1.0]), np.zeros(1), np.ones(1))


def test_centrality_parameters_are_small():
    params = centrality_parameters(40, 6)
    assert 0 < params.eps <= 1.0 / 80.0
    assert 0 < params.gamma < params.eps
    assert 0 < params.p < 1
    assert params.feasibility_tol == pytest.approx(params.eps * params.gamma / params.c_norm)


def test_modified_lp_starts_feasible():
    for total, n_aux in ((1.0, 2), (1.5, 1)):
        mlp = ModifiedLp(_simplex_lp(total), DELTA)
        assert mlp.n_aux == n_aux
        lp = mlp.lp
        assert np.abs(lp.residual(mlp.x_init)).max() <= 1e-12
        assert np.all(mlp.x_init > lp.lower) and np.all(mlp.x_init < lp.upper)
        assert mlp.min_singular_value() >= 1.0 - 1e-9
        assert mlp.aux_bound() > 0
        assert np.allclose(mlp.extract(mlp.x_init), [0.5, 0.5])

    with pytest.raises(ContractViolation):
        ModifiedLp(_simplex_lp(), 0.0)


def test_initialize_lp_is_centered():
    mlp, start = initialize_lp(_simplex_lp(1.5), DELTA)
    assert start.mu == pytest.approx(mlp.mu_init)
    assert start.is_centered(mlp.params)
    assert start.tau.sum() == pytest.approx(2.0 * mlp.lp.n, rel=1e-6)


def test_duality_lower_bound_is_below_optimum():
    inst = _simplex_lp()
    for z in (np.zeros(1), np.array([0.5]), np.array([-2.0])):
        assert duality_lower_bound(inst, z) <= 1e-12


def test_solve_two_sparse_lp_simplex():
    trace = IpmTrace()
    sol = solve_two_sparse_lp(_simplex_lp(), DELTA, rng=0, trace=trace)
    assert sol.x[0] <= DELTA
    assert sol.objective <= DELTA
    assert sol.residual <= DELTA
    assert len(trace) > 0
    mus = trace.series("mu")
    assert len(mus) == len(trace)
    assert all(b < a for a, b in zip(mus, mus[1:]))
    assert sol.aux_mass <= 10.0 * sol.aux_bound
    assert check_lp(_simplex_lp(), sol.x, DELTA).passed

    out = sol.as_dict(with_trace=True)
    assert out["trace"] is sol.trace
    assert "mu_final" in out


def test_solve_two_sparse_lp_random_against_reference(rng):
    data = random_feasible_lp(10, 3, rng)
    inst, fixed, offset = eliminate_fixed(data.rows, 3, data.b, data.c, data.lower, data.upper)
    sol = solve_two_sparse_lp(inst, DELTA, rng=rng)
    ref = lp_reference(inst)
    assert ref.feasible
    assert sol.objective <= ref.value + DELTA
    assert sol.residual <= DELTA
    assert np.all(sol.x >= inst.lower) and np.all(sol.x <= inst.upper)


def test_infeasible_lp_raises():
    with pytest.raises(InfeasibleError) as info:
        solve_two_sparse_lp(_simplex_lp(3.0), DELTA, rng=0)
    assert info.value.report["aux_mass"] > info.value.report["aux_bound"]


def test_lp_without_variables():
    empty = LpInstance(TwoSparseMatrix(1, []), [0.0], [], [], [])
    assert solve_two_sparse_lp(empty, DELTA).x.size == 0
    with pytest.raises(InfeasibleError):
        solve_two_sparse_lp(LpInstance(TwoSparseMatrix(1, []), [1.0], [], [], []), DELTA)


def test_mincost_single_lossy_edge():
    flow = solve_generalized_mincost(2, [0], [1], [0.5], [1.0], [2.0], [-2.0, 1.0], delta=DELTA, rng=0)
    assert flow.flow[0] == pytest.approx(2.0, abs=10 * DELTA)
    assert flow.value == pytest.approx(2.0, abs=10 * DELTA)
    assert flow.imbalance <= 10 * DELTA


def test_maxflow_single_and_two_hop():
    single = solve_generalized_maxflow(2, [0], [1], [0.5], [4.0], 0, 1, delta=DELTA, rng=0)
    assert single.value == pytest.approx(2.0, abs=10 * DELTA)

    two_hop = solve_generalized_maxflow(3, [0, 1], [1, 2], [0.5, 0.5], [4.0, 4.0], 0, 2, delta=DELTA, rng=0)
    assert two_hop.value == pytest.approx(1.0, abs=10 * DELTA)
    assert two_hop.imbalance <= 10 * DELTA
    assert "flow" in two_hop.as_dict() and "x" not in two_hop.as_dict()


def test_maxflow_lp_shape_and_errors():
    inst, fixed, inner = maxflow_lp(3, [0, 1], [1, 2], [0.5, 0.5], [4.0, 0.0], 0, 2)
    assert inner == [1]
    assert inst.m == 1 and fixed.n_fixed == 1
    with pytest.raises(ContractViolation):
        maxflow_lp(3, [0], [1], [0.5], [1.0], 1, 1)
    with pytest.raises(ContractViolation):
        maxflow_lp(3, [0], [1], [-0.5], [1.0], 0, 2)


def test_random_mincost_network_matches_reference(rng):
    net = random_lossy_network(5, 9, rng)
    inst, fixed = mincost_lp(net.n_vertices, net.tails, net.heads, net.gains, net.cost, net.capacity, net.demand)
    ref = lp_reference(inst)
    flow = solve_generalized_mincost(net.n_vertices, net.tails, net.heads, net.gains, net.cost,
                                     net.capacity, net.demand, delta=DELTA, rng=rng)
    assert ref.feasible
    assert flow.value <= ref.value + 10 * DELTA
    assert flow.imbalance <= 10 * DELTA


def _two_path(last_gain=1.0):
    """Two routes from vertex 0 to vertex 2: 0 -> 1 -> 2 with gains (1, 0.5) and
    0 -> 3 -> 2 with gains (0.5, ``last_gain``)."""
    return dict(n_vertices=4, tails=[0, 1, 0, 3], heads=[1, 2, 3, 2], gains=[1.0, 0.5, 0.5, last_gain],
                cost=[1.0] * 4, capacity=[10.0] * 4, demand=[-2.0, 0.0, 1.0, 0.0])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_two_path_mincost_with_dependent_constraints(seed):
    net = _two_path()
    inst, _ = mincost_lp(**net)
    ref = lp_vertex_enumerate(inst)
    assert ref.value == pytest.approx(3.0)

    flow = solve_generalized_mincost(delta=DELTA, rng=seed, **net)
    assert flow.lp.counters["dropped_constraints"] == 1
    assert flow.value == pytest.approx(3.0, abs=10 * DELTA)
    assert flow.imbalance <= 10 * DELTA
    # the lower route costs 1.5 per unit sent, the upper one 2
    assert flow.flow[2] == pytest.approx(2.0, abs=2e-2)
    assert flow.flow[0] == pytest.approx(0.0, abs=2e-2)


def test_two_path_mincost_single_feasible_point():
    net = _two_path(last_gain=0.9)
    inst, _ = mincost_lp(**net)
    assert lp_reference(inst).value == pytest.approx(4.0)

    flow = solve_generalized_mincost(delta=DELTA, rng=0, **net)
    assert flow.lp.counters["dropped_constraints"] == 0
    assert flow.value == pytest.approx(4.0, abs=10 * DELTA)
    assert flow.imbalance <= 10 * DELTA


def test_inconsistent_dependent_constraints_are_infeasible():
    # both columns read x_0 + x_1, with different right-hand sides
    a = TwoSparseMatrix(2, [[(0, 1.0), (1, 1.0)], [(0, 1.0), (1, 1.0)]])
    inst = LpInstance(a, [1.0, 1.5], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InfeasibleError) as info:
        solve_two_sparse_lp(inst, DELTA, rng=0)
    assert info.value.report["rank"] == 1


def test_independent_constraints_keeps_full_rank_instances(rng):
    data = random_feasible_lp(12, 4, rng)
    inst, _, _ = eliminate_fixed(data.rows, 4, data.b, data.c, data.lower, data.upper)
    reduced, kept = independent_constraints(inst)
    assert kept.shape[0] == np.linalg.matrix_rank(inst.a.to_dense())
    assert np.allclose(reduced.a.to_dense(), inst.a.to_dense()[:, kept])
    assert np.allclose(reduced.b, inst.b[kept])


@pytest.mark.parametrize("seed", [7, 21, 22, 23, 24])
def test_random_lp_30x10_against_reference(seed):
    data = random_feasible_lp(30, 10, np.random.default_rng(seed))
    inst, _, _ = eliminate_fixed(data.rows, 10, data.b, data.c, data.lower, data.upper)
    ref = lp_reference(inst)
    assert ref.feasible

    sol = solve_two_sparse_lp(inst, DELTA, rng=seed)
    assert sol.residual <= DELTA
    assert ref.value - DELTA <= sol.objective <= ref.value + DELTA
    assert np.all(sol.x >= inst.lower) and np.all(sol.x <= inst.upper)


def test_objective_error_shrinks_with_delta():
    data = random_feasible_lp(20, 6, np.random.default_rng(5))
    inst, _, _ = eliminate_fixed(data.rows, 6, data.b, data.c, data.lower, data.upper)
    ref = lp_reference(inst)

    deltas = [1e-1, 1e-2, 1e-3, 1e-4]
    errors = [solve_two_sparse_lp(inst, d, rng=0).objective - ref.value for d in deltas]
    for d, err in zip(deltas, errors):
        assert err <= d
    for k in range(1, len(deltas)):
        assert errors[k] <= errors[k - 1] + deltas[k]

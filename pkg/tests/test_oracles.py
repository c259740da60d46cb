import numpy as np
import pytest

from src.core.lp import LpInstance, eliminate_fixed
from src.core.two_sparse import TwoSparseMatrix
from src.data.generators import random_feasible_lp
from src.hh.sampling import SampledDiagonal
from src.oracles import (OracleReport, check_heavy, check_lp, digest, draw_matrix, enumeration_size,
                         exact_conductance, exact_heavy_set, lp_reference, lp_vertex_enumerate, sampling_validity)


def test_exact_heavy_set():
    a = TwoSparseMatrix.from_dense(np.eye(2))
    assert exact_heavy_set(a, [0.0, 0.0], 1e-9).size == 0
    assert list(exact_heavy_set(a, [3.0, 1.0], 2.0)) == [0]
    assert list(exact_heavy_set(np.eye(2), [3.0, 1.0], 2.0, g=[0.5, 3.0])) == [1]


def test_check_heavy_reports_differences():
    a = TwoSparseMatrix.from_dense(np.eye(3))
    h = [3.0, 1.0, 2.5]
    ok = check_heavy([0, 2], a, h, 2.0)
    assert ok.passed
    bad = check_heavy([0, 1], a, h, 2.0)
    assert not bad.passed
    assert list(bad.details["missing"]) == [2] and list(bad.details["extra"]) == [1]
    assert bad.as_dict()["oracle"] == "exact_heavy_set"


def test_vertex_enumeration_small_lp():
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    inst = LpInstance(a, [1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    ref = lp_vertex_enumerate(inst)
    assert ref.method == "enumeration"
    assert ref.value == pytest.approx(0.0)
    assert np.allclose(ref.x, [0.0, 1.0])
    assert ref.n_patterns == enumeration_size(inst) == 4


def test_vertex_enumeration_infeasible_and_budget():
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    infeasible = LpInstance(a, [3.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    assert not lp_vertex_enumerate(infeasible).feasible
    assert not lp_reference(infeasible).feasible

    feasible = LpInstance(a, [1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    assert lp_vertex_enumerate(feasible, budget=1).method == "highs"


def test_vertex_enumeration_agrees_with_highs(rng):
    data = random_feasible_lp(9, 3, rng)
    inst, _, _ = eliminate_fixed(data.rows, 3, data.b, data.c, data.lower, data.upper)
    ref = lp_vertex_enumerate(inst)
    highs = lp_reference(inst)
    assert ref.method == "enumeration"
    assert ref.value == pytest.approx(highs.value, abs=1e-6)


def test_check_lp():
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    inst = LpInstance(a, [1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    assert check_lp(inst, [1e-6, 1.0 - 1e-6], 1e-5).passed
    report = check_lp(inst, [0.5, 0.5], 1e-5)
    assert not report.passed
    assert report.details["oracle_gap"] == pytest.approx(0.5)
    assert not check_lp(inst, [0.0, 1.5], 1e-5).passed


def test_check_lp_records_which_oracle_answered():
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    inst = LpInstance(a, [1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    x = [1e-6, 1.0 - 1e-6]

    small = check_lp(inst, x, 1e-5)
    assert small.name == "lp_vertex_enumerate"
    assert small.details["enumerated"] and small.details["n_patterns"] == 4

    capped = check_lp(inst, x, 1e-5, budget=1)
    assert capped.passed
    assert capped.name == "lp_reference"
    assert capped.details["method"] == "highs" and not capped.details["enumerated"]
    assert capped.details["n_patterns"] == 4 and capped.details["budget"] == 1


def test_vertex_enumeration_hands_30_variables_to_highs(rng):
    data = random_feasible_lp(30, 10, rng)
    inst, _, _ = eliminate_fixed(data.rows, 10, data.b, data.c, data.lower, data.upper)
    ref = lp_vertex_enumerate(inst)
    assert ref.method == "highs"
    assert ref.n_patterns == enumeration_size(inst) > 1 << 22
    assert ref.value == pytest.approx(lp_reference(inst).value)


def test_exact_conductance_alias(k4):
    assert exact_conductance(k4) == pytest.approx(2.0 / 3.0)


def test_sampling_validity_on_identity_sampler():
    def draw():
        return SampledDiagonal(np.arange(4), np.ones(4), 4)

    report = sampling_validity(draw, 4, 20, a_bar=np.eye(4), sigma=np.ones(4))
    assert report.passed
    assert report.details["matrix_fraction"] == 1.0
    assert report.details["out_of_band"] == 0


def test_sampling_validity_detects_bias(rng):
    def draw():
        return SampledDiagonal(np.arange(3), np.full(3, 2.0) * (rng.random(3) < 0.25), 3)

    report = sampling_validity(draw, 3, 400)
    assert not report.passed
    assert report.details["mean_deviation"] > 0.3


def test_draw_matrix_and_digest():
    draws = [SampledDiagonal(np.array([1]), np.array([2.0]), 1), SampledDiagonal.empty()]
    assert np.allclose(draw_matrix(draws, 3), [[0.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
    assert digest([1.0, 2.0], 3) == digest([1.0, 2.0], 3)
    assert digest([1.0, 2.0], 3) != digest([1.0, 2.0], 4)
    assert repr(OracleReport("x", "d", 0.0, 0.0, True)) == "OracleReport(x, passed=True)"

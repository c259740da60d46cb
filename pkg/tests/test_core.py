import numpy as np
import pytest

from src.core.graph import LossyGraph, LossyLaplacianView, gain_incidence, imbalance
from src.core.lp import LpInstance, eliminate_fixed
from src.core.two_sparse import TwoSparseMatrix
from src.utils.exceptions import ContractViolation


def test_incidence_rows_and_laplacian():
    g = LossyGraph(3, [0, 1], [1, 2], eta=[2.0, 1.0], weight=[1.0, 3.0])
    view = LossyLaplacianView(g)
    b = view.B.toarray()
    assert np.allclose(b, [[-2.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
    assert np.allclose(view.L.toarray(), b.T @ np.diag([1.0, 3.0]) @ b)
    assert np.allclose(view.d, [4.0, 1.0 + 3.0, 3.0])
    assert np.allclose(view.d_smooth, [1.0, 4.0, 3.0])


def test_smoothed_normalized_laplacian_is_singular(k4):
    values = np.linalg.eigvalsh(LossyLaplacianView(k4).N_smooth)
    assert abs(values[0]) < 1e-12
    assert np.allclose(values[1:], 4.0 / 3.0)


def test_graph_rejects_bad_edges():
    with pytest.raises(ContractViolation):
        LossyGraph(2, [0], [0])
    with pytest.raises(ContractViolation):
        LossyGraph(2, [0], [1], eta=[0.5])
    with pytest.raises(ContractViolation):
        LossyGraph(2, [0], [1], weight=[0.0])
    with pytest.raises(ContractViolation):
        LossyGraph(2, [0], [2])


def test_from_gains_matches_gain_form_imbalance():
    tails, heads, gains = [0, 1, 2], [1, 2, 0], [0.5, 2.0, 1.0]
    g, row_scale = LossyGraph.from_gains(3, tails, heads, gains)
    assert g.eta.min() >= 1.0
    f = np.array([1.0, 2.0, 3.0])
    expected = gain_incidence(3, tails, heads, gains).T @ f
    assert np.allclose(imbalance(g, f, row_scale), expected)


def test_balance_and_components(k4):
    assert k4.balance() == 0.0
    g = LossyGraph(4, [0, 2], [1, 3], eta=[1.5, 1.0])
    assert g.balance() == pytest.approx(0.5)
    n_comp, _ = g.components()
    assert n_comp == 2
    assert not g.is_connected()
    assert k4.is_connected()


def test_two_sparse_matvec_and_holes():
    a = TwoSparseMatrix(3, [[(0, 1.0), (2, -2.0)], [(1, 3.0)]])
    h = np.array([1.0, 2.0, 3.0])
    assert np.allclose(a.matvec(h), [-5.0, 6.0])
    assert np.allclose(a.rmatvec([1.0, 1.0]), [1.0, 3.0, -2.0])

    i = a.insert_row([(1, 1.0), (2, 1.0)])
    assert i == 2
    a.delete_row(0)
    assert a.n_rows == 3
    assert list(a.alive_rows()) == [1, 2]
    assert np.allclose(a.matvec(h), [0.0, 6.0, 5.0])
    assert np.allclose(a.to_dense(), [[0, 0, 0], [0, 3, 0], [0, 1, 1]])


def test_two_sparse_rejects_wide_rows():
    a = TwoSparseMatrix(3)
    with pytest.raises(ContractViolation):
        a.insert_row([(0, 1.0), (1, 1.0), (2, 1.0)])
    with pytest.raises(ContractViolation):
        a.insert_row([(0, 0.0)])
    with pytest.raises(ContractViolation):
        a.insert_row([(3, 1.0)])


def test_two_sparse_gram_and_bound():
    dense = np.array([[1.0, -0.25], [0.0, 4.0], [2.0, 0.0]])
    a = TwoSparseMatrix.from_dense(dense)
    w = np.array([1.0, 2.0, 0.5])
    assert np.allclose(a.gram(w).toarray(), dense.T @ np.diag(w) @ dense)
    assert a.magnitude_bound() == pytest.approx(4.0)


def test_lp_instance_rejects_flat_box():
    a = TwoSparseMatrix(1, [[(0, 1.0)], [(0, 1.0)]])
    with pytest.raises(ContractViolation):
        LpInstance(a, [1.0], [0.0, 0.0], [0.0, 1.0], [1.0, 1.0])


def test_eliminate_fixed_substitutes_values():
    rows = [[(0, 1.0)], [(0, 1.0)], [(0, 2.0)]]
    inst, fixed, offset = eliminate_fixed(rows, 1, [3.0], [1.0, 2.0, 5.0], [0.0, 0.0, 1.0], [2.0, 2.0, 1.0])
    assert inst.m == 2
    assert fixed.n_fixed == 1
    assert offset == pytest.approx(5.0)
    assert np.allclose(inst.b, [1.0])
    x = fixed.expand(np.array([0.5, 0.5]))
    assert np.allclose(x, [0.5, 0.5, 1.0])

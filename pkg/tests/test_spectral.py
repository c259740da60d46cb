import numpy as np
import pytest

from src.core.graph import LossyGraph, LossyLaplacianView
from src.data.generators import balanced_orientation, random_regular_expander
from src.spectral.certificates import (alignment_bounds, cheeger_bounds, conductance_exact, eta_to_not_distance,
                                       fiedler_sweep, sweep_cut_volumes, sweep_growth,
                                       pencil_extremes, positive_eigvec, rank_one_pencil, sandwich_check,
                                       spectral_gap, uniformity_ratio)
from src.spectral.eigs import dense_eigs, sign_normalize
from src.spectral.power import least_eigvec, power_iteration
from src.utils.exceptions import ContractViolation


def test_dense_eigs_identity():
    pairs = dense_eigs(np.eye(3))
    assert np.allclose(pairs.values, 1.0)
    assert np.allclose(pairs.vectors.T @ pairs.vectors, np.eye(3))


def test_dense_eigs_reconstructs_random_symmetric(rng):
    x = rng.standard_normal((12, 12))
    m = x + x.T
    pairs = dense_eigs(m)
    assert np.allclose(pairs.values, np.linalg.eigvalsh(m), atol=1e-9)
    recon = pairs.vectors @ np.diag(pairs.values) @ pairs.vectors.T
    assert np.allclose(recon, m, atol=1e-8)
    for k in range(12):
        v = pairs.vectors[:, k]
        assert np.linalg.norm(m @ v - pairs.values[k] * v) <= 1e-8 * np.abs(pairs.values).max()


def test_dense_eigs_rejects_asymmetric():
    with pytest.raises(ContractViolation):
        dense_eigs(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sign_normalize_first_entry_positive():
    v = sign_normalize(np.array([0.0, -1.0, 2.0]))
    assert np.allclose(v, [0.0, 1.0, -2.0])


def test_power_iteration_top_eigenvalue(rng):
    result = power_iteration(np.diag([1.0, 2.0, 5.0]), 1e-10, seed=rng)
    assert result.converged
    assert result.rayleigh == pytest.approx(5.0, rel=1e-8)
    assert abs(abs(result.v[2]) - 1.0) < 1e-6


def test_least_eigvec_rayleigh_within_factor_two(lossy_k4, rng):
    view = LossyLaplacianView(lossy_k4)
    eps_ad = 1e-2
    lam1 = np.linalg.eigvalsh(view.normalized(eps_ad=eps_ad))[0]
    result = least_eigvec(view, view.d, eps_ad, seed=rng)
    assert result.precondition_ok
    assert abs(np.linalg.norm(result.v) - 1.0) < 1e-9
    assert result.rayleigh <= 2.0 * lam1


def test_sandwich_certificate_with_exact_eigvec(lossy_k4):
    view = LossyLaplacianView(lossy_k4)
    eps_ad = 1e-3
    pairs = dense_eigs(view.normalized(eps_ad=eps_ad))
    cert = sandwich_check(view, view.d, pairs.vectors[:, 0], pairs.values[0], eps_ad, 1.0, 1.0)
    assert cert.certified
    assert cert.witness is None
    assert cert.c_lo == pytest.approx(1.0, abs=1e-6)
    assert cert.c_hi <= cert.bound_hi
    assert cert.as_dict()["certified"]


def test_sandwich_rejects_non_unit_vector(k4):
    view = LossyLaplacianView(k4)
    with pytest.raises(ContractViolation):
        sandwich_check(view, view.d, np.ones(4), 0.1, 0.0, 1.0, 1.0)


def test_uniformity_ratio_regular_graph(k4, cycle6):
    assert uniformity_ratio(LossyLaplacianView(k4)) == pytest.approx(1.0, abs=1e-8)
    assert uniformity_ratio(LossyLaplacianView(cycle6)) == pytest.approx(1.0, abs=1e-8)


def test_uniformity_ratio_grows_with_balance(rng):
    base = random_regular_expander(16, 4, rng)
    small = balanced_orientation(base, 1e-4, np.random.default_rng(1))
    large = balanced_orientation(base, 1e-2, np.random.default_rng(1))
    r_small = uniformity_ratio(LossyLaplacianView(small))
    r_large = uniformity_ratio(LossyLaplacianView(large))
    assert 1.0 <= r_small <= r_large


def test_conductance_of_small_graphs(k4, cycle6):
    assert conductance_exact(k4) == pytest.approx(2.0 / 3.0)
    assert conductance_exact(cycle6) == pytest.approx(1.0 / 3.0)
    phi, side = fiedler_sweep(cycle6)
    assert phi == pytest.approx(1.0 / 3.0)
    assert side.shape[0] == 3


def test_cheeger_inequality_holds(cycle6, k4):
    assert cheeger_bounds(cycle6).holds
    assert cheeger_bounds(k4).holds


def test_pencils():
    lo, hi = pencil_extremes(2.0 * np.eye(3), np.eye(3))
    assert lo == pytest.approx(2.0)
    assert hi == pytest.approx(2.0)

    v = np.array([1.0, 0.0, 0.0])
    lo, hi = rank_one_pencil(v, v, 0.3)
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(1.0)


def test_eta_to_not_distance_and_gap(k4, lossy_k4):
    assert eta_to_not_distance(LossyLaplacianView(k4)) == pytest.approx(0.0, abs=1e-12)
    assert eta_to_not_distance(LossyLaplacianView(lossy_k4)) <= 10.0 * lossy_k4.balance()
    assert spectral_gap(LossyLaplacianView(k4)) == pytest.approx(4.0 / 3.0)


def test_alignment_bounds_diagonal():
    m = np.diag([0.0, 1.0, 2.0])
    bounds = alignment_bounds(m, [1.0, 0.1, 0.0])
    assert bounds.lhs == pytest.approx(0.01 / 1.01)
    assert bounds.rayleigh == pytest.approx(0.01 / 1.01)
    assert bounds.forward_ok and bounds.backward_ok
    assert not bounds.degenerate

    with pytest.raises(ContractViolation):
        alignment_bounds(np.eye(1), [1.0])


def test_alignment_bounds_on_lossy_laplacian(lossy_k4, rng):
    n = LossyLaplacianView(lossy_k4).normalized()
    for _ in range(5):
        bounds = alignment_bounds(n, rng.standard_normal(4))
        assert bounds.forward_ok and bounds.backward_ok


def test_sweep_cut_volumes_and_growth(k4):
    view = LossyLaplacianView(k4)
    z = np.array([1.0, 0.0, 0.0, 0.0])
    assert sweep_cut_volumes(view, z, 0.5) == pytest.approx(3.0)
    assert sweep_cut_volumes(view, z, 0.5, direction="below") == pytest.approx(9.0)

    # a set holding the whole volume makes no claim
    assert not sweep_growth(view, np.ones(4), 1.0, 2.0 / 3.0, 0.0).applicable

    step = sweep_growth(view, z, 1.0, 2.0 / 3.0, 0.0)
    assert step.applicable
    assert step.zeta_next == pytest.approx(1.0)
    assert step.required == pytest.approx(4.0)
    assert not step.holds

    with pytest.raises(ContractViolation):
        sweep_cut_volumes(view, z, 0.5, direction="sideways")


@pytest.fixture(scope="module")
def base64():
    return random_regular_expander(64, 8, np.random.default_rng(2024))


def _balanced64(base, beta):
    return LossyLaplacianView(balanced_orientation(base, beta, np.random.default_rng(3)))


def test_least_eigvec_on_balanced_expander(base64):
    view = _balanced64(base64, 1e-4)
    eps_ad = 1e-6
    lam1 = dense_eigs(view.normalized(eps_ad=eps_ad)).values[0]
    result = least_eigvec(view, view.d, eps_ad, seed=7)
    assert result.precondition_ok
    assert result.rayleigh <= 2.0 * lam1

    cert = sandwich_check(view, view.d, result.v, result.rayleigh, eps_ad, 2.0, 1.0)
    assert cert.certified
    assert cert.bound_lo <= cert.c_lo and cert.c_hi <= cert.bound_hi


def test_sandwich_fails_for_random_vector(base64):
    view = _balanced64(base64, 1e-4)
    eps_ad = 1e-6
    v = np.random.default_rng(5).standard_normal(64)
    v /= np.linalg.norm(v)
    lam = float(v @ view.normalized(eps_ad=eps_ad) @ v)
    cert = sandwich_check(view, view.d, v, lam, eps_ad, 1.0, 1.0)
    assert not cert.certified
    assert cert.witness is not None
    assert abs(np.linalg.norm(cert.witness) - 1.0) < 1e-9


def test_uniformity_ratio_on_nearly_lossless_expander(base64):
    assert 1.0 <= uniformity_ratio(_balanced64(base64, 1e-5)) <= 1.01

    ratios = [uniformity_ratio(_balanced64(base64, beta)) - 1.0 for beta in (1e-5, 1e-4, 1e-3)]
    assert ratios[0] <= ratios[1] <= ratios[2]


@pytest.mark.parametrize("beta", [1e-5, 1e-4, 1e-3, 1e-2])
def test_eta_to_not_distance_over_beta_grid(base64, beta):
    assert eta_to_not_distance(_balanced64(base64, beta)) <= 10.0 * beta


def test_spectral_gap_bound(base64):
    view = _balanced64(base64, 1e-4)
    lambda2_smooth = dense_eigs(view.N_smooth).values[1]
    assert spectral_gap(view, view.d, eps_ad=1e-6) >= lambda2_smooth / 4.0


def test_diagonal_scaling_moves_eigenvalues_boundedly(base64, rng):
    m = _balanced64(base64, 1e-3).N
    base_values = dense_eigs(m).values
    for _ in range(3):
        d = np.diag(rng.uniform(0.5, 2.0, size=64))
        values = dense_eigs(d @ m @ d).values
        # 1/2 <= D <= 2
        assert np.all(values >= base_values / 4.0 - 1e-8)
        assert np.all(values <= 4.0 * base_values + 1e-8)


def test_rank_one_pencils_for_close_vectors(rng):
    for _ in range(20):
        v1 = rng.standard_normal(10)
        v1 /= np.linalg.norm(v1)
        v2 = v1 + rng.uniform(0.0, 0.3) * rng.standard_normal(10)
        v2 /= np.linalg.norm(v2)
        lam = rng.uniform(1e-3, 1.0)
        c = max(1.0, (1.0 - (v1 @ v2) ** 2) / lam)
        lo, hi = rank_one_pencil(v1, v2, lam)
        assert lo >= 1.0 / (3.0 * c) - 1e-8
        assert hi <= 3.0 * c + 1e-8


def test_positive_eigvec_is_strictly_positive_and_simple(base64):
    view = _balanced64(base64, 1e-4)
    v, lam1 = positive_eigvec(view)
    assert v.min() > 0.0
    assert dense_eigs(view.N).values[1] > lam1 + 1e-6

    split = LossyGraph(4, [0, 2], [1, 3])
    with pytest.raises(ContractViolation):
        positive_eigvec(LossyLaplacianView(split))

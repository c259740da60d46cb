import math

import numpy as np

from .report import OracleReport, digest

__all__ = [
    'draw_matrix',
    'sampling_validity'
]


def draw_matrix(draws, n_rows):
    """Stack sampled diagonals into an ``N x n_rows`` array of their entries."""
    out = np.zeros((len(draws), n_rows))
    for k, r in enumerate(draws):
        out[k, r.edges] = r.values
    return out


def sampling_validity(draw, n_rows, n_draws, a_bar=None, sigma=None, active=None, eta=0.5, tol=0.05,
                      max_matrix_checks=200):
    """Empirical check of a random diagonal ``R`` against the sampler contract.

    Args:
        draw: callable returning one SampledDiagonal per call.
        a_bar: dense ``T^{1/2} G A`` for the matrix-approximation bullet.
        sigma: exact leverage scores of ``a_bar`` for the second-moment bullet.
        active: rows expected in the support (rows of positive weight); all by default.

    Checks ``|mean(R_ii) - 1| <= tol``, ``E[R_ii R_jj] <= 2 (1 + tol)`` for
    ``i != j``, ``E[R_ii^2] sigma_i <= 2 (1 + tol)`` and the fraction of draws
    with ``a_bar^T R a_bar`` within ``e^{+-eta}`` of ``a_bar^T a_bar``.
    """
    draws = [draw() for _ in range(n_draws)]
    r = draw_matrix(draws, n_rows)
    active = np.arange(n_rows) if active is None else np.asarray(active, dtype=np.int64)
    r_act = r[:, active]

    mean = r_act.mean(axis=0)
    mean_dev = float(np.abs(mean - 1.0).max()) if active.size else 0.0

    second = (r_act.T @ r_act) / n_draws
    off = second - np.diag(np.diag(second))
    covariance = float(off.max()) if active.size > 1 else 0.0

    # 4-sigma band for each mean, using the empirical variance
    band = 4.0 * np.sqrt(r_act.var(axis=0) / n_draws)
    out_of_band = int((np.abs(mean - 1.0) > np.maximum(band, 1e-12)).sum())

    details = {"mean_deviation": mean_dev, "covariance_max": covariance, "out_of_band": out_of_band}
    passed = mean_dev <= tol and covariance <= 2.0 * (1.0 + tol)

    if sigma is not None:
        moment = float((np.diag(second) * np.asarray(sigma)[active]).max()) if active.size else 0.0
        details["second_moment_max"] = moment
        passed = passed and moment <= 2.0 * (1.0 + tol)

    if a_bar is not None:
        a_bar = np.asarray(a_bar, dtype=np.float64)
        gram = a_bar.T @ a_bar
        # whiten with the exact Gram matrix; eigenvalues give the pencil
        w, v = np.linalg.eigh(gram)
        keep = w > 1e-12 * max(w.max(), 1e-300)
        whiten = v[:, keep] / np.sqrt(w[keep])[None, :]
        checks = min(n_draws, max_matrix_checks)
        good = 0
        for k in range(checks):
            sampled = whiten.T @ (a_bar.T * r[k][None, :]) @ a_bar @ whiten
            ev = np.linalg.eigvalsh(0.5 * (sampled + sampled.T))
            if ev.size == 0 or (ev.min() >= math.exp(-eta) and ev.max() <= math.exp(eta)):
                good += 1
        details["matrix_fraction"] = good / max(checks, 1)
        details["matrix_checks"] = checks

    return OracleReport("sampling_validity", digest(n_rows, n_draws, eta), 1.0, tol, passed, details=details)

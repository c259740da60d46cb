from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from src.core.graph import LossyGraph, LossyLaplacianView
from src.utils.common_utils import as_generator
from src.utils.exceptions import ContractViolation
from src.utils.logging import WARN, DEBUG
from .eigs import dense_eigs, sign_normalize

__all__ = [
    'SpectralCertificate',
    'AlignmentBounds',
    'CheegerBounds',
    'SweepGrowth',
    'normalized_laplacian',
    'sandwich_check',
    'positive_eigvec',
    'uniformity_ratio',
    'sweep_cut_volumes',
    'sweep_growth',
    'sweep_profile',
    'fiedler_sweep',
    'conductance_exact',
    'alignment_bounds',
    'eta_to_not_distance',
    'spectral_gap',
    'pencil_extremes',
    'rank_one_pencil',
    'cheeger_bounds',
    'expansion_certificate'
]

_TOL = 1e-9


@dataclass
class SpectralCertificate:
    """Outcome of a sandwich check.

    ``c_lo``/``c_hi`` are the measured extreme eigenvalues of ``M`` relative to
    ``I - (1 - rayleigh) v v^T``; ``bound_lo``/``bound_hi`` are the constants
    that have to be met for the certificate to hold.
    """
    name: str
    lambda1: float
    lambda2: float
    lambda_n: float
    v_min: np.ndarray
    rayleigh: float
    c_lo: float
    c_hi: float
    bound_lo: float
    bound_hi: float
    certified: bool
    witness: Optional[np.ndarray] = None

    def as_dict(self):
        return {
            "name": self.name,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda_n": self.lambda_n,
            "rayleigh": self.rayleigh,
            "c_lo": self.c_lo,
            "c_hi": self.c_hi,
            "bound_lo": self.bound_lo,
            "bound_hi": self.bound_hi,
            "certified": self.certified
        }


class AlignmentBounds(NamedTuple):
    lhs: float  # 1 - (v^T v_1)^2
    bound_forward: float  # v^T M v / lambda_2
    bound_backward: float  # lambda_1 + lhs * lambda_n
    rayleigh: float
    forward_ok: bool
    backward_ok: bool
    degenerate: bool


class CheegerBounds(NamedTuple):
    conductance: float
    lambda2: float
    lower: float  # phi^2 / 2
    upper: float  # 2 phi
    holds: bool


class SweepGrowth(NamedTuple):
    zeta: float
    zeta_next: float
    volume: float
    volume_next: float
    required: float
    applicable: bool
    holds: bool


def normalized_laplacian(view, d=None, eps_ad=0.0):
    return view.normalized(d=d, eps_ad=eps_ad)


def pencil_extremes(a, b, tol=1e-12):
    """Smallest and largest ``t`` with ``t_lo B <= A <= t_hi B`` in the Loewner order.

    ``B`` must be PSD. When ``B`` is singular the pencil is restricted to its range;
    if ``A`` does not vanish on the kernel of ``B`` the upper end is infinite.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)

    pairs = dense_eigs(b)
    scale = max(np.abs(pairs.values).max(), 1e-300)
    keep = pairs.values > tol * scale

    if pairs.values.min() < -1e3 * tol * scale:
        raise ContractViolation("pencil_extremes needs a PSD right-hand matrix "
                                "(smallest eigenvalue {0:.3e}).".format(pairs.values.min()))

    basis = pairs.vectors[:, keep] / np.sqrt(pairs.values[keep])[None, :]
    reduced = basis.T @ a @ basis
    values = dense_eigs(0.5 * (reduced + reduced.T)).values

    hi = float(values[-1])
    lo = float(values[0])

    kernel = pairs.vectors[:, ~keep]
    if kernel.shape[1]:
        leak = np.linalg.norm(a @ kernel)
        if leak > 1e3 * tol * max(np.linalg.norm(a), 1.0):
            hi = np.inf

    return lo, hi


def rank_one_pencil(v1, v2, lam):
    """Pencil extremes of ``I - (1-lam) v2 v2^T`` against ``I - (1-lam) v1 v1^T``."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    eye = np.eye(v1.shape[0])
    m1 = eye - (1.0 - lam) * np.outer(v1, v1)
    m2 = eye - (1.0 - lam) * np.outer(v2, v2)
    return pencil_extremes(m2, m1)


def _smoothed_lambda2(view):
    if view.n_vertices < 2:
        return 0.0
    return float(dense_eigs(view.N_smooth).values[1])


def sandwich_check(view, d, v, lam, eps_ad, c1, c2, name="M"):
    """Certify ``c_lo P <= D^{-1/2} L D^{-1/2} + eps_ad I <= c_hi P`` for
    ``P = I - (1 - lam) v v^T`` against the constants
    ``lambda2(N_smooth)^2 / (12 c1^2 c2^2)`` and ``24 c1 c2 / lambda2(N_smooth)``.

    The pencil is evaluated exactly with dense eigendecompositions. A failed
    certificate carries a witness direction where the bound breaks.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    n = view.n_vertices

    if v.shape[0] != n:
        raise ContractViolation("Vector has {0} entries, graph has {1} vertices.".format(v.shape[0], n))
    if abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise ContractViolation("sandwich_check expects a unit vector (norm {0:.6f}).".format(np.linalg.norm(v)))

    mat = view.normalized(d=d, eps_ad=eps_ad)
    pairs = dense_eigs(mat)

    lambda2_smooth = _smoothed_lambda2(view)
    if lambda2_smooth < 20.0 * view.graph.balance():
        WARN("sandwich_check: lambda2(N_smooth)={0:.3e} is below 20 beta={1:.3e}."
             .format(lambda2_smooth, 20.0 * view.graph.balance()))

    if lambda2_smooth > 0:
        bound_lo = lambda2_smooth ** 2 / (12.0 * c1 ** 2 * c2 ** 2)
        bound_hi = 24.0 * c1 * c2 / lambda2_smooth
    else:
        bound_lo, bound_hi = np.inf, 0.0

    witness = None

    if lam > 1e-10:
        # P^{-1/2} acts as 1/sqrt(lam) on v and as the identity elsewhere
        p_inv_sqrt = np.eye(n) + (1.0 / np.sqrt(lam) - 1.0) * np.outer(v, v)
        reduced = p_inv_sqrt @ mat @ p_inv_sqrt
        rpairs = dense_eigs(0.5 * (reduced + reduced.T))
        c_lo = float(rpairs.values[0])
        c_hi = float(rpairs.values[-1])
        low_dir = p_inv_sqrt @ rpairs.vectors[:, 0]
        high_dir = p_inv_sqrt @ rpairs.vectors[:, -1]
    else:
        basis = scipy.linalg.null_space(v[None, :])
        reduced = basis.T @ mat @ basis
        rpairs = dense_eigs(0.5 * (reduced + reduced.T))
        c_lo = float(rpairs.values[0]) if n > 1 else np.inf
        c_hi = float(rpairs.values[-1]) if n > 1 else 0.0
        low_dir = basis @ rpairs.vectors[:, 0] if n > 1 else v
        high_dir = basis @ rpairs.vectors[:, -1] if n > 1 else v
        if np.linalg.norm(mat @ v) > 1e-9 * max(np.linalg.norm(mat), 1.0):
            c_hi = np.inf
            high_dir = v

    lower_ok = c_lo >= bound_lo * (1.0 - _TOL)
    upper_ok = c_hi <= bound_hi * (1.0 + _TOL)

    if not lower_ok:
        witness = low_dir / max(np.linalg.norm(low_dir), 1e-300)
    elif not upper_ok:
        witness = high_dir / max(np.linalg.norm(high_dir), 1e-300)

    DEBUG(lambda: "sandwich_check[{0}]: c_lo={1:.3e} (>= {2:.3e}), c_hi={3:.3e} (<= {4:.3e})"
          .format(name, c_lo, bound_lo, c_hi, bound_hi))

    return SpectralCertificate(name=name,
                               lambda1=float(pairs.values[0]),
                               lambda2=float(pairs.values[1]) if n > 1 else float(pairs.values[0]),
                               lambda_n=float(pairs.values[-1]),
                               v_min=pairs.vectors[:, 0].copy(),
                               rayleigh=float(v @ mat @ v),
                               c_lo=c_lo, c_hi=c_hi,
                               bound_lo=bound_lo, bound_hi=bound_hi,
                               certified=bool(lower_ok and upper_ok),
                               witness=witness)


def positive_eigvec(view, d=None):
    """Bottom eigenvector of ``D^{-1/2} L D^{-1/2}``, entrywise positive on a connected graph."""
    if not view.graph.is_connected():
        raise ContractViolation("The bottom eigenvector is only positive on connected graphs.")

    pairs = dense_eigs(view.normalized(d=d))
    v = sign_normalize(pairs.vectors[:, 0])

    if v.min() <= 0.0:
        raise ContractViolation("Bottom eigenvector is not strictly positive (min entry {0:.3e})."
                                .format(v.min()), witness=v)
    return v, float(pairs.values[0])


def uniformity_ratio(view, d=None):
    """``max z / min z`` for ``z = v_min / sqrt(d)``."""
    d = view.d if d is None else np.asarray(d, dtype=np.float64)
    v, _ = positive_eigvec(view, d)
    z = v / np.sqrt(d)
    return float(z.max() / z.min())


def sweep_cut_volumes(view, z, zeta, direction="above"):
    """Smoothed volume of ``{i: z_i >= zeta}`` (``above``) or ``{i: z_i <= zeta}`` (``below``)."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if direction == "above":
        mask = z >= zeta
    elif direction == "below":
        mask = z <= zeta
    else:
        raise ContractViolation("Invalid sweep direction '{0}' provided. Only 'above' and 'below' "
                                "are supported.".format(direction))
    return float(view.d_smooth[mask].sum())


def sweep_growth(view, z, zeta, phi, lam, c=1.0, direction="above"):
    """Evaluate one step of volume growth of a threshold set of ``z``.

    Moving the threshold from ``zeta`` to ``(1 - 10 (beta + c lam) / phi) zeta``
    (above) or ``(1 + 10 beta / phi) zeta`` (below) grows the smoothed volume by
    a factor ``1 + phi / 2`` whenever the starting set holds at most half of the
    volume (and, above, ``max z <= 2 zeta``).
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    beta = view.graph.balance()
    total = float(view.d_smooth.sum())

    if direction == "above":
        zeta_next = (1.0 - 10.0 * (beta + c * lam) / phi) * zeta
    else:
        zeta_next = (1.0 + 10.0 * beta / phi) * zeta

    volume = sweep_cut_volumes(view, z, zeta, direction)
    volume_next = sweep_cut_volumes(view, z, zeta_next, direction)
    required = (1.0 + phi / 2.0) * volume

    applicable = zeta > 0 and volume <= 0.5 * total
    if direction == "above":
        applicable = applicable and z.max() <= 2.0 * zeta

    holds = (not applicable) or volume_next >= required * (1.0 - _TOL)

    return SweepGrowth(float(zeta), float(zeta_next), volume, volume_next, required,
                       bool(applicable), bool(holds))


def _undirected(g):
    """Vertices with incident edges, relabelled tails/heads and smoothed degrees."""
    active = np.zeros(g.n_vertices, dtype=bool)
    active[g.tails] = True
    active[g.heads] = True
    ids = np.nonzero(active)[0]
    local = -np.ones(g.n_vertices, dtype=np.int64)
    local[ids] = np.arange(ids.shape[0])
    tails = local[g.tails]
    heads = local[g.heads]
    deg = np.zeros(ids.shape[0])
    np.add.at(deg, tails, g.weight)
    np.add.at(deg, heads, g.weight)
    return ids, tails, heads, deg


def sweep_profile(g, order):
    """Conductance of every proper prefix of ``order`` in the smoothed graph.

    ``order`` lists vertex ids (of vertices with incident edges). Entry ``k`` of
    the result belongs to the prefix of length ``k + 1``.
    """
    order = np.asarray(order, dtype=np.int64)
    k = order.shape[0]
    pos = np.full(g.n_vertices, -1, dtype=np.int64)
    pos[order] = np.arange(k)

    deg = np.zeros(g.n_vertices)
    np.add.at(deg, g.tails, g.weight)
    np.add.at(deg, g.heads, g.weight)

    # edge (a, b) is cut by prefixes of length in (min pos, max pos]
    pa = pos[g.tails]
    pb = pos[g.heads]
    inside = (pa >= 0) & (pb >= 0)
    lo = np.minimum(pa, pb)[inside]
    hi = np.maximum(pa, pb)[inside]
    diff = np.zeros(k + 1)
    np.add.at(diff, lo + 1, g.weight[inside])
    np.add.at(diff, hi + 1, -g.weight[inside])
    cut = np.cumsum(diff)[1:k]

    vol = np.cumsum(deg[order])[:k - 1]
    total = deg[order].sum()
    denom = np.minimum(vol, total - vol)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(denom > 0, cut / np.where(denom > 0, denom, 1.0), np.inf)
    return phi


def _exhaustive_conductance(tails, heads, weight, deg):
    k = deg.shape[0]
    best = np.inf
    # the last vertex stays outside S, which covers every unordered partition
    n_masks = 1 << (k - 1)
    bit = np.arange(k - 1, dtype=np.int64)
    chunk = 1 << 14
    total = deg.sum()
    for start in range(1, n_masks, chunk):
        masks = np.arange(start, min(start + chunk, n_masks), dtype=np.int64)
        bits = ((masks[:, None] >> bit[None, :]) & 1).astype(bool)
        bits = np.concatenate([bits, np.zeros((bits.shape[0], 1), dtype=bool)], axis=1)
        vol = bits @ deg
        cut = (bits[:, tails] ^ bits[:, heads]) @ weight
        denom = np.minimum(vol, total - vol)
        valid = denom > 0
        if valid.any():
            best = min(best, float((cut[valid] / denom[valid]).min()))
    return best


def _fiedler_order(tails, heads, weight, deg):
    k = deg.shape[0]
    lap = np.zeros((k, k))
    np.add.at(lap, (tails, heads), -weight)
    np.add.at(lap, (heads, tails), -weight)
    lap[np.arange(k), np.arange(k)] += deg
    s = 1.0 / np.sqrt(deg)
    _, vecs = scipy.linalg.eigh(lap * s[:, None] * s[None, :], subset_by_index=[0, min(1, k - 1)])
    return np.argsort(vecs[:, -1] * s, kind="stable")


def fiedler_sweep(g):
    """Best sweep cut along the Fiedler vector of the smoothed graph.

    Returns:
        (conductance, vertex ids of the prefix side)
    """
    if g.n_edges == 0:
        raise ContractViolation("Sweep cut of a graph without edges is undefined.")

    ids, tails, heads, deg = _undirected(g)
    order = _fiedler_order(tails, heads, g.weight, deg)
    profile = sweep_profile(LossyGraph(ids.shape[0], tails, heads, weight=g.weight), order)
    k = int(np.argmin(profile))
    return float(profile[k]), ids[order[:k + 1]]


def conductance_exact(g, exhaustive_limit=16, n_samples=4096, seed=None):
    """Conductance ``min_S w(E(S, V-S)) / min(vol S, vol V-S)`` of the smoothed graph.

    Up to ``exhaustive_limit`` vertices with incident edges every subset is
    tried. Beyond that the minimum over ``n_samples`` random subsets and all
    Fiedler sweep cuts is returned, which is an upper bound.
    """
    if g.n_edges == 0:
        raise ContractViolation("Conductance of a graph without edges is undefined.")

    _, tails, heads, deg = _undirected(g)
    k = deg.shape[0]
    weight = g.weight

    if k <= exhaustive_limit:
        return _exhaustive_conductance(tails, heads, weight, deg)

    DEBUG(lambda: "conductance_exact: {0} vertices, sampling {1} subsets".format(k, n_samples))

    local = LossyGraph(k, tails, heads, weight=weight)
    best = float(sweep_profile(local, _fiedler_order(tails, heads, weight, deg)).min())

    rng = as_generator(seed)
    total = deg.sum()
    for start in range(0, n_samples, 1024):
        size = min(1024, n_samples - start)
        bits = rng.random((size, k)) < rng.random((size, 1))
        vol = bits @ deg
        cut = (bits[:, tails] ^ bits[:, heads]) @ weight
        denom = np.minimum(vol, total - vol)
        valid = denom > 0
        if valid.any():
            best = min(best, float((cut[valid] / denom[valid]).min()))
    return best


def alignment_bounds(m, v, tol=1e-9):
    """Check ``1 - (v^T v_1)^2 <= v^T M v / lambda_2`` and ``v^T M v <= lambda_1 + (1 - (v^T v_1)^2) lambda_n``."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    v = v / np.linalg.norm(v)

    pairs = dense_eigs(m)
    values = pairs.values
    if values.shape[0] < 2:
        raise ContractViolation("alignment_bounds needs at least two dimensions.")

    lam1, lam2, lam_n = float(values[0]), float(values[1]), float(values[-1])
    scale = max(abs(lam_n), 1.0)

    lhs = float(max(0.0, 1.0 - (v @ pairs.vectors[:, 0]) ** 2))
    rayleigh = float(v @ m @ v)

    degenerate = lam2 - lam1 <= tol * scale or lam2 <= tol * scale
    if degenerate:
        WARN("alignment_bounds: lambda_2 - lambda_1 = {0:.3e}, alignment is ill-defined.".format(lam2 - lam1))

    bound_forward = rayleigh / lam2 if lam2 > tol * scale else np.inf
    bound_backward = lam1 + lhs * lam_n

    return AlignmentBounds(lhs, bound_forward, bound_backward, rayleigh,
                           bool(lhs <= bound_forward + 1e-8),
                           bool(rayleigh <= bound_backward + 1e-8 * scale),
                           bool(degenerate))


def eta_to_not_distance(view):
    """``||N_G - N_smooth||_2``."""
    diff = view.N - view.N_smooth
    values = dense_eigs(0.5 * (diff + diff.T)).values
    return float(np.abs(values).max()) if values.size else 0.0


def spectral_gap(view, d=None, eps_ad=0.0):
    """``lambda_2 - lambda_1`` of ``D^{-1/2} L D^{-1/2} + eps_ad I``."""
    values = dense_eigs(view.normalized(d=d, eps_ad=eps_ad)).values
    if values.shape[0] < 2:
        return 0.0
    return float(values[1] - values[0])


def cheeger_bounds(g):
    phi = conductance_exact(g)
    lambda2 = _smoothed_lambda2(LossyLaplacianView(g.smoothed()))
    lower = phi ** 2 / 2.0
    upper = 2.0 * phi
    holds = lower - _TOL <= lambda2 <= upper + _TOL
    return CheegerBounds(phi, lambda2, lower, upper, bool(holds))


def expansion_certificate(g, exhaustive_limit=16):
    """Lower bound on the conductance of the smoothed graph.

    Exact by enumeration on small graphs, ``lambda2(N_smooth) / 2`` otherwise.
    """
    if g.n_edges == 0:
        return 0.0

    _, tails, heads, deg = _undirected(g)
    k = deg.shape[0]

    if k <= exhaustive_limit:
        return _exhaustive_conductance(tails, heads, g.weight, deg)

    n_comp, _ = LossyGraph(k, tails, heads).components()
    if n_comp > 1:
        return 0.0

    lap = np.zeros((k, k))
    np.add.at(lap, (tails, heads), -g.weight)
    np.add.at(lap, (heads, tails), -g.weight)
    lap[np.arange(k), np.arange(k)] += deg
    s = 1.0 / np.sqrt(deg)
    values = scipy.linalg.eigvalsh(lap * s[:, None] * s[None, :], subset_by_index=[1, 1])
    return float(max(values[0], 0.0) / 2.0)

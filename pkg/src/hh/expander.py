import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.core.graph import LossyGraph, LossyLaplacianView
from src.spectral.power import least_eigvec
from src.utils.common_utils import as_generator
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG
from .parameters import HhParameters, default_parameters, precondition_bound
from .sampling import PartialSumTree, SampledDiagonal, draw_count, jl_matrix, jl_rows

__all__ = [
    'ExpanderHhState'
]

# degree proxy D may overestimate the current degrees by this factor
_DEGREE_SLACK = 9.0
# resets per cause stay below this multiple of log(1/eps_ad) and log(m)
_RESET_CONSTANT = 20.0


def _counters():
    return {
        "resets_initialize": 0,
        "resets_query": 0,
        "resets_delete": 0,
        "queries": 0,
        "candidates": 0,
        "jl_violations": 0,
        "renorm_violations": 0,
        "precondition_violations": 0,
        "power_cap_hits": 0
    }


class ExpanderHhState(object):
    """Heavy hitters, norm estimates and importance samples of ``B_G h`` on a
    balanced lossy expander that only loses edges.

    The structure keeps an approximate bottom eigenvector ``v`` of
    ``D^{-1/2} L_G D^{-1/2} + eps_ad I`` with ``D`` the smoothed degrees at
    construction. ``B_G D^{-1/2}`` maps the ``v``-component of
    ``g = D^{1/2} h`` to a multiple of the stored edge vector ``u``, so heavy
    entries of that part are a prefix of ``u`` sorted by magnitude. The
    orthogonal part is heavy only next to vertices where it is large. A JL
    sketch of ``B_G`` detects queries where the orthogonal part is too large
    for the current ``v``, which triggers a recomputation.

    Vertices and edges keep the ids of the graph the state was built from;
    ``h`` is indexed by those vertex ids.

    Args:
        graph: LossyGraph holding the expander's edges; its weights are ignored.
        eps_ad: regularization added to the normalized Laplacian.
        tau: nonnegative per-edge values for the third sampling term.
        params: HhParameters, derived from the edge count when omitted.
        edge_ids: external ids of the edges, ``range(m)`` by default.
        rng: numpy Generator or seed.
    """

    def __init__(self, graph, eps_ad, tau=None, params=None, edge_ids=None, rng=None):

        m = graph.n_edges

        if params is None:
            params = HhParameters(*default_parameters(m))
        self.params = params
        self.phi = params.phi
        self.eps_ad = float(eps_ad)

        if self.eps_ad < 0:
            raise ContractViolation("eps_ad must be nonnegative, got {0}.".format(eps_ad))

        self.n_global = graph.n_vertices
        self.edge_ids = np.arange(m, dtype=np.int64) if edge_ids is None \
            else np.asarray(edge_ids, dtype=np.int64).reshape(-1)
        if self.edge_ids.shape[0] != m:
            raise ContractViolation("One external id per edge is required.")
        self._pos = {int(e): k for k, e in enumerate(self.edge_ids)}
        if len(self._pos) != m:
            raise ContractViolation("External edge ids must be distinct.")

        self.vertices = np.unique(np.concatenate([graph.tails, graph.heads]))
        n = self.vertices.shape[0]
        local = np.full(self.n_global, -1, dtype=np.int64)
        local[self.vertices] = np.arange(n)

        self.tails = local[graph.tails]
        self.heads = local[graph.heads]
        self.eta = graph.eta.copy()

        # exact filtering relies on multipliers below 1.5 (threshold eps/6)
        if m and self.eta.max() >= 1.5:
            raise ContractViolation("Expander structures need multipliers below 1.5, got {0:.4f}."
                                    .format(self.eta.max()))

        self.B = sp.csr_matrix((np.concatenate([np.ones(m), -self.eta]),
                                (np.concatenate([np.arange(m), np.arange(m)]),
                                 np.concatenate([self.heads, self.tails]))), shape=(m, n))

        self.D = (np.bincount(self.tails, minlength=n) + np.bincount(self.heads, minlength=n)).astype(np.float64)
        self._sqrt_d = np.sqrt(self.D)
        self.degree = self.D.copy()

        self.alive = np.ones(m, dtype=bool)
        self.vertex_alive = self.D > 0
        self.n_alive = m

        ends = np.concatenate([self.tails, self.heads])
        self._inc_edges = np.concatenate([np.arange(m), np.arange(m)])[np.argsort(ends, kind="stable")]
        self._inc_ptr = np.concatenate([[0], np.cumsum(np.bincount(ends, minlength=n))])

        tau = np.zeros(m) if tau is None else np.asarray(tau, dtype=np.float64).reshape(-1)
        if tau.shape[0] != m or (m and tau.min() < 0):
            raise ContractViolation("tau needs one nonnegative entry per edge.")
        self.tau = tau.copy()
        self._tau_tree = PartialSumTree(self.tau)

        self._rng = as_generator(rng)
        self.counters = _counters()

        self.preconditions_ok = self._check_preconditions(graph)

        self._reset("initialize")

    def _check_preconditions(self, graph):
        m = graph.n_edges
        bound = precondition_bound(self.phi, m)
        beta = graph.balance()

        if beta <= bound and self.eps_ad <= bound:
            return True

        message = ("Expander structure outside its guarantees: beta={0:.3e}, eps_ad={1:.3e}, "
                   "phi^2/(1e5 log^2 m)={2:.3e}.".format(beta, self.eps_ad, bound))
        if self.params.strict_preconditions:
            raise ContractViolation(message)

        DEBUG(message)
        self.counters["precondition_violations"] += 1
        return False

    # ================================================================================== #
    # Reset

    def _local_graph(self):
        ids = np.nonzero(self.vertex_alive)[0]
        edges = np.nonzero(self.alive)[0]
        remap = np.full(self.vertices.shape[0], -1, dtype=np.int64)
        remap[ids] = np.arange(ids.shape[0])
        sub = LossyGraph(ids.shape[0], remap[self.tails[edges]], remap[self.heads[edges]], eta=self.eta[edges])
        return sub, ids, edges

    def _smoothed_lambda2(self, view):
        if view.n_vertices < 2 or view.n_vertices > self.params.dense_limit:
            return None
        return float(scipy.linalg.eigvalsh(view.N_smooth, subset_by_index=[1, 1])[0])

    def _reset(self, cause):
        self.counters["resets_" + cause] += 1

        n = self.vertices.shape[0]
        m = self.edge_ids.shape[0]
        self.v = np.zeros(n)
        self._u_base = np.zeros(m)
        self._u_scale = 1.0

        sub, ids, edges = self._local_graph()

        if edges.size:
            view = LossyLaplacianView(sub)
            result = least_eigvec(view, self.D[ids], self.eps_ad, c=_DEGREE_SLACK,
                                  lambda2=self._smoothed_lambda2(view), seed=self._rng,
                                  restarts=self.params.power_restarts,
                                  dense_limit=self.params.dense_limit)
            if not result.converged:
                self.counters["power_cap_hits"] += 1
            v = result.v / np.linalg.norm(result.v)
            self.v[ids] = v if v.sum() >= 0 else -v

            self._u_base[edges] = self.B[edges] @ (self.v / np.where(self.D > 0, self._sqrt_d, 1.0))

        self._pi = edges[np.argsort(-np.abs(self._u_base[edges]), kind="stable")]
        self._abs_sorted = np.abs(self._u_base[self._pi])
        self._u2_tree = PartialSumTree(self._u_base ** 2)

        k = jl_rows(max(edges.size, 1), max(ids.size, 1), self.params.jl_constant, self.params.jl_max_rows)
        self.J = jl_matrix(k, m, self._rng)
        self.M = np.ascontiguousarray((self.B[edges].T @ self.J[:, edges].T).T)

        self._m_at_reset = edges.size
        self._rayleigh_reset = self.rayleigh()

        DEBUG(lambda: "expander reset ({0}): n={1}, m={2}, k={3}, rayleigh={4:.3e}"
              .format(cause, ids.size, edges.size, k, self._rayleigh_reset))

    # ================================================================================== #
    # Helpers

    @property
    def n_edges(self):
        return self.n_alive

    def edges(self):
        """External ids of the live edges."""
        return self.edge_ids[self.alive]

    @property
    def u(self):
        return self._u_base * self._u_scale

    def rayleigh(self):
        """``v^T (D^{-1/2} L_G D^{-1/2} + eps_ad I) v`` for the current graph."""
        return float(self._u2_tree.total * self._u_scale ** 2 + self.eps_ad * (self.v @ self.v))

    def _local_h(self, h):
        h = np.asarray(h, dtype=np.float64).reshape(-1)
        if h.shape[0] != self.n_global:
            raise ContractViolation("Query vector has {0} entries, {1} expected.".format(h.shape[0], self.n_global))
        return h[self.vertices] * self.vertex_alive

    def edge_values(self, h):
        """Exact ``(B_G h)_e`` for all live edges, keyed by external id."""
        hl = self._local_h(h)
        live = np.nonzero(self.alive)[0]
        return self.edge_ids[live], self.B[live] @ hl

    def _split(self, hl):
        g = self._sqrt_d * hl
        alpha = float(self.v @ g)
        g_perp = g - alpha * self.v
        return alpha, g_perp

    def _preamble(self, h):
        """Split ``g = D^{1/2} h`` along ``v``; recompute ``v`` if the sketch says it is stale."""
        hl = self._local_h(h)
        alpha, g_perp = self._split(hl)

        sketch = float(np.sum((self.M @ hl) ** 2))
        t = (sketch + self.eps_ad * float(np.sum(self.D * hl ** 2))) / self.phi ** 4
        perp_sq = float(g_perp @ g_perp)

        if self.params.debug_checks:
            exact = float(np.linalg.norm(self.B[self.alive] @ hl))
            if exact > 0 and not exact / 1.02 <= np.sqrt(sketch) <= 1.02 * exact:
                self.counters["jl_violations"] += 1

        if perp_sq > 0 and perp_sq >= self.params.reset_constant * t:
            self._reset("query")
            alpha, g_perp = self._split(hl)

        return hl, alpha, g_perp

    def _incident(self, verts):
        if verts.size == 0:
            return np.zeros(0, dtype=np.int64)
        chunks = [self._inc_edges[self._inc_ptr[i]:self._inc_ptr[i + 1]] for i in verts]
        out = np.concatenate(chunks)
        return out[self.alive[out]]

    def _position(self, e):
        k = self._pos.get(int(e))
        if k is None or not self.alive[k]:
            raise ContractViolation("Edge {0} is not a live edge of this structure.".format(e))
        return k

    # ================================================================================== #
    # Operations

    def query_heavy(self, h, eps):
        """All live edges with ``|(B_G h)_e| >= eps``, as sorted external ids."""
        if eps <= 0:
            raise ContractViolation("Heavy hitter threshold must be positive, got {0}.".format(eps))

        self.counters["queries"] += 1
        if self.n_alive == 0:
            return np.zeros(0, dtype=np.int64)

        hl, alpha, g_perp = self._preamble(h)

        found = []
        scale = abs(alpha) * self._u_scale
        if scale > 0:
            threshold = 0.5 * eps / scale
            count = int(np.searchsorted(-self._abs_sorted, -threshold, side="right"))
            prefix = self._pi[:count]
            found.append(prefix[self.alive[prefix]])

        perp = np.abs(g_perp) / np.where(self.D > 0, self._sqrt_d, 1.0)
        heavy_vertices = np.nonzero(self.vertex_alive & (perp >= eps / self.params.vertex_constant))[0]
        found.append(self._incident(heavy_vertices))

        candidates = np.unique(np.concatenate(found))
        self.counters["candidates"] += int(candidates.size)

        if candidates.size == 0:
            return np.zeros(0, dtype=np.int64)

        values = self.B[candidates] @ hl
        return np.sort(self.edge_ids[candidates[np.abs(values) >= eps]])

    def norm_estimate(self, h):
        """Upper estimate ``10 (|g^v|^2 |u|^2 + |g^perp|^2)`` of ``|B_G h|^2``."""
        if self.n_alive == 0:
            return 0.0
        _, alpha, g_perp = self._preamble(h)
        u_sq = self._u2_tree.total * self._u_scale ** 2
        return float(10.0 * (alpha ** 2 * u_sq + g_perp @ g_perp))

    def _q(self, positions, alpha, g_perp, c1, c2, c3):
        inv_d = 1.0 / np.where(self.D > 0, self.D, 1.0)
        a = self.tails[positions]
        b = self.heads[positions]
        quad = (alpha ** 2 * self.u[positions] ** 2
                + g_perp[a] ** 2 * inv_d[a] + g_perp[b] ** 2 * inv_d[b])
        return 5.0 * c1 * quad + c2 + c3 * self.tau[positions]

    def sampling_probabilities(self, h, c1, c2, c3):
        """Per-edge ``(q_e, p_e = min(1, q_e))`` for the current state, keyed by external id.

        Does not recompute ``v``; call after :meth:`sample` to get the
        probabilities a sample was drawn with.
        """
        hl = self._local_h(h)
        alpha, g_perp = self._split(hl)
        live = np.nonzero(self.alive)[0]
        q = self._q(live, alpha, g_perp, c1, c2, c3)
        return self.edge_ids[live], q, np.minimum(1.0, q)

    def sample(self, h, c0, c1, c2, c3):
        """Random diagonal ``R = C0^{-1} sum_j diag(x_j)`` over the live edges.

        Draws ``C0 * S`` times (randomized rounding) from the three-part mixture
        with total mass ``S = S1 + S2 + S3``. Draws of an edge with ``q_e > 1``
        are kept with probability ``1 / q_e`` so that every edge enters with
        probability ``p_e / S`` and ``E[R] = I`` on edges with ``p_e > 0``.
        """
        for name, value in (("C0", c0), ("C1", c1), ("C2", c2), ("C3", c3)):
            if value < 0:
                raise ContractViolation("Sampling constant {0} must be nonnegative, got {1}.".format(name, value))

        if self.n_alive == 0:
            return SampledDiagonal.empty()

        _, alpha, g_perp = self._preamble(h)
        rng = self._rng

        s1 = 5.0 * c1 * alpha ** 2 * self._u_scale ** 2 * self._u2_tree.total
        vertex_mass = np.where(self.vertex_alive,
                               5.0 * c1 * g_perp ** 2 * self.degree / np.where(self.D > 0, self.D, 1.0), 0.0)
        s2 = float(vertex_mass.sum())
        s3 = c2 * self.n_alive + c3 * self._tau_tree.total
        total = s1 + s2 + s3

        if total <= 0 or c0 == 0:
            return SampledDiagonal.empty()

        n_draws = draw_count(c0 * total, rng)
        r = rng.random(n_draws) * total
        n1 = int(np.sum(r < s1))
        n2 = int(np.sum((r >= s1) & (r < s1 + s2)))
        n3 = n_draws - n1 - n2

        picked = [self._u2_tree.sample(rng, n1) if n1 else np.zeros(0, dtype=np.int64)]

        if n2:
            verts = rng.choice(vertex_mass.shape[0], size=n2, p=vertex_mass / s2)
            live = np.nonzero(self.alive)[0]
            ends = np.concatenate([self.tails[live], self.heads[live]])
            order = np.argsort(ends, kind="stable")
            inc = np.concatenate([live, live])[order]
            ptr = np.concatenate([[0], np.cumsum(np.bincount(ends, minlength=self.vertices.shape[0]))])
            offset = np.floor(rng.random(n2) * self.degree[verts]).astype(np.int64)
            picked.append(inc[ptr[verts] + offset])

        if n3:
            uniform = rng.random(n3) * s3 < c2 * self.n_alive
            n_uniform = int(uniform.sum())
            live = np.nonzero(self.alive)[0]
            picked.append(live[rng.integers(0, live.shape[0], size=n_uniform)])
            if n3 - n_uniform:
                picked.append(self._tau_tree.sample(rng, n3 - n_uniform))

        positions = np.concatenate(picked).astype(np.int64)
        q = self._q(positions, alpha, g_perp, c1, c2, c3)
        p = np.minimum(1.0, q)
        keep = rng.random(positions.shape[0]) * q < p

        return SampledDiagonal.from_draws(self.edge_ids[positions[keep]], 1.0 / p[keep], c0, n_draws)

    def scale_tau(self, e, b):
        if b < 0 or not np.isfinite(b):
            raise ContractViolation("tau entries must be finite and nonnegative, got {0}.".format(b))
        k = self._position(e)
        self.tau[k] = b
        self._tau_tree.update(k, b)

    def delete(self, edges):
        """Remove the edges ``edges`` (external ids); drop vertices left without edges."""
        positions = np.unique(np.array([self._position(e) for e in edges], dtype=np.int64))
        if positions.size == 0:
            return

        heads = self.heads[positions]
        tails = self.tails[positions]
        cols = self.J[:, positions]
        np.add.at(self.M.T, heads, -cols.T)
        np.add.at(self.M.T, tails, (cols * self.eta[positions][None, :]).T)

        self.alive[positions] = False
        self.n_alive -= positions.size
        for k in positions:
            self._u2_tree.update(int(k), 0.0)
            self._tau_tree.update(int(k), 0.0)
        self.tau[positions] = 0.0

        np.subtract.at(self.degree, heads, 1.0)
        np.subtract.at(self.degree, tails, 1.0)

        touched = np.unique(np.concatenate([heads, tails]))
        dropped = touched[(self.degree[touched] <= 0) & self.vertex_alive[touched]]

        if dropped.size:
            self.vertex_alive[dropped] = False
            self.M[:, dropped] = 0.0
            self.v[dropped] = 0.0
            norm = float(np.linalg.norm(self.v))
            if norm <= 0.0:
                self._reset("delete")
                return
            self.v /= norm
            self._u_scale /= norm

            if self.rayleigh() > 3.0 * self._rayleigh_reset * (1.0 + 1e-9):
                self.counters["renorm_violations"] += 1
                DEBUG(lambda: "renormalized Rayleigh quotient {0:.3e} exceeds 3x {1:.3e}"
                      .format(self.rayleigh(), self._rayleigh_reset))

        if 0 < self.n_alive <= self._m_at_reset / 2.0:
            self._reset("delete")

    # ================================================================================== #
    # Audits

    def degree_violations(self):
        """Vertices whose degree is positive but below a ninth of the initial one."""
        bad = self.vertex_alive & (self.degree < self.D / 9.0)
        return self.vertices[bad]

    def counter_invariants(self):
        """Bounds on the violation and reset counters accumulated since construction."""
        m_init = max(self.edge_ids.shape[0], 2)
        log_inv_eps = max(math.log(1.0 / max(self.eps_ad, 1e-300)), 1.0)
        return {
            "renorm_bound": self.counters["renorm_violations"] == 0,
            "jl_fidelity": self.counters["jl_violations"] == 0,
            "query_resets": self.counters["resets_query"] <= _RESET_CONSTANT * log_inv_eps,
            "delete_resets": self.counters["resets_delete"] <= _RESET_CONSTANT * math.log(m_init),
        }

    def check_invariants(self, tol=1e-9):
        """Recompute the stored quantities from scratch and report mismatches."""
        live = np.nonzero(self.alive)[0]
        out = {}
        out["v_unit"] = self.n_alive == 0 or abs(np.linalg.norm(self.v) - 1.0) <= tol
        abs_u = np.abs(self.u[self._pi[self.alive[self._pi]]])
        out["pi_sorted"] = bool(np.all(np.diff(abs_u) <= tol * max(abs_u.max(initial=0.0), 1.0)))
        exact_m = np.asarray((self.B[live].T @ self.J[:, live].T).T)
        out["sketch_exact"] = bool(np.allclose(self.M, exact_m, atol=1e-9 * max(1.0, np.abs(exact_m).max(initial=0.0))))
        out["degree_rule"] = self.degree_violations().size == 0
        out.update(self.counter_invariants())
        return out

    def __repr__(self):
        return "ExpanderHhState(n={0}, m={1}, resets={2})".format(
            int(self.vertex_alive.sum()), self.n_alive,
            self.counters["resets_initialize"] + self.counters["resets_query"] + self.counters["resets_delete"])

import math
from typing import NamedTuple

import numpy as np

from src.core.graph import LossyGraph
from src.utils.common_utils import as_generator, spawn_generators
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG, WARN
from .balanced import BalancedHhState
from .parameters import HhParameters, default_parameters
from .sampling import SampledDiagonal

__all__ = [
    'BucketKey',
    'BucketMap',
    'GeneralLossyHh'
]


class BucketKey(NamedTuple):
    bit: int
    side: int
    eta_class: int
    weight_class: int


class BucketMap(object):
    """Maps a weighted lossy edge to the bucket whose vertex scaling makes it balanced.

    ``bit`` is the lowest bit in which the endpoint ids differ; the vertices
    whose id has that bit equal to ``side`` are the tail side. Scaling the
    tail side by ``(1 + beta)^{-eta_class}`` brings the multiplier into
    ``[1, 1 + beta]``. ``weight_class`` is ``k`` with
    ``g in (g_ref 2^{k-1}, g_ref 2^k]``.
    """

    def __init__(self, n_vertices, beta, g_ref):
        self.n_vertices = int(n_vertices)
        self.beta = float(beta)
        self.g_ref = float(g_ref)
        self._log_base = math.log1p(self.beta) if self.beta > 0 else 0.0
        self._ids = np.arange(self.n_vertices, dtype=np.int64)

    def eta_class(self, eta):
        if self._log_base == 0.0:
            if eta > 1.0 + 1e-12:
                raise ContractViolation("Multiplier {0} needs beta > 0 to be bucketed.".format(eta))
            return 0
        j = int(math.floor(math.log(eta) / self._log_base))
        # floor of a rounded logarithm may land one class off
        while j > 0 and eta * (1.0 + self.beta) ** (-j) < 1.0:
            j -= 1
        while eta * (1.0 + self.beta) ** (-j) > 1.0 + self.beta:
            j += 1
        return j

    def weight_class(self, g):
        return int(math.ceil(math.log2(g / self.g_ref) - 1e-12))

    def key(self, tail, head, eta, g):
        diff = int(tail) ^ int(head)
        if diff == 0:
            raise ContractViolation("Self-loop at vertex {0}.".format(tail))
        bit = (diff & -diff).bit_length() - 1
        side = (int(tail) >> bit) & 1
        return BucketKey(bit, side, self.eta_class(eta), self.weight_class(g))

    def scaled_eta(self, key, eta):
        return min(max(eta * (1.0 + self.beta) ** (-key.eta_class), 1.0), 1.0 + self.beta)

    def scaled_query(self, key, h):
        """``S^{-1} h`` for the bucket's vertex scaling."""
        if key.eta_class == 0:
            return h
        on_side = ((self._ids >> key.bit) & 1) == key.side
        return np.where(on_side, h * (1.0 + self.beta) ** key.eta_class, h)


class GeneralLossyHh(object):
    """Heavy hitters and samples of ``G B h`` for a weighted lossy graph with
    arbitrary multipliers.

    Edges are grouped by :class:`BucketMap`; every bucket is a
    :class:`BalancedHhState` over the rescaled graph, queried with the
    rescaled vector and a threshold adjusted to the bucket's weight class.

    Args:
        n_vertices: size of the vertex id space.
        params: HhParameters shared by all buckets.
        g_ref: reference weight, the smallest initial weight by default.
        rng: numpy Generator or seed.
    """

    def __init__(self, n_vertices, params=None, g_ref=1.0, rng=None):

        if params is None:
            params = HhParameters(*default_parameters(max(n_vertices, 2)))
        self.n_vertices = int(n_vertices)
        self.params = params
        self.buckets = {}
        self.bucket_map = BucketMap(n_vertices, params.beta, g_ref)

        self._tail = {}
        self._head = {}
        self._eta = {}
        self.weight = {}
        self.tau = {}
        self._key = {}
        self._next_id = 0

        self._rng = as_generator(rng)
        self.counters = {"weight_rebuilds": 0, "bucket_moves": 0}
        self.last_probabilities = None
        self._warned = False

    @classmethod
    def initialize(cls, n_vertices, tails, heads, eta, weight, tau=None, params=None, edge_ids=None, rng=None):
        """Build all buckets at once from edge arrays."""
        tails = np.asarray(tails, dtype=np.int64)
        m = tails.shape[0]
        weight = np.asarray(weight, dtype=np.float64)
        if m and (not np.all(np.isfinite(weight)) or weight.min() <= 0):
            raise ContractViolation("Edge weights must be positive and finite.")

        g_ref = float(weight.min()) if m else 1.0
        state = cls(n_vertices, params=params, g_ref=g_ref, rng=rng)

        edge_ids = np.arange(m, dtype=np.int64) if edge_ids is None else np.asarray(edge_ids, dtype=np.int64)
        tau = np.zeros(m) if tau is None else np.asarray(tau, dtype=np.float64)
        for k in range(m):
            state._store(int(edge_ids[k]), int(tails[k]), int(heads[k]), float(eta[k]), float(weight[k]), float(tau[k]))
        state._build_buckets()
        return state

    # ================================================================================== #
    # Bookkeeping

    @property
    def n_edges(self):
        return len(self._tail)

    def edges(self):
        return np.array(sorted(self._tail), dtype=np.int64)

    def _store(self, e, tail, head, eta, g, tau):
        if e in self._tail:
            raise ContractViolation("Edge id {0} is already present.".format(e))
        if not (0 <= tail < self.n_vertices and 0 <= head < self.n_vertices) or tail == head:
            raise ContractViolation("Invalid endpoints ({0}, {1}) provided.".format(tail, head))
        if not np.isfinite(eta) or eta < 1.0:
            raise ContractViolation("Multipliers must be finite and >= 1, got {0}.".format(eta))
        if not np.isfinite(g) or g <= 0:
            raise ContractViolation("Edge weights must be positive, got {0}.".format(g))
        if tau < 0:
            raise ContractViolation("tau entries must be nonnegative, got {0}.".format(tau))

        self._tail[e] = tail
        self._head[e] = head
        self._eta[e] = eta
        self.weight[e] = g
        self.tau[e] = tau
        self._key[e] = self.bucket_map.key(tail, head, eta, g)
        self._next_id = max(self._next_id, e + 1)

    def _check(self, e):
        if e not in self._tail:
            raise ContractViolation("Edge {0} is not in the structure.".format(e))

    def _weight_drift(self, g):
        ratio = self.params.weight_ratio
        return g > self.bucket_map.g_ref * ratio or g < self.bucket_map.g_ref / ratio

    def _build_buckets(self):
        groups = {}
        for e in sorted(self._tail):
            groups.setdefault(self._key[e], []).append(e)

        keys = sorted(groups)
        rngs = spawn_generators(self._rng, len(keys))
        self.buckets = {}
        for key, rng in zip(keys, rngs):
            ids = groups[key]
            graph = LossyGraph(self.n_vertices, [self._tail[e] for e in ids], [self._head[e] for e in ids],
                               eta=[self.bucket_map.scaled_eta(key, self._eta[e]) for e in ids])
            self.buckets[key] = BalancedHhState.initialize(graph, params=self.params,
                                                           tau=[self.tau[e] for e in ids], edge_ids=ids, rng=rng)

        DEBUG(lambda: "general structure: m={0} edges in {1} buckets".format(self.n_edges, len(self.buckets)))

    def rebuild(self):
        """Re-bucket every edge against the smallest current weight."""
        self.counters["weight_rebuilds"] += 1
        if self.weight:
            self.bucket_map = BucketMap(self.n_vertices, self.params.beta, min(self.weight.values()))
        for e in self._tail:
            self._key[e] = self.bucket_map.key(self._tail[e], self._head[e], self._eta[e], self.weight[e])
        self._build_buckets()

    def _bucket(self, key):
        bucket = self.buckets.get(key)
        if bucket is None:
            bucket = BalancedHhState(self.n_vertices, params=self.params, rng=spawn_generators(self._rng, 1)[0])
            self.buckets[key] = bucket
        return bucket

    # ================================================================================== #
    # Operations

    def insert(self, tail, head, eta, g, edge_id=None, tau=0.0):
        """Insert edge ``1_head - eta 1_tail`` with weight ``g``; returns its id."""
        e = self._next_id if edge_id is None else int(edge_id)
        drift = self._weight_drift(float(g))
        self._store(e, int(tail), int(head), float(eta), float(g), float(tau))
        if drift:
            self.rebuild()
            return e

        key = self._key[e]
        self._bucket(key).insert(int(tail), int(head), self.bucket_map.scaled_eta(key, float(eta)),
                                 edge_id=e, tau=float(tau))
        return e

    def delete(self, e):
        e = int(e)
        self._check(e)
        key = self._key.pop(e)
        self.buckets[key].delete(e)
        if self.buckets[key].n_edges == 0:
            del self.buckets[key]
        for store in (self._tail, self._head, self._eta, self.weight, self.tau):
            del store[e]

    def scale(self, e, b):
        """Set the weight of edge ``e`` to ``b``; moves the edge when its weight class changes."""
        e = int(e)
        self._check(e)
        b = float(b)
        if not np.isfinite(b) or b <= 0:
            raise ContractViolation("Edge weights must be positive, got {0}.".format(b))

        self.weight[e] = b
        if self._weight_drift(b):
            self.rebuild()
            return

        key = self._key[e]
        new_key = self.bucket_map.key(self._tail[e], self._head[e], self._eta[e], b)
        if new_key == key:
            return

        self.counters["bucket_moves"] += 1
        self.buckets[key].delete(e)
        if self.buckets[key].n_edges == 0:
            del self.buckets[key]
        self._key[e] = new_key
        self._bucket(new_key).insert(self._tail[e], self._head[e], self.bucket_map.scaled_eta(new_key, self._eta[e]),
                                     edge_id=e, tau=self.tau[e])

    def scale_tau(self, e, b):
        e = int(e)
        self._check(e)
        self.buckets[self._key[e]].scale_tau(e, b)
        self.tau[e] = float(b)

    def _h(self, h):
        h = np.asarray(h, dtype=np.float64).reshape(-1)
        if h.shape[0] != self.n_vertices:
            raise ContractViolation("Query vector has {0} entries, {1} expected.".format(h.shape[0], self.n_vertices))
        return h

    def edge_values(self, h):
        """Exact ``(ids, (G B h)_e)`` over all edges."""
        h = self._h(h)
        ids = self.edges()
        values = np.array([self.weight[e] * (h[self._head[e]] - self._eta[e] * h[self._tail[e]]) for e in ids])
        return ids, values

    def query_heavy(self, h, eps):
        """All edges with ``|g_e (B h)_e| >= eps``, as sorted ids."""
        if eps <= 0:
            raise ContractViolation("Heavy hitter threshold must be positive, got {0}.".format(eps))
        h = self._h(h)

        found = []
        for key in sorted(self.buckets):
            bucket = self.buckets[key]
            eps_k = eps * 2.0 ** (-key.weight_class) / self.bucket_map.g_ref
            ids = bucket.query_heavy(self.bucket_map.scaled_query(key, h), eps_k)
            if ids.size:
                found.append(ids)

        if not found:
            return np.zeros(0, dtype=np.int64)
        candidates = np.concatenate(found)
        keep = [abs(self.weight[e] * (h[self._head[e]] - self._eta[e] * h[self._tail[e]])) >= eps
                for e in candidates]
        return np.sort(candidates[np.asarray(keep, dtype=bool)])

    def _bucket_norms(self, h):
        scale = self.bucket_map.g_ref ** 2
        return {key: 4.0 ** key.weight_class * scale
                * self.buckets[key].norm_estimate(self.bucket_map.scaled_query(key, h))
                for key in sorted(self.buckets)}

    def norm_estimate(self, h):
        """Upper estimate of ``|G B h|_2^2`` summed over the buckets."""
        return float(sum(self._bucket_norms(self._h(h)).values()))

    def _sample_constants(self, norms, c1, c2):
        m = self.n_edges
        sqrt_n = math.sqrt(max(self.n_vertices, 1))
        total = sum(norms.values())
        scale = self.bucket_map.g_ref ** 2
        phi4 = self.params.phi ** 4
        c1_k = {key: (c1 * (m / sqrt_n) * 4.0 ** key.weight_class * scale / (phi4 * total) if total > 0 else 0.0)
                for key in norms}
        return c1_k, c2 / sqrt_n

    def sample(self, h, c0, c1, c2, c3):
        """Random diagonal over all edges; per-bucket constants follow the weight classes.

        The probabilities the sample was drawn with are kept in
        ``last_probabilities`` as ``(ids, p)``.
        """
        h = self._h(h)
        norms = self._bucket_norms(h)
        c1_k, c2_bar = self._sample_constants(norms, c1, c2)

        parts, ids, probs = [], [], []
        for key in sorted(self.buckets):
            hk = self.bucket_map.scaled_query(key, h)
            bucket = self.buckets[key]
            parts.append(bucket.sample(hk, c0, c1_k[key], c2_bar, c3))
            e, _, p = bucket.sampling_probabilities(hk, c1_k[key], c2_bar, c3)
            ids.append(e)
            probs.append(p)

        if ids:
            self.last_probabilities = (np.concatenate(ids), np.concatenate(probs))
        else:
            self.last_probabilities = (np.zeros(0, dtype=np.int64), np.zeros(0))
        return SampledDiagonal.concat(parts)

    # ================================================================================== #
    # Audits

    def counter_summary(self):
        """Counters of this layer merged with the sums over buckets and parts."""
        out = dict(self.counters)
        out["buckets"] = len(self.buckets)
        for bucket in self.buckets.values():
            for name, value in bucket.counters.items():
                if name.startswith("max_"):
                    out[name] = max(out.get(name, 0.0), value)
                else:
                    out[name] = out.get(name, 0) + value
            for structure in bucket._structures():
                for name, value in structure.counters.items():
                    out["expander_" + name] = out.get("expander_" + name, 0) + value
        if out.get("expander_precondition_violations") and not self._warned:
            self._warned = True
            WARN("{0} expander parts run outside their parameter guarantees.".format(
                out["expander_precondition_violations"]))
        return out

    def check_invariants(self, check_expansion=False):
        members = {key: set(int(e) for e in bucket.edges()) for key, bucket in self.buckets.items()}
        out = {"keys_match": all(e in members.get(k, ()) for e, k in self._key.items())}
        for key, bucket in self.buckets.items():
            for name, ok in bucket.check_invariants(check_expansion=check_expansion).items():
                out[name] = out.get(name, True) and ok
        return out

    def __repr__(self):
        return "GeneralLossyHh(n={0}, m={1}, buckets={2})".format(self.n_vertices, self.n_edges, len(self.buckets))

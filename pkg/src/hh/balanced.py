import math

import numpy as np

from src.core.graph import LossyGraph
from src.spectral.certificates import expansion_certificate
from src.utils.common_utils import as_generator, spawn_generators
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG
from .expander import ExpanderHhState
from .parameters import HhParameters, default_parameters
from .prune import PrunedSubgraph, decompose_expanders, degree_prune, expander_prune
from .sampling import SampledDiagonal

__all__ = [
    'BalancedHhState'
]

# parts are certified at this multiple of phi when they are (re)built
_REBUILD_FACTOR = 10.0
# amortized bound on the deletion counter per Delete started in a part
_CNT_RATIO = 7.0


def _counters():
    return {
        "inserts": 0,
        "deletes": 0,
        "rebuilds": 0,
        "promotions": 0,
        "destructions": 0,
        "reinsertions": 0,
        "pruned_edges": 0,
        "degree_pruned_edges": 0,
        "prune_overflows": 0,
        "max_cnt_ratio": 0.0,
        "cnt_ratio_violations": 0,
        "retired_counter_failures": 0
    }


class _Part(object):

    def __init__(self, level, sub, structure=None):
        self.level = level
        self.sub = sub
        self.structure = structure
        self.n_deletes = 0
        self.alive = True


class BalancedHhState(object):
    """Heavy hitters on a beta-balanced lossy graph under insertions and deletions.

    Edges live in expander parts grouped into levels; level ``l`` holds at
    most ``2^l`` edges. A deletion prunes its part back to an expander, moves
    the pruned edges to fresh single-edge parts and, once a part lost a
    ``phi / 10`` fraction of its edges, dissolves the part completely.

    Args:
        n_vertices: size of the vertex id space.
        params: HhParameters (``phi``, ``beta``, ``eps_ad`` and tuning constants).
        rng: numpy Generator or seed; every part draws from its own child.
    """

    def __init__(self, n_vertices, params=None, rng=None):

        if params is None:
            params = HhParameters(*default_parameters(max(n_vertices, 2)))
        if params.beta >= 0.5:
            raise ContractViolation("Balanced structures need beta < 0.5, got {0}.".format(params.beta))

        self.n_vertices = int(n_vertices)
        self.params = params
        self.phi = params.phi
        self.beta = params.beta
        self.eps_ad = params.eps_ad

        self._ends = {}
        self._eta = {}
        self.tau = {}
        self._owner = {}
        self.levels = {}
        self._next_id = 0

        self._rng = as_generator(rng)
        self.counters = _counters()

    @classmethod
    def initialize(cls, graph, params=None, tau=None, edge_ids=None, rng=None):
        """Build the structure over all edges of ``graph`` with a single rebuild."""
        m = graph.n_edges
        state = cls(graph.n_vertices, params=params, rng=rng)

        edge_ids = np.arange(m, dtype=np.int64) if edge_ids is None else np.asarray(edge_ids, dtype=np.int64)
        tau = np.zeros(m) if tau is None else np.asarray(tau, dtype=np.float64)

        if edge_ids.shape[0] != m or tau.shape[0] != m:
            raise ContractViolation("edge_ids and tau need one entry per edge.")

        for k in range(m):
            state._store(int(edge_ids[k]), int(graph.tails[k]), int(graph.heads[k]), float(graph.eta[k]), float(tau[k]))

        if m:
            level = max(1, int(math.ceil(math.log2(m))))
            state.levels[level] = [_Part(level, PrunedSubgraph(graph.tails, graph.heads, edge_ids))]
            state._rebuild(level)
        return state

    # ================================================================================== #
    # Bookkeeping

    @property
    def n_edges(self):
        return len(self._ends)

    def edges(self):
        return np.array(sorted(self._ends), dtype=np.int64)

    def parts(self):
        """Live parts as ``(level, sorted edge ids)``."""
        out = []
        for level in sorted(self.levels):
            for part in self.levels[level]:
                out.append((level, np.array(sorted(part.sub.live), dtype=np.int64)))
        return out

    def _store(self, e, a, b, eta, tau):
        if e in self._ends:
            raise ContractViolation("Edge id {0} is already present.".format(e))
        if a == b or not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
            raise ContractViolation("Invalid endpoints ({0}, {1}) provided.".format(a, b))
        if not 1.0 - 1e-12 <= eta <= 1.0 + self.beta + 1e-12:
            raise ContractViolation("Multiplier {0} outside of [1, 1 + beta] with beta={1}.".format(eta, self.beta))
        if tau < 0:
            raise ContractViolation("tau entries must be nonnegative, got {0}.".format(tau))

        self._ends[e] = (a, b)
        self._eta[e] = min(max(eta, 1.0), 1.0 + self.beta)
        self.tau[e] = tau
        self._next_id = max(self._next_id, e + 1)

    def _part_of(self, e):
        part = self._owner.get(e)
        if part is None:
            raise ContractViolation("Edge {0} is not in the structure.".format(e))
        return part

    def _lossy_graph(self, ids):
        ends = np.array([self._ends[e] for e in ids], dtype=np.int64).reshape(-1, 2)
        eta = np.array([self._eta[e] for e in ids])
        return LossyGraph(self.n_vertices, ends[:, 0], ends[:, 1], eta=eta)

    # ================================================================================== #
    # Levels

    def _retire(self, part):
        part.alive = False
        if part.structure is not None and not all(part.structure.counter_invariants().values()):
            self.counters["retired_counter_failures"] += 1

    def _rebuild(self, level):
        old = self.levels.get(level, [])
        ids = np.array(sorted(e for part in old for e in part.sub.live), dtype=np.int64)
        for part in old:
            self._retire(part)

        self.counters["rebuilds"] += 1
        self.levels[level] = []
        if ids.size == 0:
            return

        g = self._lossy_graph(ids)
        groups = decompose_expanders(g, min(1.0, _REBUILD_FACTOR * self.phi))
        rngs = spawn_generators(self._rng, len(groups))

        for group, rng in zip(groups, rngs):
            edge_ids = ids[group]
            sub = g.subgraph(group)
            structure = ExpanderHhState(sub, self.eps_ad, tau=[self.tau[int(e)] for e in edge_ids],
                                        params=self.params, edge_ids=edge_ids, rng=rng)
            part = _Part(level, PrunedSubgraph(sub.tails, sub.heads, edge_ids), structure)
            self.levels[level].append(part)
            for e in edge_ids:
                self._owner[int(e)] = part

        DEBUG(lambda: "balanced rebuild of level {0}: {1} edges in {2} parts"
              .format(level, ids.size, len(groups)))

    def _place(self, edges):
        """Put ``edges`` into new single-edge parts on level 1, promote every level
        that overflows and rebuild the level where the cascade stops, once."""
        if not edges:
            return
        for e in edges:
            a, b = self._ends[e]
            part = _Part(1, PrunedSubgraph([a], [b], [e]))
            self.levels.setdefault(1, []).append(part)
            self._owner[e] = part

        level = 1
        while True:
            parts = self.levels.get(level, [])
            if sum(p.sub.n_edges for p in parts) <= 2 ** level:
                self._rebuild(level)
                return
            self.counters["promotions"] += 1
            for p in parts:
                p.level = level + 1
            self.levels.setdefault(level + 1, []).extend(parts)
            self.levels[level] = []
            level += 1

    def _detach(self, part):
        """Remove ``part`` from its level; returns its remaining edges, now without owner."""
        self._retire(part)
        self.levels[part.level] = [p for p in self.levels[part.level] if p is not part]
        self.counters["destructions"] += 1
        remaining = sorted(part.sub.live)
        for e in remaining:
            del self._owner[e]
        return remaining

    # ================================================================================== #
    # Operations

    def insert(self, a, b, eta, edge_id=None, tau=0.0):
        """Insert edge ``(a, b)`` with multiplier ``eta`` in ``[1, 1 + beta]``; returns its id."""
        e = self._next_id if edge_id is None else int(edge_id)
        self._store(e, int(a), int(b), float(eta), float(tau))
        self.counters["inserts"] += 1
        self._place([e])
        return e

    def delete(self, e_start):
        e_start = int(e_start)
        part = self._part_of(e_start)
        sub = part.sub
        self.counters["deletes"] += 1
        part.n_deletes += 1

        phi_part = min(1.0, _REBUILD_FACTOR * self.phi)
        frontier = [e_start]
        total = []
        overflow = False

        while frontier:
            total.extend(frontier)
            sub.m_cnt += len(frontier)
            sub.remove(frontier)

            pruned = expander_prune(sub, frontier, phi_part, self.n_vertices)
            if pruned is None:
                self.counters["prune_overflows"] += 1
                overflow = True
                break

            cut, internal = pruned
            self.counters["pruned_edges"] += len(cut) + len(internal)
            total.extend(cut)
            total.extend(internal)

            frontier = degree_prune(sub, frontier + cut)
            self.counters["degree_pruned_edges"] += len(frontier)

        part.structure.delete(total)

        ratio = sub.m_cnt / part.n_deletes
        self.counters["max_cnt_ratio"] = max(self.counters["max_cnt_ratio"], ratio)
        if ratio > _CNT_RATIO:
            self.counters["cnt_ratio_violations"] += 1

        del self._owner[e_start]
        del self._ends[e_start]
        del self._eta[e_start]
        del self.tau[e_start]

        moved = total[1:]
        for e in moved:
            del self._owner[e]
        if overflow or sub.n_edges == 0 or sub.m_cnt >= self.phi / 10.0 * sub.m_init:
            moved.extend(self._detach(part))

        # one cascade for the pruned edges and a dissolved part together
        self._place(moved)
        self.counters["reinsertions"] += len(moved)

    def scale_tau(self, e, b):
        e = int(e)
        part = self._part_of(e)
        part.structure.scale_tau(e, b)
        self.tau[e] = float(b)

    def _structures(self):
        for level in sorted(self.levels):
            for part in self.levels[level]:
                yield part.structure

    def query_heavy(self, h, eps):
        """All edges with ``|(B_G h)_e| >= eps``, as sorted ids."""
        if eps <= 0:
            raise ContractViolation("Heavy hitter threshold must be positive, got {0}.".format(eps))
        found = [s.query_heavy(h, eps) for s in self._structures()]
        if not found:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(found))

    def norm_estimate(self, h):
        return float(sum(s.norm_estimate(h) for s in self._structures()))

    def sample(self, h, c0, c1, c2, c3):
        return SampledDiagonal.concat([s.sample(h, c0, c1, c2, c3) for s in self._structures()])

    def sampling_probabilities(self, h, c1, c2, c3):
        """``(ids, q, p)`` over all edges for the current parts; see ExpanderHhState."""
        parts = [s.sampling_probabilities(h, c1, c2, c3) for s in self._structures()]
        if not parts:
            empty = np.zeros(0)
            return np.zeros(0, dtype=np.int64), empty, empty
        return tuple(np.concatenate(x) for x in zip(*parts))

    def edge_values(self, h):
        """Exact ``(ids, B_G h)`` over all edges."""
        h = np.asarray(h, dtype=np.float64)
        ids = self.edges()
        if ids.size == 0:
            return ids, np.zeros(0)
        g = self._lossy_graph(ids)
        return ids, h[g.heads] - g.eta * h[g.tails]

    # ================================================================================== #
    # Audits

    def check_invariants(self, check_expansion=False):
        """Decomposition invariants (disjoint parts covering the edges, level
        capacities, the degree rule), the deletion counter bound ``m_cnt <= 7 t``
        and the counter bounds of every expander structure built so far.
        ``check_expansion`` adds the expansion of every part."""
        out = {}
        seen = []
        for level, parts in self.levels.items():
            size = 0
            for part in parts:
                seen.extend(part.sub.live)
                size += part.sub.n_edges
            out["level_{0}_capacity".format(level)] = size <= 2 ** level

        out["disjoint"] = len(seen) == len(set(seen))
        out["cover"] = set(seen) == set(self._ends)
        out["structures_match"] = all(
            set(int(e) for e in part.structure.edges()) == part.sub.live
            for parts in self.levels.values() for part in parts)
        out["degree_rule"] = all(part.structure.degree_violations().size == 0
                                 for parts in self.levels.values() for part in parts)
        out["cnt_ratio"] = self.counters["cnt_ratio_violations"] == 0
        out["expander_counters"] = self.counters["retired_counter_failures"] == 0 and all(
            all(part.structure.counter_invariants().values())
            for parts in self.levels.values() for part in parts)

        if check_expansion:
            ok = True
            for parts in self.levels.values():
                for part in parts:
                    g, _ = part.sub.graph(self.n_vertices)
                    if g.n_edges and expansion_certificate(g) < self.phi:
                        ok = False
            out["expansion"] = ok
        return out

    def __repr__(self):
        return "BalancedHhState(n={0}, m={1}, levels={2})".format(
            self.n_vertices, self.n_edges, {k: len(v) for k, v in sorted(self.levels.items()) if v})

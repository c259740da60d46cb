from collections import defaultdict

import numpy as np

from src.core.graph import LossyGraph
from src.spectral.certificates import expansion_certificate, fiedler_sweep
from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG

__all__ = [
    'PrunedSubgraph',
    'decompose_expanders',
    'expander_prune',
    'degree_prune'
]


def decompose_expanders(g, phi, exhaustive_limit=16):
    """Split the edges of ``g`` into edge-disjoint parts whose smoothed graphs
    have conductance at least ``phi``.

    Every connected part is certified by :func:`expansion_certificate`; parts
    that fail are cut along their best Fiedler sweep cut and the three edge
    groups (both sides and the cut) are decomposed again. A part the cut does
    not shrink falls apart into single edges, which are trivially expanding.

    Returns:
        list of sorted edge-id arrays, ordered by their smallest id.
    """
    if not 0 < phi <= 1:
        raise ContractViolation("Expansion target must lie in (0, 1], got {0}.".format(phi))

    smooth = g.smoothed()
    parts = []
    stack = [np.arange(g.n_edges, dtype=np.int64)]

    while stack:
        edges = stack.pop()
        if edges.size == 0:
            continue
        if edges.size == 1:
            parts.append(edges)
            continue

        sub = smooth.subgraph(edges)
        _, labels = sub.components()
        comp = labels[sub.tails]
        groups = np.unique(comp)
        if groups.size > 1:
            stack.extend(edges[comp == c] for c in groups)
            continue

        if expansion_certificate(sub, exhaustive_limit=exhaustive_limit) >= phi:
            parts.append(edges)
            continue

        _, side = fiedler_sweep(sub)
        in_side = np.zeros(g.n_vertices, dtype=bool)
        in_side[side] = True
        a = in_side[sub.tails]
        b = in_side[sub.heads]
        pieces = [edges[a & b], edges[~a & ~b], edges[a ^ b]]

        if any(p.size == edges.size for p in pieces):
            parts.extend(edges[k:k + 1] for k in range(edges.size))
            continue
        stack.extend(pieces)

    parts = [np.sort(p) for p in parts]
    parts.sort(key=lambda p: int(p[0]))

    DEBUG(lambda: "decompose_expanders: m={0}, phi={1:.3e} -> {2} parts"
          .format(g.n_edges, phi, len(parts)))
    return parts


class PrunedSubgraph(object):
    """Edge set of one expander part together with its pruning bookkeeping.

    Keeps the degrees at construction, the number of edges the part started
    with, the running deletion counter and the volume and cut of everything
    pruned so far.
    """

    def __init__(self, tails, heads, edge_ids):

        self._ends = {}
        self.adj = defaultdict(set)
        for a, b, e in zip(tails, heads, edge_ids):
            e = int(e)
            self._ends[e] = (int(a), int(b))
            self.adj[int(a)].add(e)
            self.adj[int(b)].add(e)

        self.live = set(self._ends)
        self.d_init = {x: len(es) for x, es in self.adj.items()}
        self.m_init = len(self.live)
        self.m_cnt = 0
        self.pruned_volume = 0.0
        self.pruned_cut = 0

    @property
    def n_edges(self):
        return len(self.live)

    def ends(self, e):
        return self._ends[e]

    def degree(self, x):
        return len(self.adj.get(x, ()))

    def remove(self, edges):
        for e in edges:
            if e not in self.live:
                raise ContractViolation("Edge {0} is not in this part.".format(e))
            self.live.discard(e)
            a, b = self._ends[e]
            self.adj[a].discard(e)
            self.adj[b].discard(e)

    def restore(self, edges):
        for e in edges:
            a, b = self._ends[e]
            self.live.add(e)
            self.adj[a].add(e)
            self.adj[b].add(e)

    def graph(self, n_vertices):
        """Smoothed LossyGraph of the live edges, with their ids in the same order."""
        ids = np.array(sorted(self.live), dtype=np.int64)
        if ids.size == 0:
            return LossyGraph(n_vertices, [], []), ids
        ends = np.array([self._ends[e] for e in ids], dtype=np.int64)
        return LossyGraph(n_vertices, ends[:, 0], ends[:, 1]), ids


def expander_prune(sub, deleted, phi, n_vertices, exhaustive_limit=16):
    """Peel vertices off ``sub`` after ``deleted`` left it until the rest
    certifies conductance ``phi / 6``.

    ``deleted`` must already be removed from ``sub`` and counted in
    ``sub.m_cnt``. Vertices are peeled greedily, lowest ratio of current to
    initial degree first, among those next to the deletions or to vertices
    peeled before. The edges of peeled vertices are removed from ``sub``.

    Returns:
        (cut edges, internal edges) of the peeled set, or ``None`` when the
        peeled volume would exceed ``8 m_cnt / phi`` or the cut ``4 m_cnt``;
        the caller then rebuilds the part.
    """
    if not deleted or sub.n_edges == 0:
        return [], []

    target = phi / 6.0
    g, _ = sub.graph(n_vertices)
    if expansion_certificate(g, exhaustive_limit=exhaustive_limit) >= target:
        return [], []

    volume_budget = 8.0 * sub.m_cnt / phi
    cut_budget = 4 * sub.m_cnt

    frontier = set()
    for e in deleted:
        frontier.update(sub.ends(e))

    peeled = set()
    removed = []
    while sub.n_edges:
        candidates = [x for x in frontier if x not in peeled and sub.degree(x) > 0]
        if not candidates:
            DEBUG("expander_prune: no candidate left before certification")
            sub.restore(removed)
            return None

        x = min(candidates, key=lambda y: (sub.degree(y) / sub.d_init[y], y))
        edges = sorted(sub.adj[x])
        peeled.add(x)
        removed.extend(edges)
        for e in edges:
            frontier.update(sub.ends(e))
        sub.remove(edges)
        sub.pruned_volume += sub.d_init[x]

        if sub.pruned_volume > volume_budget:
            DEBUG(lambda: "expander_prune: volume {0} over budget {1:.1f}".format(sub.pruned_volume, volume_budget))
            sub.restore(removed)
            return None

        g, _ = sub.graph(n_vertices)
        if g.n_edges == 0 or expansion_certificate(g, exhaustive_limit=exhaustive_limit) >= target:
            break

    cut, internal = [], []
    for e in removed:
        a, b = sub.ends(e)
        (internal if a in peeled and b in peeled else cut).append(e)

    sub.pruned_cut += len(cut)
    if sub.pruned_cut > cut_budget:
        DEBUG(lambda: "expander_prune: cut {0} over budget {1}".format(sub.pruned_cut, cut_budget))
        sub.restore(removed)
        return None

    return cut, internal


def degree_prune(sub, edges):
    """All live edges at endpoints of ``edges`` whose degree fell below a ninth
    of their initial degree. ``sub`` is not modified."""
    out = set()
    for e in edges:
        for x in sub.ends(e):
            if sub.degree(x) * 9 < sub.d_init[x]:
                out.update(sub.adj[x])
    return sorted(out)

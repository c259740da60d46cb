import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from src.utils.exceptions import ContractViolation

__all__ = [
    'LossyGraph',
    'LossyLaplacianView',
    'build_incidence',
    'imbalance',
    'gain_incidence'
]


def _as_index_array(x, name):
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if x.size and x.min() < 0:
        raise ContractViolation("Negative vertex id in '{}'.".format(name))
    return x


class LossyGraph(object):
    """Directed multigraph with flow multipliers and weights.

    Edge e goes from ``tails[e]`` to ``heads[e]``; row e of the incidence matrix
    is ``1_{head} - eta_e * 1_{tail}`` with ``eta_e >= 1``.
    """

    def __init__(self, n_vertices, tails, heads, eta=None, weight=None):

        self.n_vertices = int(n_vertices)
        self.tails = _as_index_array(tails, "tails")
        self.heads = _as_index_array(heads, "heads")

        m = self.tails.shape[0]

        if self.heads.shape[0] != m:
            raise ContractViolation("tails and heads differ in length ({0} vs {1}).".format(m, self.heads.shape[0]))

        self.eta = np.ones(m) if eta is None else np.asarray(eta, dtype=np.float64).reshape(-1)
        self.weight = np.ones(m) if weight is None else np.asarray(weight, dtype=np.float64).reshape(-1)

        if self.eta.shape[0] != m or self.weight.shape[0] != m:
            raise ContractViolation("eta and weight must have one entry per edge.")

        if m > 0:
            if max(self.tails.max(), self.heads.max()) >= self.n_vertices:
                raise ContractViolation("Edge endpoint outside of [0, {0}).".format(self.n_vertices))
            loops = np.nonzero(self.tails == self.heads)[0]
            if loops.size:
                raise ContractViolation("Self-loop at edge {0}.".format(int(loops[0])))
            if not np.all(np.isfinite(self.eta)) or self.eta.min() < 1.0:
                raise ContractViolation("Flow multipliers must be finite and >= 1 (min is {0}).".format(self.eta.min()))
            if not np.all(np.isfinite(self.weight)) or self.weight.min() <= 0.0:
                raise ContractViolation("Edge weights must be positive (min is {0}).".format(self.weight.min()))

    @property
    def n_edges(self):
        return self.tails.shape[0]

    @classmethod
    def from_gains(cls, n_vertices, tails, heads, gains, weight=None):
        """Build a graph from loss factors.

        A gain-form row ``gamma_e 1_head - 1_tail`` equals ``row_scale[e]`` times
        the multiplier-form row of the returned graph. Edges with gain above one
        are reversed so that every multiplier is at least one.

        Returns:
            (LossyGraph, row_scale)
        """
        tails = _as_index_array(tails, "tails")
        heads = _as_index_array(heads, "heads")
        gains = np.asarray(gains, dtype=np.float64).reshape(-1)

        if gains.shape[0] != tails.shape[0]:
            raise ContractViolation("One gain per edge is required.")
        if gains.size and (not np.all(np.isfinite(gains)) or gains.min() <= 0.0):
            raise ContractViolation("Gains must be positive and finite.")

        flip = gains > 1.0

        new_tails = np.where(flip, heads, tails)
        new_heads = np.where(flip, tails, heads)
        eta = np.where(flip, gains, 1.0 / np.where(gains > 0, gains, 1.0))
        row_scale = np.where(flip, -1.0, gains)

        return cls(n_vertices, new_tails, new_heads, eta=eta, weight=weight), row_scale

    def smoothed(self):
        return LossyGraph(self.n_vertices, self.tails, self.heads, eta=None, weight=self.weight)

    def subgraph(self, edge_ids):
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        return LossyGraph(self.n_vertices, self.tails[edge_ids], self.heads[edge_ids],
                          eta=self.eta[edge_ids], weight=self.weight[edge_ids])

    def balance(self):
        """Smallest beta such that the graph is beta-balanced."""
        if self.n_edges == 0:
            return 0.0
        return float(self.eta.max() - 1.0)

    def degrees(self, smoothed=False):
        """Diagonal of the (smoothed) weighted Laplacian."""
        d = np.zeros(self.n_vertices)
        np.add.at(d, self.heads, self.weight)
        if smoothed:
            np.add.at(d, self.tails, self.weight)
        else:
            np.add.at(d, self.tails, self.weight * self.eta ** 2)
        return d

    def components(self):
        """Connected components of the underlying undirected graph."""
        adj = sp.coo_matrix((np.ones(self.n_edges), (self.tails, self.heads)),
                            shape=(self.n_vertices, self.n_vertices))
        return csgraph.connected_components(adj, directed=False)

    def is_connected(self):
        if self.n_vertices == 0:
            return False
        n_comp, _ = self.components()
        return n_comp == 1

    def __repr__(self):
        return "LossyGraph(n={0}, m={1}, beta={2:.3g})".format(self.n_vertices, self.n_edges, self.balance())


def _incidence(n, tails, heads, eta):
    m = tails.shape[0]
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([heads, tails])
    vals = np.concatenate([np.ones(m), -eta])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, n))


def gain_incidence(n_vertices, tails, heads, gains):
    """Incidence matrix in gain form: row e is ``gamma_e 1_head - 1_tail``."""
    tails = _as_index_array(tails, "tails")
    heads = _as_index_array(heads, "heads")
    gains = np.asarray(gains, dtype=np.float64).reshape(-1)
    m = tails.shape[0]
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([heads, tails])
    vals = np.concatenate([gains, -np.ones(m)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, int(n_vertices)))


class LossyLaplacianView(object):
    """Incidence, Laplacian and degree data of a lossy graph and of its smoothed graph.

    Dense normalized Laplacians are built on request; vertices without incident
    edges get a zero row and column there and are listed in ``isolated``.
    """

    def __init__(self, graph):

        self.graph = graph

        n = graph.n_vertices

        self.B = _incidence(n, graph.tails, graph.heads, graph.eta)
        self.B_smooth = _incidence(n, graph.tails, graph.heads, np.ones(graph.n_edges))
        self.W = sp.diags(graph.weight)

        self.L = (self.B.T @ self.W @ self.B).tocsr()
        self.L_smooth = (self.B_smooth.T @ self.W @ self.B_smooth).tocsr()

        self.d = np.asarray(self.L.diagonal()).copy()
        self.d_smooth = np.asarray(self.L_smooth.diagonal()).copy()

        self.isolated = self.d_smooth <= 0.0
        self.degenerate = bool(self.isolated.any())

    @property
    def n_vertices(self):
        return self.graph.n_vertices

    @property
    def n_edges(self):
        return self.graph.n_edges

    @staticmethod
    def _inv_sqrt(d):
        out = np.zeros_like(d, dtype=np.float64)
        pos = d > 0
        out[pos] = 1.0 / np.sqrt(d[pos])
        return out

    def normalized(self, d=None, eps_ad=0.0, smoothed=False):
        """Dense ``D^{-1/2} L D^{-1/2} + eps_ad I`` for a degree proxy ``d``.

        ``d`` defaults to the matching Laplacian diagonal.
        """
        lap = self.L_smooth if smoothed else self.L
        if d is None:
            d = self.d_smooth if smoothed else self.d
        s = self._inv_sqrt(np.asarray(d, dtype=np.float64))
        mat = (lap.toarray() * s[:, None]) * s[None, :]
        if eps_ad:
            mat = mat + eps_ad * np.eye(self.n_vertices)
        return mat

    @property
    def N(self):
        return self.normalized()

    @property
    def N_smooth(self):
        return self.normalized(smoothed=True)


def build_incidence(g):
    return LossyLaplacianView(g)


def imbalance(g, f, row_scale=None):
    """Vertex imbalances ``B_G^T f``.

    With ``row_scale`` from :meth:`LossyGraph.from_gains` the result is the
    gain-form imbalance of the original edges.
    """
    f = np.asarray(f, dtype=np.float64).reshape(-1)

    if f.shape[0] != g.n_edges:
        raise ContractViolation("Flow has {0} entries but the graph has {1} edges."
                                .format(f.shape[0], g.n_edges))

    if row_scale is not None:
        f = f * np.asarray(row_scale, dtype=np.float64)

    out = np.zeros(g.n_vertices)
    np.add.at(out, g.heads, f)
    np.add.at(out, g.tails, -g.eta * f)
    return out

import networkx as nx
import numpy as np

from src.core.graph import LossyGraph, gain_incidence
from src.core.two_sparse import TwoSparseMatrix
from src.utils.common_utils import as_generator
from src.utils.exceptions import ContractViolation
from .formats import GainNetwork, LpData

__all__ = [
    'from_networkx',
    'random_regular_expander',
    'complete_graph',
    'path_graph',
    'barbell_graph',
    'balanced_orientation',
    'random_two_sparse',
    'random_feasible_lp',
    'random_lossy_network'
]


def _seed(rng):
    return int(as_generator(rng).integers(0, 2 ** 31 - 1))


def from_networkx(graph, eta=None, weight=None):
    """LossyGraph on the nodes ``0..n-1`` of ``graph``, edges oriented from the smaller id."""
    graph = nx.convert_node_labels_to_integers(graph)
    edges = np.array(sorted((min(a, b), max(a, b)) for a, b in graph.edges()), dtype=np.int64).reshape(-1, 2)
    return LossyGraph(graph.number_of_nodes(), edges[:, 0], edges[:, 1], eta=eta, weight=weight)


def random_regular_expander(n, degree, rng=None):
    """Random ``degree``-regular graph, redrawn until connected."""
    if n * degree % 2 or degree >= n:
        raise ContractViolation("No {0}-regular graph on {1} vertices.".format(degree, n))
    rng = as_generator(rng)
    while True:
        graph = nx.random_regular_graph(degree, n, seed=_seed(rng))
        if nx.is_connected(graph):
            return from_networkx(graph)


def complete_graph(n):
    return from_networkx(nx.complete_graph(n))


def path_graph(n):
    return from_networkx(nx.path_graph(n))


def barbell_graph(k, bridge=0):
    """Two ``K_k`` joined by a path of ``bridge`` extra vertices."""
    return from_networkx(nx.barbell_graph(k, bridge))


def balanced_orientation(graph, beta, rng=None, weight=None):
    """Copy of ``graph`` with multipliers drawn uniformly from ``[1, 1 + beta]`` and random orientations."""
    rng = as_generator(rng)
    m = graph.n_edges
    flip = rng.random(m) < 0.5
    tails = np.where(flip, graph.heads, graph.tails)
    heads = np.where(flip, graph.tails, graph.heads)
    eta = 1.0 + beta * rng.random(m)
    return LossyGraph(graph.n_vertices, tails, heads, eta=eta, weight=graph.weight if weight is None else weight)


def random_two_sparse(m, n, rng=None, single_fraction=0.2, scale=(0.5, 2.0)):
    """``m x n`` two-sparse matrix with random signs and magnitudes in ``scale``;
    about ``single_fraction`` of the rows have a single entry."""
    rng = as_generator(rng)
    rows = []
    for _ in range(m):
        k = 1 if n < 2 or rng.random() < single_fraction else 2
        cols = rng.choice(n, size=k, replace=False)
        vals = rng.uniform(*scale, size=k) * rng.choice([-1.0, 1.0], size=k)
        rows.append([(int(j), float(v)) for j, v in zip(cols, vals)])
    return TwoSparseMatrix(n, rows)


def random_feasible_lp(m, n, rng=None, width=(1.0, 3.0)):
    """Feasible LP with a two-sparse ``A``: ``b = A^T x*`` for a random point ``x*`` inside the box."""
    rng = as_generator(rng)
    a = random_two_sparse(m, n, rng)
    lower = rng.uniform(-1.0, 0.0, size=m)
    upper = lower + rng.uniform(*width, size=m)
    x_star = lower + rng.uniform(0.1, 0.9, size=m) * (upper - lower)
    c = rng.uniform(-1.0, 1.0, size=m)
    rows = [a.row(i) for i in range(m)]
    return LpData(rows, a.rmatvec(x_star), c, lower, upper, None)


def random_lossy_network(n, m, rng=None, kind="gmcf", gain_range=(0.5, 1.0)):
    """Random generalized flow network on ``n`` vertices with ``m`` edges.

    The first ``n - 1`` edges form a path ``0 -> 1 -> ... -> n-1`` so a flow
    from vertex 0 to vertex ``n - 1`` exists. For ``gmcf`` the demands are the
    imbalances of a random flow within capacity, so the instance is feasible.
    """
    if m < n - 1:
        raise ContractViolation("Need at least {0} edges to connect {1} vertices.".format(n - 1, n))
    rng = as_generator(rng)

    tails, heads = list(range(n - 1)), list(range(1, n))
    while len(tails) < m:
        a, b = rng.choice(n, size=2, replace=False)
        tails.append(int(a))
        heads.append(int(b))

    capacity = rng.uniform(1.0, 4.0, size=m)
    cost = rng.uniform(0.0, 2.0, size=m)
    gains = rng.uniform(*gain_range, size=m)

    if kind == "gmax":
        return GainNetwork(kind, n, tails, heads, capacity, cost, gains, source=0, sink=n - 1)

    flow = rng.uniform(0.0, 1.0, size=m) * capacity
    demand = gain_incidence(n, tails, heads, gains).T @ flow
    return GainNetwork(kind, n, tails, heads, capacity, cost, gains, demand=demand)

"""
Undirected communication graphs.

Nodes are indexed ``0..n_nodes-1``. Every edge is stored once as an ordered
pair ``(i, j)`` with ``i < j``; that order also fixes the orientation used in
the incidence matrix (the smaller index leaves, the larger one enters).
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .exceptions import InvalidTopologyError

CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with unit edge weights.

    Parameters
    ----------
    n_nodes : int
        Number of nodes.
    edges : tuple of (int, int)
        Unordered node pairs. Duplicates and reversed duplicates are merged.
    """

    n_nodes: int
    edges: tuple = field(default=())

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise InvalidTopologyError(f"n_nodes must be positive, got {self.n_nodes}")
        canon = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise InvalidTopologyError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidTopologyError(f"edge {(i, j)} outside node range 0..{n - 1}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def sources(self):
        """Leaving node of every oriented edge."""
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def targets(self):
        """Entering node of every oriented edge."""
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    @cached_property
    def incidence_matrix(self):
        d = incidence(self)
        d.flags.writeable = False
        return d

    def neighbors(self, i):
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def adjacency(self):
        a = np.zeros((self.n_nodes, self.n_nodes))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def degrees(self):
        return self.adjacency().sum(axis=1)

    def is_connected(self):
        return is_connected_bfs(self)

    def require_connected(self):
        """Return ``self`` or raise if the graph is disconnected."""
        if not self.is_connected():
            raise InvalidTopologyError("graph is not connected")
        return self


def ring_graph(n):
    """Cycle on ``n >= 3`` nodes with edges ``(i, i+1 mod n)``."""
    if n < 3:
        raise InvalidTopologyError(f"a ring needs at least 3 nodes, got {n}")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n):
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n):
    return Graph(n, tuple(combinations(range(n), 2)))


def laplacian(g):
    """Graph Laplacian ``L = diag(A 1) - A``."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def incidence(g):
    """Oriented incidence matrix ``D`` of shape ``(n_nodes, n_edges)``.

    Column ``k`` carries ``-1`` at the leaving node and ``+1`` at the
    entering node of edge ``k``, so that ``D @ D.T == laplacian(g)``.
    """
    d = np.zeros((g.n_nodes, g.n_edges))
    for k, (i, j) in enumerate(g.edges):
        d[i, k] = -1.0
        d[j, k] = 1.0
    return d


def algebraic_connectivity(g):
    """Second-smallest Laplacian eigenvalue (0 for a single node)."""
    if g.n_nodes < 2:
        return 0.0
    lam = np.linalg.eigvalsh(laplacian(g))
    return max(float(lam[1]), 0.0)


def is_connected_bfs(g):
    """Reachability check independent of the spectrum."""
    adj = [[] for _ in range(g.n_nodes)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == g.n_nodes


def is_connected_spectral(g, tol=CONNECTIVITY_TOL):
    return g.n_nodes == 1 or algebraic_connectivity(g) > tol


def graph_from_config(layout):
    """Build a connected graph from a config mapping.

    Accepted forms::

        {"type": "ring", "n": 20}
        {"type": "complete", "n": 4}
        {"type": "edges", "n": 5, "edges": [[0, 1], [1, 2], ...]}
    """
    if isinstance(layout, Graph):
        return layout.require_connected()
    try:
        kind = layout["type"]
        n = int(layout["n"])
    except (KeyError, TypeError) as exc:
        raise InvalidTopologyError(f"graph config needs 'type' and 'n': {layout!r}") from exc
    if kind == "ring":
        g = ring_graph(n)
    elif kind == "complete":
        g = complete_graph(n)
    elif kind == "path":
        g = path_graph(n)
    elif kind == "edges":
        g = Graph(n, tuple(tuple(e) for e in layout.get("edges", ())))
    else:
        raise InvalidTopologyError(f"unknown graph type {kind!r}")
    return g.require_connected()

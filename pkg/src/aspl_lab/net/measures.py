"""
Per-node measures used to rank edge endpoints.

Conventions
-----------
- Betweenness: unordered pairs, endpoints excluded, unnormalized.
  Strategies only use the ranking, which these conventions do not change.
- Accessibility: exp of the Shannon entropy (natural log) of the position of an
  unbiased h-step random walk. The walk may revisit nodes (plain matrix power of
  the transition matrix), so the support is every node reachable in exactly h steps.
"""

from __future__ import annotations

from collections import deque
from typing import List, Tuple

import numpy as np
from scipy import sparse

from .errors import DisconnectedGraph, IsolatedNode, NodeOutOfRange
from .types import Graph, MeasureVector, WalkDistribution

DEFAULT_WALK_LENGTH = 2


# -------------------------
# Degree
# -------------------------

def degree_stats(g: Graph) -> Tuple[float, float]:
    # Population mean and standard deviation
    if g.n == 0:
        return 0.0, 0.0
    k = np.asarray(g.degrees(), dtype=np.float64)
    return float(k.mean()), float(k.std())


def degree_vector(g: Graph) -> MeasureVector:
    return MeasureVector(values=tuple(float(k) for k in g.degrees()), kind="degree")


# -------------------------
# Betweenness (Brandes)
# -------------------------

def betweenness(g: Graph) -> MeasureVector:
    n = g.n
    adjacency = g.adjacency
    cb = [0.0] * n

    for s in range(n):
        # Single-source shortest paths, counting them
        stack: List[int] = []
        preds: List[List[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            dv = dist[v] + 1
            for w in adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
                    preds[w].append(v)

        if len(stack) != n:
            raise DisconnectedGraph("betweenness needs a connected graph")

        # Dependency accumulation in reverse BFS order
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                cb[w] += delta[w]

    # Every unordered pair was accumulated from both endpoints
    return MeasureVector(values=tuple(c / 2.0 for c in cb), kind="betweenness")


# -------------------------
# Random walks / accessibility
# -------------------------

def transition_matrix(g: Graph) -> sparse.csr_matrix:
    # Row-stochastic: M[i, j] = 1/deg(i) for each neighbor j
    deg = np.asarray(g.degrees(), dtype=np.float64)
    isolated = np.flatnonzero(deg == 0)
    if len(isolated):
        raise IsolatedNode(f"random walks need every degree >= 1; node {int(isolated[0])} is isolated")
    return (sparse.diags(1.0 / deg) @ g.to_csr()).tocsr()


def _check_walk_length(h: int) -> None:
    if h < 1:
        raise ValueError(f"walk length h must be >= 1, got {h}")


def walk_distribution(g: Graph, source: int, h: int) -> WalkDistribution:
    _check_walk_length(h)
    if not (0 <= source < g.n):
        raise NodeOutOfRange(f"node {source} out of range for n={g.n}")
    mt = transition_matrix(g).T.tocsr()
    p = np.zeros(g.n, dtype=np.float64)
    p[source] = 1.0
    for _ in range(h):
        p = mt @ p
    return WalkDistribution(source=source, h=h, probs=tuple(float(x) for x in p))


def walk_matrix(g: Graph, h: int) -> sparse.csr_matrix:
    # Row V holds P_h(V, .)
    _check_walk_length(h)
    m = transition_matrix(g)
    p = m
    for _ in range(h - 1):
        p = p @ m
    return p.tocsr()


def accessibility(g: Graph, h: int = DEFAULT_WALK_LENGTH) -> MeasureVector:
    p = walk_matrix(g, h)
    data = p.data
    plogp = np.zeros_like(data)
    pos = data > 0
    plogp[pos] = -data[pos] * np.log(data[pos])
    entropy = np.asarray(
        sparse.csr_matrix((plogp, p.indices, p.indptr), shape=p.shape).sum(axis=1)
    ).ravel()
    acc = np.exp(np.maximum(entropy, 0.0))
    return MeasureVector(values=tuple(float(a) for a in acc), kind="accessibility", h=h)


# -------------------------
# Tabular view
# -------------------------

def measure_table(g: Graph, h: int = DEFAULT_WALK_LENGTH) -> List[Tuple[int, int, float, float]]:
    # (node_id, degree, betweenness, accessibility_h) per node
    bc = betweenness(g).values
    acc = accessibility(g, h).values
    return [(v, g.degree(v), bc[v], acc[v]) for v in range(g.n)]

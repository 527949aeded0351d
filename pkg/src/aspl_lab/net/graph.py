from __future__ import annotations

from collections import deque
from typing import Dict, List, Set, Tuple

import numpy as np
from scipy.sparse import csgraph

from .errors import DisconnectedGraph, NodeOutOfRange, TooSmall
from .types import UNREACHABLE, DistanceRow, Graph


def add_edge(g: Graph, u: int, v: int) -> Graph:
    return g.add_edge(u, v)


def _check_node(g: Graph, v: int) -> None:
    if not (0 <= v < g.n):
        raise NodeOutOfRange(f"node {v} out of range for n={g.n}")


def bfs_distances(g: Graph, source: int) -> DistanceRow:
    _check_node(g, source)
    dist = [UNREACHABLE] * g.n
    dist[source] = 0
    queue = deque([source])
    adjacency = g.adjacency
    while queue:
        v = queue.popleft()
        dv = dist[v] + 1
        for w in adjacency[v]:
            if dist[w] == UNREACHABLE:
                dist[w] = dv
                queue.append(w)
    return DistanceRow(source=source, dist=tuple(dist))


def all_pairs_distances(g: Graph) -> np.ndarray:
    # n x n hop counts, UNREACHABLE where no path exists
    out = np.empty((g.n, g.n), dtype=np.int64)
    for s in range(g.n):
        out[s] = bfs_distances(g, s).dist
    return out


def _hop_matrix(g: Graph) -> np.ndarray:
    # C-level BFS from every source; inf marks unreachable pairs
    return csgraph.shortest_path(g.to_csr(), method="D", directed=False, unweighted=True)


def aspl(g: Graph) -> float:
    """
    Mean hop distance over all unordered node pairs.

    The graph must be connected; experiments run on the largest connected
    component (see `largest_connected_component`).
    """
    if g.n < 2:
        raise TooSmall(f"ASPL needs at least 2 nodes, got {g.n}")
    d = _hop_matrix(g)
    if not np.isfinite(d).all():
        raise DisconnectedGraph("ASPL is undefined: graph is disconnected")
    # Each unordered pair is counted twice in the full matrix
    return float(d.sum()) / (g.n * (g.n - 1))


def diameter(g: Graph) -> int:
    if g.n < 2:
        raise TooSmall(f"diameter needs at least 2 nodes, got {g.n}")
    d = _hop_matrix(g)
    if not np.isfinite(d).all():
        raise DisconnectedGraph("diameter is undefined: graph is disconnected")
    return int(d.max())


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return len(bfs_distances(g, 0).reachable()) == g.n


def connected_components(g: Graph) -> List[List[int]]:
    # Components in order of their smallest node id; members sorted
    seen = [False] * g.n
    comps: List[List[int]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def largest_connected_component(g: Graph) -> Tuple[Graph, Dict[int, int]]:
    if g.n < 1:
        raise TooSmall("graph has no nodes")
    comps = connected_components(g)
    # max() keeps the first maximal component, i.e. the one with the smallest id
    best = max(comps, key=len)
    mapping = {old: new for new, old in enumerate(best)}
    sub = Graph(n=len(best))
    for old in best:
        row = [mapping[w] for w in g.adjacency[old]]
        sub.adjacency[mapping[old]] = sorted(row)
    sub.edge_count = sum(len(r) for r in sub.adjacency) // 2
    return sub, mapping


def second_neighborhood(g: Graph, u: int) -> Set[int]:
    _check_node(g, u)
    first = set(g.adjacency[u])
    out: Set[int] = set()
    for v in first:
        out.update(g.adjacency[v])
    out -= first
    out.discard(u)
    return out

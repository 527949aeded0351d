from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np
import pytest

from aspl_lab.net.errors import DisconnectedGraph, IsolatedNode, NodeOutOfRange
from aspl_lab.net.generator import gen_er
from aspl_lab.net.graph import aspl, is_connected
from aspl_lab.net.measures import (
    accessibility,
    betweenness,
    degree_stats,
    degree_vector,
    measure_table,
    transition_matrix,
    walk_distribution,
    walk_matrix,
)
from aspl_lab.net.types import Graph


def _path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def _cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def _complete(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def _star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def _to_nx(g: Graph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    return G


def _connected_graphs(count: int, max_n: int, seed: int):
    rng = np.random.default_rng(seed)
    found = 0
    i = 0
    while found < count:
        n = int(rng.integers(3, max_n + 1))
        g = gen_er(n, float(rng.uniform(0.2, 0.9)), seed * 100_000 + i)
        i += 1
        if is_connected(g):
            found += 1
            yield g


def _brute_force_betweenness(g: Graph) -> list[float]:
    G = _to_nx(g)
    out = [0.0] * g.n
    for s, t in itertools.combinations(range(g.n), 2):
        paths = list(nx.all_shortest_paths(G, s, t))
        for p in paths:
            for v in p[1:-1]:
                out[v] += 1.0 / len(paths)
    return out


def _entropy(p: np.ndarray) -> float:
    q = p[p > 0]
    return float(-(q * np.log(q)).sum())


# -------------------------
# Degree
# -------------------------

def test_degree_stats_examples() -> None:
    mean, std = degree_stats(_star(4))
    assert mean == pytest.approx(1.6)
    assert std == pytest.approx(math.sqrt((4 - 1.6) ** 2 / 5 + 4 * (1 - 1.6) ** 2 / 5))

    mean, std = degree_stats(_cycle(7))
    assert (mean, std) == (pytest.approx(2.0), pytest.approx(0.0))


def test_degree_vector() -> None:
    v = degree_vector(_path(3))
    assert v.kind == "degree"
    assert v.values == (1.0, 2.0, 1.0)


# -------------------------
# Betweenness
# -------------------------

def test_betweenness_examples() -> None:
    assert betweenness(_path(3)).values == pytest.approx((0.0, 1.0, 0.0))
    assert betweenness(_complete(4)).values == pytest.approx((0.0,) * 4)
    assert betweenness(_cycle(5)).values == pytest.approx((1.0,) * 5)
    assert betweenness(_star(4)).values == pytest.approx((6.0, 0.0, 0.0, 0.0, 0.0))


def test_betweenness_matches_brute_force_enumeration() -> None:
    for g in _connected_graphs(200, 8, seed=1):
        ours = betweenness(g).values
        expected = _brute_force_betweenness(g)
        for a, b in zip(ours, expected):
            assert abs(a - b) < 1e-9


def test_betweenness_agrees_with_networkx_unnormalized() -> None:
    for g in _connected_graphs(30, 25, seed=2):
        oracle = nx.betweenness_centrality(_to_nx(g), normalized=False)
        assert betweenness(g).values == pytest.approx(tuple(oracle[v] for v in range(g.n)), abs=1e-9)


def test_betweenness_sums_to_total_path_excess() -> None:
    # sum_v B(v) = sum over unordered pairs of (d(s, t) - 1)
    for g in _connected_graphs(50, 15, seed=3):
        pairs = g.n * (g.n - 1) / 2
        assert sum(betweenness(g).values) == pytest.approx(pairs * (aspl(g) - 1.0))


def test_betweenness_needs_a_connected_graph() -> None:
    with pytest.raises(DisconnectedGraph):
        betweenness(Graph.from_edges(4, [(0, 1), (2, 3)]))


# -------------------------
# Random walks
# -------------------------

def test_walk_distribution_examples() -> None:
    assert walk_distribution(_path(3), 0, 1).probs == pytest.approx((0.0, 1.0, 0.0))
    assert walk_distribution(_path(3), 0, 2).probs == pytest.approx((0.5, 0.0, 0.5))

    k4 = walk_distribution(_complete(4), 0, 1)
    assert k4.probs == pytest.approx((0.0, 1 / 3, 1 / 3, 1 / 3))
    assert k4.support() == [1, 2, 3]


def test_walk_distribution_errors() -> None:
    with pytest.raises(IsolatedNode):
        walk_distribution(Graph.from_edges(3, [(0, 1)]), 0, 1)
    with pytest.raises(NodeOutOfRange):
        walk_distribution(_path(3), 5, 1)
    with pytest.raises(ValueError):
        walk_distribution(_path(3), 0, 0)


def test_walk_distributions_sum_to_one() -> None:
    for g in _connected_graphs(20, 12, seed=4):
        for h in range(1, 11):
            p = walk_matrix(g, h).toarray()
            assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
            assert (p >= 0).all()


def test_transition_matrix_is_row_stochastic() -> None:
    m = transition_matrix(_star(3)).toarray()
    assert m[0].tolist() == pytest.approx([0.0, 1 / 3, 1 / 3, 1 / 3])
    assert m[1].tolist() == pytest.approx([1.0, 0.0, 0.0, 0.0])


# -------------------------
# Accessibility
# -------------------------

def test_accessibility_examples() -> None:
    for n in (3, 5, 8):
        assert accessibility(_complete(n), h=1).values == pytest.approx((n - 1.0,) * n)

    star = accessibility(_star(3), h=2)
    assert star.values == pytest.approx((1.0, 3.0, 3.0, 3.0))
    assert star.h == 2


def test_accessibility_is_bounded_by_support_size() -> None:
    for g in _connected_graphs(30, 12, seed=5):
        for h in (1, 2, 3):
            acc = accessibility(g, h).values
            p = walk_matrix(g, h).toarray()
            for v in range(g.n):
                support = int((p[v] > 0).sum())
                assert 1.0 - 1e-12 <= acc[v] <= support + 1e-9


def test_accessibility_is_constant_on_vertex_transitive_graphs() -> None:
    for g in (_cycle(9), _complete(6)):
        for h in (1, 2, 3):
            acc = accessibility(g, h).values
            assert max(acc) - min(acc) < 1e-9


def test_accessibility_matches_monte_carlo_walks() -> None:
    rng = np.random.default_rng(2024)
    walks = 1_000_000
    for g in _connected_graphs(20, 10, seed=6):
        csr = g.to_csr()
        indptr, indices = csr.indptr, csr.indices
        deg = np.diff(indptr)
        per_source = walks // g.n
        for h in (1, 2, 3):
            acc = accessibility(g, h).values
            for v in range(g.n):
                pos = np.full(per_source, v, dtype=np.int64)
                for _ in range(h):
                    offset = (rng.random(per_source) * deg[pos]).astype(np.int64)
                    pos = indices[indptr[pos] + offset]
                freq = np.bincount(pos, minlength=g.n) / per_source
                assert math.exp(_entropy(freq)) == pytest.approx(acc[v], rel=0.01)


# -------------------------
# Table
# -------------------------

def test_measure_table_rows() -> None:
    rows = measure_table(_path(3), h=2)
    assert [r[0] for r in rows] == [0, 1, 2]
    assert [r[1] for r in rows] == [1, 2, 1]
    assert rows[1][2] == pytest.approx(1.0)
    # From a leaf, two steps end on either leaf; from the center, on the center
    assert rows[0][3] == pytest.approx(2.0)
    assert rows[1][3] == pytest.approx(1.0)

from __future__ import annotations

from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from aspl_lab.net.errors import DisconnectedGraph, DuplicateEdge, NodeOutOfRange, SelfLoop, TooSmall
from aspl_lab.net.generator import gen_er
from aspl_lab.net.graph import (
    add_edge,
    all_pairs_distances,
    aspl,
    bfs_distances,
    connected_components,
    diameter,
    is_connected,
    largest_connected_component,
    second_neighborhood,
)
from aspl_lab.net.io_formats import load_edge_list
from aspl_lab.net.types import UNREACHABLE, Graph

FIXTURES = Path(__file__).parent / "fixtures"


def _path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def _complete(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def _star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def _to_nx(g: Graph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    return G


def _random_graphs(count: int, max_n: int, seed: int):
    rng = np.random.default_rng(seed)
    for i in range(count):
        n = int(rng.integers(2, max_n + 1))
        p = float(rng.uniform(0.05, 0.9))
        yield gen_er(n, p, seed * 10_000 + i)


def _random_connected(count: int, max_n: int, seed: int):
    found = 0
    for g in _random_graphs(count * 20, max_n, seed):
        if g.n >= 3 and is_connected(g) and not g.is_complete():
            yield g
            found += 1
            if found == count:
                return


# -------------------------
# add_edge
# -------------------------

def test_add_edge_on_empty_graph() -> None:
    g = Graph.empty(3)
    add_edge(g, 0, 1)

    assert g.edge_count == 1
    assert g.has_edge(0, 1) and g.has_edge(1, 0)
    assert g.neighbors(0) == [1]
    assert g.neighbors(2) == []


def test_add_edge_rejects_duplicates_in_either_orientation() -> None:
    g = Graph.from_edges(3, [(0, 1), (1, 2)])

    with pytest.raises(DuplicateEdge):
        add_edge(g, 1, 0)
    with pytest.raises(DuplicateEdge):
        add_edge(g, 2, 1)
    assert g.edge_count == 2


def test_add_edge_rejects_self_loops_and_unknown_nodes() -> None:
    g = Graph.empty(2)

    with pytest.raises(SelfLoop):
        add_edge(g, 0, 0)
    with pytest.raises(NodeOutOfRange):
        add_edge(g, 0, 5)
    assert g.edge_count == 0


def test_adjacency_stays_sorted_and_symmetric() -> None:
    g = Graph.empty(6)
    for u, v in [(0, 5), (0, 2), (3, 0), (1, 0), (4, 2)]:
        add_edge(g, u, v)

    assert g.neighbors(0) == [1, 2, 3, 5]
    for u, v in g.edges():
        assert u < v
        assert u in g.neighbors(v) and v in g.neighbors(u)
    assert sum(g.degrees()) == 2 * g.edge_count


def test_graph_dict_form_and_fingerprint_are_stable() -> None:
    g = Graph.from_edges(4, [(2, 3), (0, 1), (1, 2)])
    h = Graph.from_dict(g.to_dict())

    assert h == g
    assert h.fingerprint() == g.fingerprint()
    h.add_edge(0, 3)
    assert h.fingerprint() != g.fingerprint()


# -------------------------
# Distances
# -------------------------

def test_bfs_distances_examples() -> None:
    assert bfs_distances(_path(4), 0).dist == (0, 1, 2, 3)

    two = Graph.empty(2)
    row = bfs_distances(two, 0)
    assert row.dist == (0, UNREACHABLE)
    assert row.reachable() == [0]

    with pytest.raises(NodeOutOfRange):
        bfs_distances(two, 2)


def test_shortcut_example_drops_distance_from_five_to_two() -> None:
    before = load_edge_list(FIXTURES / "shortcut_before.txt")
    after = load_edge_list(FIXTURES / "shortcut_after.txt")

    assert bfs_distances(before, 0).dist[5] == 5
    assert bfs_distances(after, 0).dist[5] == 2
    assert after.edge_count == before.edge_count + 1
    assert aspl(after) < aspl(before)


def test_aspl_examples() -> None:
    assert aspl(_complete(3)) == pytest.approx(1.0)
    assert aspl(_path(4)) == pytest.approx(10 / 6)
    for n in (2, 5, 9):
        assert aspl(_complete(n)) == pytest.approx(1.0)


def test_aspl_errors() -> None:
    with pytest.raises(DisconnectedGraph):
        aspl(Graph.empty(2))
    with pytest.raises(TooSmall):
        aspl(Graph.empty(1))


def test_diameter_examples() -> None:
    assert diameter(_path(5)) == 4
    assert diameter(_star(4)) == 2
    assert diameter(_complete(4)) == 1
    with pytest.raises(DisconnectedGraph):
        diameter(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_bfs_matches_floyd_warshall_on_random_graphs() -> None:
    for g in _random_graphs(500, 12, seed=1):
        ours = all_pairs_distances(g)
        oracle = nx.floyd_warshall_numpy(_to_nx(g), nodelist=list(range(g.n)))
        expected = np.where(np.isinf(oracle), UNREACHABLE, oracle).astype(np.int64)
        assert np.array_equal(ours, expected)
        # symmetry
        assert np.array_equal(ours, ours.T)


def test_aspl_matches_networkx_on_connected_graphs() -> None:
    for g in _random_connected(100, 14, seed=2):
        assert aspl(g) == pytest.approx(nx.average_shortest_path_length(_to_nx(g)), abs=1e-12)


def test_adding_an_absent_edge_never_increases_aspl() -> None:
    rng = np.random.default_rng(3)
    checked = 0
    for g in _random_connected(200, 14, seed=3):
        absent = [(u, v) for u in range(g.n) for v in range(u + 1, g.n) if not g.has_edge(u, v)]
        u, v = absent[int(rng.integers(len(absent)))]
        before = aspl(g)
        after_graph = g.copy()
        after_graph.add_edge(u, v)
        assert aspl(after_graph) <= before
        checked += 1
    assert checked == 200


# -------------------------
# Components
# -------------------------

def test_lcc_examples() -> None:
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    sub, mapping = largest_connected_component(g)

    assert sub.n == 3
    assert sub.edge_count == 2
    assert mapping == {0: 0, 1: 1, 2: 2}

    sub, mapping = largest_connected_component(Graph.empty(1))
    assert sub.n == 1 and sub.edge_count == 0

    with pytest.raises(TooSmall):
        largest_connected_component(Graph.empty(0))


def test_lcc_relabels_in_ascending_order() -> None:
    g = Graph.from_edges(6, [(0, 1), (2, 5), (5, 4), (4, 3)])
    sub, mapping = largest_connected_component(g)

    assert mapping == {2: 0, 3: 1, 4: 2, 5: 3}
    assert sorted(sub.edges()) == [(0, 3), (1, 2), (2, 3)]
    assert is_connected(sub)


def test_lcc_tie_goes_to_the_component_with_the_smallest_id() -> None:
    g = Graph.from_edges(6, [(3, 4), (4, 5), (0, 1), (1, 2)])
    _, mapping = largest_connected_component(g)

    assert sorted(mapping) == [0, 1, 2]
    assert connected_components(g) == [[0, 1, 2], [3, 4, 5]]


def test_lcc_matches_networkx_sizes() -> None:
    for g in _random_graphs(200, 15, seed=4):
        sub, _ = largest_connected_component(g)
        biggest = max(nx.connected_components(_to_nx(g)), key=len)
        assert sub.n == len(biggest)
        assert is_connected(sub)


# -------------------------
# Second neighborhood
# -------------------------

def test_second_neighborhood_examples() -> None:
    assert second_neighborhood(_path(4), 0) == {2}
    assert second_neighborhood(_complete(4), 0) == set()

    star = _star(3)
    assert second_neighborhood(star, 1) == {2, 3}
    assert second_neighborhood(star, 0) == set()


def test_second_neighborhood_is_exactly_distance_two() -> None:
    for g in _random_graphs(100, 12, seed=5):
        for u in range(g.n):
            dist = bfs_distances(g, u).dist
            assert second_neighborhood(g, u) == {w for w in range(g.n) if dist[w] == 2}

import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csrnbrw.graph import (GraphError, UndefinedMetricError, build_graph, connected_components, density,
                           empty_graph, read_edgelist, remove_isolates, transitivity, write_edgelist)


def brute_transitivity(n, edges):
    adj = {(min(u, v), max(u, v)) for u, v, _ in edges}
    linked = lambda a, b: (min(a, b), max(a, b)) in adj  # noqa: E731
    closed = paths = 0
    for centre in range(n):
        for a, b in itertools.combinations([x for x in range(n) if x != centre], 2):
            if linked(centre, a) and linked(centre, b):
                paths += 1
                closed += linked(a, b)
    return 0.0 if paths == 0 else closed / paths


def assert_symmetric(g):
    pairs = set()
    for u in range(g.node_count):
        for x, e in zip(g.neighbors(u), g.eid[g.indptr[u]:g.indptr[u + 1]]):
            pairs.add((u, int(x), int(e)))
    for u, x, e in pairs:
        assert (x, u, e) in pairs
        assert {g.src[e], g.dst[e]} == {u, x}
    assert len(pairs) == 2 * g.edge_count


edge_lists = st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, 4))
             .filter(lambda t: t[0] != t[1]), max_size=20)))


class TestBuild:
    def test_duplicates_merge_by_sum(self):
        g = build_graph([(0, 1, 1), (1, 0, 2)])
        assert g.edge_count == 1
        assert g.weight[0] == 3.0

    def test_triangle(self, triangle):
        assert (triangle.node_count, triangle.edge_count) == (3, 3)

    def test_self_loop_rejected_with_node(self):
        with pytest.raises(GraphError, match="node 0"):
            build_graph([(0, 0, 1)])

    def test_immutable(self, triangle):
        with pytest.raises(ValueError):
            triangle.weight[0] = 5

    @given(edge_lists)
    def test_adjacency_symmetric(self, data):
        n, edges = data
        assert_symmetric(build_graph(edges, node_count=n))


class TestDensity:
    def test_complete(self):
        assert density(build_graph([(u, v, 1) for u, v in itertools.combinations(range(4), 2)])) == 1.0

    def test_path(self):
        assert density(build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])) == 0.5

    def test_empty(self):
        assert density(empty_graph(10)) == 0.0

    def test_too_small(self):
        with pytest.raises(UndefinedMetricError):
            density(empty_graph(1))

    @given(edge_lists, st.randoms())
    def test_relabel_invariant(self, data, rnd):
        n, edges = data
        perm = list(range(n))
        rnd.shuffle(perm)
        g1 = build_graph(edges, node_count=n)
        g2 = build_graph([(perm[u], perm[v], w) for u, v, w in edges], node_count=n)
        assert density(g1) == density(g2)


class TestTransitivity:
    def test_triangle(self, triangle):
        assert transitivity(triangle) == 1.0

    def test_path(self):
        assert transitivity(build_graph([(0, 1, 1), (1, 2, 1)])) == 0.0

    def test_k4_minus_edge(self):
        edges = [(u, v, 1) for u, v in itertools.combinations(range(4), 2) if (u, v) != (0, 1)]
        assert transitivity(build_graph(edges)) == pytest.approx(0.75)

    @settings(max_examples=150)
    @given(edge_lists)
    def test_matches_brute_force(self, data):
        n, edges = data
        assert transitivity(build_graph(edges, node_count=n)) == pytest.approx(brute_transitivity(n, edges))

    def test_matches_networkx(self):
        G = nx.gnp_random_graph(60, 0.1, seed=3)
        g = build_graph([(u, v, 1) for u, v in G.edges()], node_count=60)
        assert transitivity(g) == pytest.approx(nx.transitivity(G))


class TestComponents:
    def test_two_triangles(self):
        g = build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)])
        p = connected_components(g)
        assert sorted(p.sizes()) == [3, 3]

    def test_connected(self, two_triangles_bridged):
        assert connected_components(two_triangles_bridged).community_count == 1

    def test_star_and_clique_toy(self, star_clique_graph):
        p = connected_components(star_clique_graph)
        groups = set(p.groups(star_clique_graph.names))
        assert groups == {frozenset("abcdefghi"), frozenset(["alpha", "beta", "gamma", "delta", "rho"])}


class TestIsolates:
    def test_two_isolates(self):
        g = build_graph([(0, 2, 1), (2, 4, 1)], node_count=5)
        sub, remap = remove_isolates(g)
        assert sub.node_count == 3
        assert remap.tolist() == [0, 2, 4]
        assert sub.edge_count == 2

    def test_no_isolates_identity(self, triangle):
        sub, remap = remove_isolates(triangle)
        assert remap.tolist() == [0, 1, 2]
        assert np.array_equal(sub.src, triangle.src) and np.array_equal(sub.weight, triangle.weight)

    def test_all_isolates(self):
        sub, remap = remove_isolates(empty_graph(4))
        assert sub.node_count == 0 and remap.size == 0

    @given(edge_lists)
    def test_idempotent(self, data):
        n, edges = data
        once, _ = remove_isolates(build_graph(edges, node_count=n + 2))
        twice, remap = remove_isolates(once)
        assert remap.tolist() == list(range(once.node_count))
        assert np.array_equal(once.src, twice.src) and np.array_equal(once.dst, twice.dst)
        assert (once.degree() >= 1).all()


def test_edgelist_roundtrip(tmp_path):
    g = build_graph([(0, 1, 2), (1, 2, 0.25)], node_count=5)
    write_edgelist(g, tmp_path / "g.edges")
    text = (tmp_path / "g.edges").read_text()
    assert "0 1 2\n" in text and "1 2 0.25\n" in text
    back = read_edgelist(tmp_path / "g.edges")
    assert back.node_count == 5
    assert back.weight.tolist() == [2.0, 0.25]


def test_edgelist_comments_and_errors(tmp_path):
    p = tmp_path / "x.edges"
    p.write_text("# comment\n0 1 3\n\n1 2\n")
    g = read_edgelist(p)
    assert g.weight.tolist() == [3.0, 1.0]
    p.write_text("0 1 2 3\n")
    with pytest.raises(GraphError):
        read_edgelist(p)

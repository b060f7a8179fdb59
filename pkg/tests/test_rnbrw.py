import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csrnbrw.graph import GraphError, build_graph
from csrnbrw.rnbrw import (EdgeWeights, RetraceCounts, csrnbrw_weights, retrace_probabilities, run_walks,
                           worker_seeds, write_weights)


def exact_retrace(g):
    """Exact probability, per walk, that each edge closes the cycle.

    Enumerates the whole walk tree with rational arithmetic; only usable on
    small graphs."""
    nbrs = {u: [int(x) for x in g.neighbors(u)] for u in range(g.node_count)}
    edge_id = {frozenset((u, v)): e for e, (u, v, _) in enumerate(g.edges())}
    probs = [Fraction(0)] * g.edge_count

    def walk(prev, cur, visited, mass):
        options = [x for x in nbrs[cur] if x != prev]
        if not options:
            return
        share = mass / len(options)
        for x in options:
            if x in visited:
                probs[edge_id[frozenset((cur, x))]] += share
            else:
                walk(cur, x, visited | {x}, share)

    start = Fraction(1, 2 * g.edge_count)
    for u, v, _ in g.edges():
        walk(u, v, {u, v}, start)
        walk(v, u, {u, v}, start)
    return np.array([float(p) for p in probs])


def within_sigma(tally, total, p, k=3.0):
    sigma = np.sqrt(total * p * (1 - p))
    return np.abs(tally - total * p) <= k * np.maximum(sigma, 1e-12)


def cycle(n):
    return build_graph([(i, (i + 1) % n, 1) for i in range(n)])


def complete(n):
    return build_graph([(u, v, 1) for u, v in itertools.combinations(range(n), 2)])


class TestWalks:
    def test_triangle_uniform(self, triangle):
        c = run_walks(triangle, 30_000, seed=1)
        # on a triangle every walk closes a cycle
        assert c.completed_cycles == 30_000
        assert within_sigma(c.tally, 30_000, 1 / 3).all()

    def test_star_never_closes(self):
        star = build_graph([(0, i, 1) for i in range(1, 9)])
        c = run_walks(star, 5_000, seed=2)
        assert c.completed_cycles == 0 and not c.tally.any()

    def test_five_cycle(self):
        c = run_walks(cycle(5), 50_000, seed=3)
        assert c.completed_cycles == 50_000
        assert within_sigma(c.tally, 50_000, 0.2).all()

    @pytest.mark.parametrize("edges", [
        [(0, 1), (1, 2), (2, 0), (2, 3)],                        # triangle with pendant
        [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4), (4, 5)],  # diamond plus tail
        [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)],  # two triangles joined by a path
        [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3), (3, 4), (4, 1), (4, 5)],
    ])
    def test_matches_exact_enumeration(self, edges):
        g = build_graph([(u, v, 1) for u, v in edges])
        exact = exact_retrace(g)
        total = 200_000
        c = run_walks(g, total, seed=11)
        assert within_sigma(c.tally, total, exact, k=4).all(), (c.tally / total, exact)
        assert c.completed_cycles == pytest.approx(total * exact.sum(), abs=4 * np.sqrt(total))

    def test_k5_symmetric(self):
        exact = exact_retrace(complete(5))
        assert np.allclose(exact, exact[0])
        c = run_walks(complete(5), 100_000, seed=2)
        assert within_sigma(c.tally, 100_000, exact, k=4).all()

    def test_clique_pair_toy_matches_exact(self, clique_pair_graph):
        exact = exact_retrace(clique_pair_graph)
        total = 300_000
        c = run_walks(clique_pair_graph, total, seed=5)
        assert within_sigma(c.tally, total, exact, k=4).all()

    def test_deterministic(self, two_triangles_bridged):
        a = run_walks(two_triangles_bridged, 2_000, seed=9, workers=3)
        b = run_walks(two_triangles_bridged, 2_000, seed=9, workers=3)
        assert np.array_equal(a.tally, b.tally)
        assert a.total_walks == 2_000

    def test_workers_split_budget_exactly(self, two_triangles_bridged):
        c = run_walks(two_triangles_bridged, 1_001, seed=9, workers=4)
        assert c.total_walks == 1_001
        assert c.tally.sum() == c.completed_cycles

    def test_worker_seeds_distinct(self):
        s = worker_seeds(123, 8)
        assert len(set(s)) == 8 and s == worker_seeds(123, 8)

    def test_max_steps_cuts_long_walks(self):
        # closing a 30-cycle takes 30 steps
        assert run_walks(cycle(30), 500, seed=0, max_steps=10).completed_cycles == 0
        assert run_walks(cycle(30), 500, seed=0).completed_cycles == 500

    def test_requires_edges(self):
        with pytest.raises(GraphError):
            run_walks(build_graph([], node_count=3), 10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 30), st.data())
    def test_forests_have_no_cycles(self, n, data):
        parents = [data.draw(st.integers(-1, i - 1)) for i in range(1, n)]
        edges = [(i, p, 1) for i, p in zip(range(1, n), parents) if p >= 0]
        if not edges:
            return
        c = run_walks(build_graph(edges, node_count=n), 500, seed=data.draw(st.integers(0, 100)))
        assert c.completed_cycles == 0 and not c.tally.any()


class TestCounts:
    def test_merge_is_sum(self):
        a = RetraceCounts(np.array([1, 2, 0]), 5, 3)
        b = RetraceCounts(np.array([0, 1, 1]), 4, 2)
        c = RetraceCounts(np.array([2, 0, 0]), 3, 2)
        ab_c = a.merge(b).merge(c)
        a_bc = a.merge(b.merge(c))
        assert np.array_equal(ab_c.tally, a_bc.tally) and ab_c.total_walks == 12
        assert np.array_equal(a.merge(b).tally, b.merge(a).tally)

    def test_invariant_checked(self):
        with pytest.raises(ValueError):
            RetraceCounts(np.array([1, 1]), 5, 3)
        with pytest.raises(ValueError):
            RetraceCounts(np.array([3, 3]), 5, 6)


class TestProbabilities:
    def test_normalisation(self):
        pi = retrace_probabilities(RetraceCounts(np.array([9990, 10020, 9990]), 30_000, 30_000))
        assert pi.values == pytest.approx([0.333, 0.334, 0.333])
        assert pi.values.sum() == pytest.approx(1.0)
        assert pi.kind == "pi"

    def test_all_zero(self):
        pi = retrace_probabilities(RetraceCounts(np.zeros(4, dtype=np.int64), 100, 0))
        assert not pi.values.any()

    def test_single_cycle(self):
        pi = retrace_probabilities(RetraceCounts(np.array([0, 1, 0]), 7, 1))
        assert pi.values.tolist() == [0.0, 1.0, 0.0]

    def test_sums_to_one_on_real_walks(self, clique_pair_graph):
        pi = retrace_probabilities(run_walks(clique_pair_graph, 1_000, seed=0))
        assert pi.values.sum() == pytest.approx(1.0) and (pi.values >= 0).all()


class TestCsrnbrw:
    def test_product(self):
        g = build_graph([(0, 1, 3), (1, 2, 2)])
        w = csrnbrw_weights(EdgeWeights(np.array([0.5, 0.0]), "pi"), g)
        assert w.values.tolist() == [1.5, 0.0] and w.kind == "csrnbrw"

    def test_edge_set_mismatch(self, triangle):
        with pytest.raises(GraphError):
            csrnbrw_weights(EdgeWeights(np.array([0.5, 0.5]), "pi"), triangle)

    def test_star_zero_clique_positive(self, star_clique_graph):
        g = star_clique_graph
        w = csrnbrw_weights(retrace_probabilities(run_walks(g, 20_000, seed=4)), g).values
        star = {i for i, name in enumerate(g.names) if len(name) == 1}
        on_star = np.array([u in star for u in g.src])
        assert (w[on_star] == 0).all()
        assert (w[~on_star] > 0).all()

    def test_weight_dump(self, tmp_path, triangle):
        pi = EdgeWeights(np.array([0.25, 0.25, 0.5]), "pi")
        write_weights(triangle.with_weights([1, 2, 4]), pi, tmp_path / "w.txt")
        lines = (tmp_path / "w.txt").read_text().splitlines()
        assert lines[0] == "# u v pi sc csrnbrw"
        assert lines[1:] == ["0 1 0.25 1 0.25", "0 2 0.25 2 0.5", "1 2 0.5 4 2.0"]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prebunk.netgraph import (
    WeightedDigraph,
    chung_lu_generate,
    chung_lu_probabilities,
    hop_distances,
    in_neighbors,
    local_neighborhood,
    power_law_weights,
    prune_edges,
    read_edgelist,
    undirected_diameter,
    write_edgelist,
)
from support import bfs_diameter, bfs_distances, chain


@st.composite
def digraphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    probs = draw(st.lists(st.floats(1e-6, 1.0), min_size=len(chosen), max_size=len(chosen)))
    return WeightedDigraph.from_edges(n, dict(zip(chosen, probs)))


class TestWeightedDigraph:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            WeightedDigraph.from_edges(2, {(1, 1): 0.5})

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
    def test_rejects_bad_probability(self, p):
        with pytest.raises(ValueError):
            WeightedDigraph.from_edges(2, {(1, 2): p})

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            WeightedDigraph.from_edges(2, {(1, 3): 0.5})

    def test_edges_are_one_based(self):
        g = WeightedDigraph.from_edges(3, {(3, 1): 0.2, (1, 2): 0.7})
        assert g.edges == {(1, 2): 0.7, (3, 1): 0.2}
        assert list(g.nodes) == [1, 2, 3]

    def test_immutable_arrays(self):
        g = chain(3)
        with pytest.raises(ValueError):
            g.prob[0] = 0.1


class TestPowerLawWeights:
    def test_single_node(self):
        assert power_law_weights(1, 3.0, 3) == pytest.approx([3.0])

    def test_three_nodes(self):
        assert power_law_weights(3, 2.0, 3) == pytest.approx([2.0, 1.41421356, 1.15470054])

    def test_gamma_two_and_half(self):
        assert power_law_weights(2, 1.0, 2.5) == pytest.approx([1.0, 0.62996052])

    @pytest.mark.parametrize("gamma", [2.0, 1.5])
    def test_rejects_small_gamma(self, gamma):
        with pytest.raises(ValueError):
            power_law_weights(5, 1.0, gamma)

    def test_strictly_decreasing(self):
        w = power_law_weights(100, 4.0, 2.8)
        assert np.all(np.diff(w) < 0)


class TestChungLu:
    def test_equal_unit_weights(self):
        p = chung_lu_probabilities(np.array([1.0, 1.0]))
        assert p[0, 1] == p[1, 0] == 0.5
        assert p[0, 0] == p[1, 1] == 0

    def test_clamped_pair_always_present(self):
        for s in range(20):
            g = chung_lu_generate([10, 10], np.random.default_rng(s))
            assert g.edges == {(1, 2): 1.0, (2, 1): 1.0}

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            chung_lu_generate([], np.random.default_rng(0))

    def test_tiny_weight_edge_frequency(self):
        # p = 1e-8 / 2e-4 = 5e-5 per ordered pair
        p = chung_lu_probabilities(np.array([1e-4, 1e-4]))[0, 1]
        assert p == pytest.approx(5e-5)
        rng = np.random.default_rng(7)
        trials = 200_000
        hits = sum(chung_lu_generate([1e-4, 1e-4], rng).num_edges for _ in range(trials))
        n = 2 * trials
        assert abs(hits - n * p) <= 3 * np.sqrt(n * p * (1 - p))

    def test_stored_weight_is_assigned_probability(self):
        w = power_law_weights(40, 3.0, 2.8)
        p = chung_lu_probabilities(w)
        g = chung_lu_generate(w, np.random.default_rng(1))
        for (i, j), pij in g.edges.items():
            assert pij == p[i - 1, j - 1]

    def test_deterministic(self):
        w = power_law_weights(200, 20.0, 2.8)
        a = chung_lu_generate(w, np.random.default_rng(42), 5e-4)
        b = chung_lu_generate(w, np.random.default_rng(42), 5e-4)
        assert a == b

    def test_generate_with_threshold_equals_prune_after(self):
        w = power_law_weights(200, 20.0, 2.8)
        a = chung_lu_generate(w, np.random.default_rng(3), 5e-3)
        b = prune_edges(chung_lu_generate(w, np.random.default_rng(3)), 5e-3)
        assert a == b

    def test_degree_law(self):
        n, R = 50, 1000
        w = power_law_weights(n, 5.0, 2.8)
        p = chung_lu_probabilities(w)
        assert p.max() < 1
        rng = np.random.default_rng(11)
        deg = np.zeros(n)
        for _ in range(R):
            g = chung_lu_generate(w, rng)
            deg += np.bincount(g.src, minlength=n) + np.bincount(g.dst, minlength=n)
        mean = deg / R
        expected = 2 * w * (w.sum() - w) / w.sum()
        sd = np.sqrt(2 * (p * (1 - p)).sum(axis=1) / R)
        assert np.all(np.abs(mean - expected) <= 4 * sd)


class TestPrune:
    def test_zero_threshold_identity(self):
        g = WeightedDigraph.from_edges(3, {(1, 2): 0.3, (2, 3): 1e-9})
        assert prune_edges(g, 0) == g

    def test_drops_small_edge(self):
        g = WeightedDigraph.from_edges(2, {(1, 2): 0.3, (2, 1): 0.0004})
        assert prune_edges(g, 5e-4).edges == {(1, 2): 0.3}

    def test_threshold_one_removes_all(self):
        g = WeightedDigraph.from_edges(3, {(1, 2): 0.3, (2, 3): 0.99})
        out = prune_edges(g, 1.0)
        assert out.num_edges == 0 and out.n == 3

    @given(digraphs(), st.floats(0, 1))
    def test_idempotent(self, g, theta):
        once = prune_edges(g, theta)
        assert prune_edges(once, theta) == once
        assert all(p >= theta for p in once.edges.values())


class TestNeighbors:
    def test_in_neighbors_single_edge(self):
        g = WeightedDigraph.from_edges(2, {(1, 2): 0.5})
        assert in_neighbors(g, 2) == {1}

    def test_isolated(self):
        assert in_neighbors(WeightedDigraph.from_edges(3, {(1, 2): 0.5}), 3) == set()

    def test_complete(self):
        g = WeightedDigraph.from_edges(3, {(i, j): 0.5 for i in range(1, 4) for j in range(1, 4) if i != j})
        assert in_neighbors(g, 1) == {2, 3}

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            in_neighbors(chain(2), 3)


class TestLocalNeighborhood:
    def test_star(self):
        g = WeightedDigraph.from_edges(6, {(1, j): 0.5 for j in range(2, 7)})
        nb = local_neighborhood(g, 1, 1)
        assert nb.n == 6 and nb.to_global == (1, 2, 3, 4, 5, 6)

    def test_path_radius_one(self):
        nb = local_neighborhood(chain(3), 3, 1)
        assert nb.to_global == (2, 3)
        assert nb.center == 2
        assert nb.subgraph.edges == {(1, 2): 1.0}

    def test_directed_ball_excludes_out_neighbors(self):
        # 1 -> 2 -> 3 -> 4, centre 3: undirected ball has 4, directed in-ball does not
        g = chain(4)
        assert local_neighborhood(g, 3, 1).to_global == (2, 3, 4)
        assert local_neighborhood(g, 3, 1, directed=True).to_global == (2, 3)

    def test_rejects_bad_center_and_radius(self):
        with pytest.raises(ValueError):
            local_neighborhood(chain(3), 4, 1)
        with pytest.raises(ValueError):
            local_neighborhood(chain(3), 1, 0)

    @settings(max_examples=60)
    @given(digraphs(), st.data())
    def test_monotone_and_covers_component(self, g, data):
        c = data.draw(st.integers(1, g.n))
        comp = set(bfs_distances(g, c))
        prev: set[int] = set()
        for m in range(1, g.n + 1):
            nodes = set(local_neighborhood(g, c, m).to_global)
            assert prev <= nodes
            prev = nodes
        assert prev == comp

    @settings(max_examples=60)
    @given(digraphs(), st.data())
    def test_members_within_radius_and_induced(self, g, data):
        c = data.draw(st.integers(1, g.n))
        m = data.draw(st.integers(1, 3))
        nb = local_neighborhood(g, c, m)
        dist = bfs_distances(g, c)
        assert set(nb.to_global) == {v for v, d in dist.items() if d <= m}
        assert nb.to_global[nb.center - 1] == c
        back = {(nb.to_global[i - 1], nb.to_global[j - 1]): p for (i, j), p in nb.subgraph.edges.items()}
        kept = set(nb.to_global)
        assert back == {e: p for e, p in g.edges.items() if e[0] in kept and e[1] in kept}


class TestDistances:
    def test_single_node(self):
        assert undirected_diameter(WeightedDigraph.from_edges(1, {})).value == 0

    def test_path_five(self):
        d = undirected_diameter(chain(5))
        assert d.value == 4 and not d.disconnected

    def test_two_pairs(self):
        d = undirected_diameter(WeightedDigraph.from_edges(4, {(1, 2): 0.5, (4, 3): 0.5}))
        assert d.value == 1 and d.disconnected

    @settings(max_examples=80)
    @given(digraphs())
    def test_against_bfs(self, g):
        d = undirected_diameter(g)
        assert (d.value, d.disconnected) == bfs_diameter(g)
        for v in g.nodes:
            assert hop_distances(g, v) == bfs_distances(g, v)

    def test_directed_to(self):
        assert hop_distances(chain(4), 3, directed_to=True) == {1: 2, 2: 1, 3: 0}


class TestEdgeList:
    @settings(max_examples=40)
    @given(digraphs())
    def test_round_trip(self, tmp_path_factory, g):
        path = tmp_path_factory.mktemp("el") / "g.txt"
        write_edgelist(g, path)
        assert read_edgelist(path) == g

    def test_header_required(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 0.5\n")
        with pytest.raises(ValueError):
            read_edgelist(path)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randsub.graphgen import (
    BA_SEED_SIZE,
    UNREACHABLE,
    Graph,
    all_pairs_distances,
    attachment_weights,
    barabasi_albert,
    erdos_renyi,
    max_degree,
    read_edge_list,
    write_edge_list,
)
from randsub.permute import RngStream


def floyd_warshall(g: Graph) -> np.ndarray:
    inf = float("inf")
    d = [[0 if i == j else inf for j in range(g.n)] for i in range(g.n)]
    for i, j in g.edges():
        d[i][j] = d[j][i] = 1
    for k in range(g.n):
        for i in range(g.n):
            for j in range(g.n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return np.array([[UNREACHABLE if v == inf else v for v in row] for row in d])


def assert_simple(g: Graph):
    for i, nb in enumerate(g.adjacency):
        assert list(nb) == sorted(set(nb))
        assert i not in nb
        for j in nb:
            assert i in g.adjacency[j]


class TestErdosRenyi:
    def test_zero_lambda_empty(self):
        assert erdos_renyi(30, 0.0, RngStream(1)).num_edges == 0

    def test_full_lambda_complete(self):
        g = erdos_renyi(12, 11.0, RngStream(1))
        assert g.num_edges == 66
        assert_simple(g)

    def test_mean_degree(self):
        means = [erdos_renyi(1000, 3.0, RngStream(5, k)).degrees().mean() for k in range(100)]
        assert abs(np.mean(means) - 3.0) < 0.2

    def test_edge_count_binomial(self):
        n, lam, reps = 60, 2.0, 300
        pairs = n * (n - 1) // 2
        p = lam / (n - 1)
        counts = [erdos_renyi(n, lam, RngStream(9, k)).num_edges for k in range(reps)]
        sigma = np.sqrt(pairs * p * (1 - p) / reps)
        assert abs(np.mean(counts) - pairs * p) < 4 * sigma

    @pytest.mark.parametrize("lam", [-0.5, 10.0])
    def test_lambda_range(self, lam):
        with pytest.raises(ValueError):
            erdos_renyi(10, lam, RngStream(0))


class TestBarabasiAlbert:
    def test_one_new_node(self):
        rng_a, rng_b = RngStream(3), RngStream(3)
        seed = erdos_renyi(BA_SEED_SIZE, 1.0, rng_a)
        g = barabasi_albert(21, 1, rng_b)
        assert g.num_edges == seed.num_edges + 1
        assert len(g.adjacency[20]) == 1

    def test_edge_accounting(self):
        seed = erdos_renyi(BA_SEED_SIZE, 1.0, RngStream(4))
        g = barabasi_albert(3000, 2, RngStream(4))
        assert g.num_edges == seed.num_edges + 2 * 2980
        assert_simple(g)

    def test_heavier_tail_than_er(self):
        ba, er = [], []
        for k in range(50):
            g = barabasi_albert(3000, 1, RngStream(6, k))
            ba.append(np.percentile(g.degrees(), 99))
            er.append(np.percentile(erdos_renyi(3000, g.degrees().mean(), RngStream(7, k)).degrees(), 99))
        assert np.mean(ba) > np.mean(er)

    def test_isolated_nodes_keep_positive_weight(self):
        w = attachment_weights(np.array([0.0, 3.0, 1.0, 0.0, 2.0]))
        assert (w > 0).all()
        assert w[0] / w.sum() == pytest.approx(1e-9, rel=1e-6)
        # all isolated: uniform choice
        w = attachment_weights(np.zeros(4))
        assert np.all(w == w[0]) and w[0] > 0

    @pytest.mark.parametrize("n,m", [(20, 1), (100, 0), (100, 21)])
    def test_parameters(self, n, m):
        with pytest.raises(ValueError):
            barabasi_albert(n, m, RngStream(0))


class TestDistances:
    def test_path(self):
        d = all_pairs_distances(Graph.from_edges(3, [(0, 1), (1, 2)]))
        assert d.values[0, 2] == 2

    def test_disconnected(self):
        d = all_pairs_distances(Graph.empty(2))
        assert d.values[0, 1] == UNREACHABLE
        assert not d.finite[0, 1]

    def test_floyd_warshall_fixed(self):
        g = Graph.from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (6, 7)])
        np.testing.assert_array_equal(all_pairs_distances(g).values, floyd_warshall(g))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 14), st.floats(0.0, 4.0), st.integers(0, 2 ** 32 - 1))
    def test_metric_properties(self, n, lam, seed):
        g = erdos_renyi(n, min(lam, n - 1), RngStream(seed))
        d = all_pairs_distances(g).values
        np.testing.assert_array_equal(d, floyd_warshall(g))
        assert (np.diag(d) == 0).all()
        assert (d == d.T).all()
        fin = d != UNREACHABLE
        for k in range(n):
            via = d[:, k][:, None] + d[k, :][None, :]
            ok = fin[:, k][:, None] & fin[k, :][None, :]
            assert (d[ok] <= via[ok]).all()
            assert fin[ok].all()


class TestMaxDegree:
    def test_empty(self):
        assert max_degree(Graph.empty(5)) == 0

    def test_star(self):
        assert max_degree(Graph.from_edges(5, [(0, k) for k in range(1, 5)])) == 4

    def test_at_least_mean(self):
        g = erdos_renyi(1000, 5.0, RngStream(2))
        assert max_degree(g) >= g.degrees().mean()


class TestGraphType:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph.from_edges(3, [(1, 1)])

    def test_parallel_edges_collapse(self):
        g = Graph.from_edges(3, [(0, 1), (1, 0), (0, 1)])
        assert g.num_edges == 1

    def test_edge_list_round_trip(self, tmp_path):
        g = barabasi_albert(60, 2, RngStream(1))
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        assert path.read_text().splitlines()[0] == "n=60"
        assert read_edge_list(path) == g

    def test_edge_list_errors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("n=3\n0 1\n1\n")
        with pytest.raises(ValueError, match="line 3"):
            read_edge_list(path)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(21, 80), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
    def test_generators_simple(self, n, m, seed):
        assert_simple(barabasi_albert(n, m, RngStream(seed)))
        assert_simple(erdos_renyi(n, 2.0, RngStream(seed)))

import numpy as np
import pytest

from dynembed.graphs import DynamicGraph, Snapshot
from dynembed.metrics import (
    average_precision,
    build_ranking,
    evaluate_method,
    global_precision_at_k,
    map_score,
    new_links_snapshot,
    precision_at_k,
)


from oracles import brute_force_map, random_metric_instance


def random_instance(rng, n):
    # ties injected so the deterministic tie-break rule is exercised
    return random_metric_instance(rng, n, tie_mass=True)


class TestPrecisionAtK:
    def test_hand_enumeration(self):
        # ranked [a, b, c] with ground truth {a, c}
        scores = np.array([0.0, 0.9, 0.5, 0.1])  # node 0 ranks 1, 2, 3
        ranking = build_ranking(scores, 0)
        gt = {1, 3}
        assert precision_at_k(ranking, gt, 1) == 1.0
        assert precision_at_k(ranking, gt, 2) == 0.5
        assert precision_at_k(ranking, gt, 3) == pytest.approx(2 / 3)

    def test_empty_ground_truth_is_zero(self):
        ranking = build_ranking(np.array([0.0, 0.3, 0.2]), 0)
        assert precision_at_k(ranking, set(), 2) == 0.0

    def test_full_ground_truth_is_one(self):
        ranking = build_ranking(np.array([0.0, 0.3, 0.2]), 0)
        assert precision_at_k(ranking, {1, 2}, 1) == 1.0
        assert precision_at_k(ranking, {1, 2}, 2) == 1.0

    def test_k_beyond_candidates_keeps_divisor(self):
        ranking = build_ranking(np.array([0.0, 0.3, 0.2]), 0)
        assert precision_at_k(ranking, {1, 2}, 4) == 0.5

    def test_rejects_nonpositive_k(self):
        ranking = build_ranking(np.array([0.0, 0.3]), 0)
        with pytest.raises(ValueError):
            precision_at_k(ranking, {1}, 0)


class TestAveragePrecision:
    def test_hand_enumeration(self):
        scores = np.array([0.0, 0.9, 0.5, 0.1])
        ranking = build_ranking(scores, 0)
        assert average_precision(ranking, {1, 3}) == pytest.approx(5 / 6)

    def test_perfect_ranking(self):
        scores = np.array([0.0, 0.9, 0.8, 0.1, 0.05])
        ranking = build_ranking(scores, 0)
        assert average_precision(ranking, {1, 2}) == 1.0

    def test_single_edge_ranked_last(self):
        n = 6  # 5 candidates, true edge scored lowest
        scores = np.full(n, 0.5)
        scores[3] = 0.0
        ranking = build_ranking(scores, 0)
        assert average_precision(ranking, {3}) == pytest.approx(1 / 5)

    def test_empty_ground_truth_raises(self):
        ranking = build_ranking(np.array([0.0, 0.3]), 0)
        with pytest.raises(ValueError, match="AP undefined"):
            average_precision(ranking, set())


class TestMapScore:
    def test_perfect_predictor(self):
        snapshot = Snapshot(4, [(0, 1, 1.0), (2, 3, 1.0), (1, 2, 1.0)])
        scores = np.zeros((4, 4))
        for u, v, _ in snapshot.edges:
            scores[u, v] = scores[v, u] = 1.0
        assert map_score(scores, snapshot).map == 1.0

    def test_antiperfect_matching(self):
        # each node has one true edge, scored strictly below everything else
        snapshot = Snapshot(6, [(0, 1, 1.0), (2, 3, 1.0), (4, 5, 1.0)])
        scores = np.full((6, 6), 0.5)
        for u, v, _ in snapshot.edges:
            scores[u, v] = scores[v, u] = 0.0
        np.fill_diagonal(scores, 0.0)
        assert map_score(scores, snapshot).map == pytest.approx(1 / 5)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 16))
        scores, snapshot = random_instance(rng, n)
        try:
            result = map_score(scores, snapshot)
        except ValueError:
            assert all(not s for s in snapshot.neighbor_sets())
            return
        assert result.map == pytest.approx(brute_force_map(scores, snapshot),
                                           abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(77)
        scores, snapshot = random_instance(rng, 12)
        base = map_score(scores, snapshot)
        affine = map_score(2.0 * scores + 1.0, snapshot)
        squashed = map_score(np.tanh(scores), snapshot)
        assert base.map == affine.map == squashed.map
        assert base.per_node_ap == affine.per_node_ap == squashed.per_node_ap

    def test_excluded_nodes_counted(self):
        snapshot = Snapshot(4, [(0, 1, 1.0)])  # nodes 2, 3 isolated
        scores = np.random.default_rng(0).random((4, 4))
        result = map_score(scores, snapshot)
        assert result.excluded == 2
        assert set(result.per_node_ap) == {0, 1}

    def test_all_isolated_raises(self):
        snapshot = Snapshot(3, [])
        with pytest.raises(ValueError, match="ground-truth"):
            map_score(np.zeros((3, 3)), snapshot)

    def test_rejects_non_finite_scores(self):
        snapshot = Snapshot(2, [(0, 1, 1.0)])
        scores = np.array([[0.0, np.nan], [np.nan, 0.0]])
        with pytest.raises(ValueError, match="finite"):
            map_score(scores, snapshot)

    def test_node_subset(self):
        rng = np.random.default_rng(5)
        scores, snapshot = random_instance(rng, 10)
        full = map_score(scores, snapshot)
        sub = map_score(scores, snapshot, nodes=[0, 1, 2])
        assert set(sub.per_node_ap) <= {0, 1, 2}
        for u, ap in sub.per_node_ap.items():
            assert ap == full.per_node_ap[u]


class TestGlobalPrecision:
    def test_hand_case(self):
        snapshot = Snapshot(4, [(0, 1, 1.0), (2, 3, 1.0)])
        scores = np.zeros((4, 4))
        scores[0, 1] = scores[1, 0] = 0.9
        scores[0, 2] = scores[2, 0] = 0.8
        scores[2, 3] = scores[3, 2] = 0.7
        out = global_precision_at_k(scores, snapshot, ks=(1, 2, 3, 6))
        assert out[1] == 1.0
        assert out[2] == 0.5
        assert out[3] == pytest.approx(2 / 3)
        assert out[6] == pytest.approx(2 / 6)

    def test_matches_brute_force_on_pairs(self):
        rng = np.random.default_rng(8)
        scores, snapshot = random_instance(rng, 9)
        pairs = [(u, v) for u in range(9) for v in range(u + 1, 9)]
        ranked = sorted(pairs, key=lambda p: (-scores[p[0], p[1]], p))
        edge_set = snapshot.edge_set()
        for k in (1, 3, 7):
            expected = sum(1 for p in ranked[:k] if p in edge_set) / k
            got = global_precision_at_k(scores, snapshot, ks=(k,))[k]
            assert got == pytest.approx(expected)


class TestEvaluateMethod:
    def _constant_graph(self, num_steps=4):
        snapshot = Snapshot(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0),
                                (2, 3, 1.0)])
        return DynamicGraph([snapshot] * num_steps)

    def test_single_step_mean(self):
        g = self._constant_graph()
        rng = np.random.default_rng(1)
        scores = rng.random((5, 5))

        report = evaluate_method(lambda t: scores, g, (3, 4))
        assert len(report.steps) == 1
        assert report.mean_map == report.map_per_step[0]

    def test_constant_predictor_constant_graph(self):
        g = self._constant_graph()
        rng = np.random.default_rng(2)
        scores = rng.random((5, 5))
        report = evaluate_method(lambda t: scores, g, (1, 4))
        assert len(set(report.map_per_step)) == 1

    def test_new_links_only_mode(self):
        s0 = Snapshot(4, [(0, 1, 1.0)])
        s1 = Snapshot(4, [(0, 1, 1.0), (2, 3, 1.0)])
        g = DynamicGraph([s0, s1])
        restricted = new_links_snapshot(g.snapshots[1], g.snapshots[0])
        assert restricted.edge_set() == {(2, 3)}
        scores = np.zeros((4, 4))
        scores[2, 3] = scores[3, 2] = 1.0
        report = evaluate_method(lambda t: scores, g, (1, 2),
                                 new_links_only=True)
        assert report.map_per_step[0] == 1.0
        assert report.excluded_per_step[0] == 2

    def test_bad_range(self):
        g = self._constant_graph()
        with pytest.raises(ValueError):
            evaluate_method(lambda t: np.zeros((5, 5)), g, (0, 4))

    def test_deterministic_reports(self):
        g = self._constant_graph()
        rng = np.random.default_rng(3)
        scores = rng.random((5, 5))
        a = evaluate_method(lambda t: scores, g, (1, 4))
        b = evaluate_method(lambda t: scores, g, (1, 4))
        assert a.map_per_step == b.map_per_step
        assert a.p_at_k == b.p_at_k


class TestReportSerialization:
    def _report(self):
        g = DynamicGraph([Snapshot(4, [(0, 1, 1.0), (2, 3, 1.0)])] * 3)
        scores = np.random.default_rng(4).random((4, 4))
        return evaluate_method(lambda t: scores, g, (1, 3), ks=(1, 2),
                               metadata={"method": "test", "embed_dim": 2})

    def test_csv_rows_are_step_times_k(self, tmp_path):
        report = self._report()
        path = tmp_path / "report.csv"
        report.write_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "target_t,map,k,p_at_k"
        assert len(lines) == 1 + len(report.steps) * 2

    def test_json_round_trip(self, tmp_path):
        import json

        report = self._report()
        path = tmp_path / "report.json"
        report.write_json(path)
        data = json.loads(path.read_text())
        assert data["mean_map"] == pytest.approx(report.mean_map)
        assert data["metadata"]["method"] == "test"
        assert [int(k) for k in data["p_at_k"][0]] == [1, 2]

import numpy as np
import pytest

from dynembed.sbm import SbmConfig, generate_dynamic
from dynembed.svd import (
    compress_factors,
    edges_to_factors,
    frobenius_error,
    inc_svd_update,
    jacobi_svd,
    optimal_svd,
    rerun_svd_step,
    snapshot_delta,
    svd_scores,
)


def random_symmetric(rng, n, density=0.2):
    m = (rng.random((n, n)) < density).astype(float)
    m = np.triu(m, 1)
    return m + m.T


def orthonormality_defect(m):
    return np.max(np.abs(m.T @ m - np.eye(m.shape[1])))


def small_sbm_sequence(seed=0, steps=8):
    cfg = SbmConfig(block_sizes=(60, 60), p_in=0.25, p_cross=0.02, steps=steps,
                    migrate_lo=3, migrate_hi=6, cross_edges_per_migrant=6,
                    scenario="diminish", seed=seed)
    g = generate_dynamic(cfg).graph
    return [g.adjacency(t) for t in range(g.num_steps)]


class TestJacobiSvd:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_lapack_singular_values(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((12, 9))
        _, s_j, _ = jacobi_svd(a)
        s_l = np.linalg.svd(a, compute_uv=False)
        assert np.allclose(np.sort(s_j)[::-1], s_l, atol=1e-9)

    def test_reconstructs_matrix(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((8, 8))
        u, s, vt = jacobi_svd(a)
        assert np.allclose(u @ np.diag(s) @ vt, a, atol=1e-9)
        assert orthonormality_defect(u) < 1e-9
        assert orthonormality_defect(vt.T) < 1e-9

    def test_wide_matrix(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((5, 11))
        u, s, vt = jacobi_svd(a)
        assert np.allclose(u @ np.diag(s) @ vt, a, atol=1e-9)


class TestOptimalSvd:
    def test_rank_one_exact(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((10, 1))
        v = rng.standard_normal((10, 1))
        a = u @ v.T
        state = optimal_svd(a, 1)
        assert frobenius_error(state, a) < 1e-10
        assert state.error_at_last_rerun < 1e-10

    def test_identity_matrix(self):
        state = optimal_svd(np.eye(4), 4)
        assert np.allclose(state.S, np.ones(4))
        assert frobenius_error(state, np.eye(4)) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_error_equals_discarded_tail_from_jacobi_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((20, 20))
        d = 5
        state = optimal_svd(a, d)
        _, s_full, _ = jacobi_svd(a)
        tail = np.sqrt(np.sum(np.sort(s_full)[::-1][d:] ** 2))
        assert abs(frobenius_error(state, a) - tail) < 1e-8

    def test_rejects_oversized_rank(self):
        with pytest.raises(ValueError, match="rank"):
            optimal_svd(np.eye(3), 4)

    def test_orthonormal_and_sorted(self):
        rng = np.random.default_rng(3)
        state = optimal_svd(random_symmetric(rng, 30), 6)
        assert orthonormality_defect(state.U) < 1e-8
        assert orthonormality_defect(state.V) < 1e-8
        assert np.all(np.diff(state.S) <= 1e-12)


class TestEdgeDeltaFactors:
    def test_exact_factorization_of_sparse_symmetric_delta(self):
        rng = np.random.default_rng(4)
        n = 25
        a = random_symmetric(rng, n)
        b = a.copy()
        # flip edges incident to a few hub nodes
        for hub in (3, 11, 19):
            for v in rng.choice(n, size=6, replace=False):
                if hub != v:
                    b[hub, v] = b[v, hub] = 1.0 - b[hub, v]
        changes = snapshot_delta(a, b)
        p, q = edges_to_factors(n, changes)
        assert np.allclose(p @ q.T, b - a, atol=1e-10)
        assert p.shape[1] <= 6

    def test_empty_changes(self):
        p, q = edges_to_factors(10, [])
        assert p.shape == (10, 0) and q.shape == (10, 0)

    def test_rank_cap_enforced(self):
        rng = np.random.default_rng(5)
        n = 300
        a = random_symmetric(rng, n, density=0.05)
        b = random_symmetric(rng, n, density=0.05)
        with pytest.raises(ValueError, match="cap|cheaply"):
            edges_to_factors(n, snapshot_delta(a, b), cap=8)

    def test_compress_factors_lossless(self):
        rng = np.random.default_rng(6)
        base_p = rng.standard_normal((15, 3))
        base_q = rng.standard_normal((15, 3))
        # duplicate columns: redundant width 6, true rank 3
        p = np.concatenate([base_p, base_p], axis=1)
        q = np.concatenate([base_q, 0.5 * base_q], axis=1)
        cp, cq = compress_factors(p, q, cap=8)
        assert cp.shape[1] <= 6
        assert np.allclose(cp @ cq.T, p @ q.T, atol=1e-10)


class TestIncSvdUpdate:
    def test_empty_delta_unchanged(self):
        rng = np.random.default_rng(7)
        state = optimal_svd(random_symmetric(rng, 20), 4)
        updated = inc_svd_update(state, [])
        assert np.array_equal(updated.S, state.S)
        assert np.allclose(np.abs(updated.U), np.abs(state.U))
        assert np.allclose(np.abs(updated.V), np.abs(state.V))
        assert updated.steps_since_rerun == 1

    def test_low_rank_transition_matches_optimal(self):
        rng = np.random.default_rng(8)
        n, d = 20, 3
        u = rng.standard_normal((n, d))
        a = u @ u.T
        w = rng.standard_normal((n, d))
        b = w @ w.T          # another rank-d matrix
        state = optimal_svd(a, d)
        updated = inc_svd_update(state, (np.concatenate([u, w], axis=1),
                                         np.concatenate([-u, w], axis=1)))
        target = optimal_svd(b, d)
        assert np.allclose(updated.reconstruction(), target.reconstruction(),
                           atol=1e-8)

    def test_factor_validation(self):
        rng = np.random.default_rng(9)
        state = optimal_svd(random_symmetric(rng, 10), 3)
        with pytest.raises(ValueError, match="factor"):
            inc_svd_update(state, (np.zeros((10, 2)), np.zeros((10, 3))))
        with pytest.raises(ValueError, match="cap"):
            inc_svd_update(state, (np.zeros((10, 9)), np.zeros((10, 9))), cap=4)

    def test_single_edge_updates_track_optimal(self):
        rng = np.random.default_rng(10)
        n, d = 30, 5
        a = random_symmetric(rng, n, density=0.3)
        state = optimal_svd(a, d)
        current = a.copy()
        for _ in range(50):
            u, v = rng.choice(n, size=2, replace=False)
            u, v = int(u), int(v)
            new_w = 1.0 - current[u, v]
            changes = [(u, v, new_w - current[u, v]),
                       (v, u, new_w - current[v, u])]
            current[u, v] = current[v, u] = new_w
            state = inc_svd_update(state, changes)
            inc_err = frobenius_error(state, current)
            opt_err = optimal_svd(current, d).error_at_last_rerun
            assert inc_err >= opt_err - 1e-9
            assert inc_err <= 2.0 * opt_err + 1e-9
        assert orthonormality_defect(state.U) < 1e-3
        assert orthonormality_defect(state.V) < 1e-3
        assert np.all(np.diff(state.S) <= 1e-12)


class TestRerunSvd:
    def test_zero_tolerance_tracks_optimal(self):
        mats = small_sbm_sequence(seed=1)
        d = 16
        state = optimal_svd(mats[0], d)
        for m in mats[1:]:
            state = rerun_svd_step(state, m, d, tolerance=0.0)
            assert abs(frobenius_error(state, m)
                       - optimal_svd(m, d).error_at_last_rerun) < 1e-8

    def test_infinite_tolerance_never_recomputes(self):
        mats = small_sbm_sequence(seed=2)
        d = 16
        state_inf = optimal_svd(mats[0], d)
        state_inc = optimal_svd(mats[0], d)
        for m in mats[1:]:
            state_inf = rerun_svd_step(state_inf, m, d, tolerance=np.inf)
            state_inc = inc_svd_update(state_inc,
                                       snapshot_delta(state_inc.target, m))
        assert state_inf.steps_since_rerun == len(mats) - 1
        assert np.allclose(state_inf.reconstruction(),
                           state_inc.reconstruction(), atol=1e-12)

    def test_moderate_tolerance_reruns_less_than_zero_tolerance(self):
        mats = small_sbm_sequence(seed=3, steps=10)
        d = 16

        def count_reruns(tolerance):
            state = optimal_svd(mats[0], d)
            reruns = 0
            for m in mats[1:]:
                state = rerun_svd_step(state, m, d, tolerance=tolerance)
                if state.steps_since_rerun == 0:
                    reruns += 1
            return reruns

        strict = count_reruns(0.0)
        loose = count_reruns(0.1)
        assert 1 <= loose <= len(mats) - 1
        assert loose < strict

    def test_rejects_negative_tolerance(self):
        state = optimal_svd(np.eye(4), 2)
        with pytest.raises(ValueError, match="tolerance"):
            rerun_svd_step(state, np.eye(4), 2, tolerance=-0.5)


class TestSvdScores:
    def test_exact_rank_state_reproduces_matrix(self):
        rng = np.random.default_rng(11)
        u = rng.standard_normal((12, 2))
        a = u @ u.T
        state = optimal_svd(a, 4)
        scores = svd_scores(state)
        expected = a.copy()
        np.fill_diagonal(expected, 0.0)  # scores force a zero diagonal
        assert np.allclose(scores, expected, atol=1e-8)

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(12)
        state = optimal_svd(random_symmetric(rng, 15), 4)
        scores = svd_scores(state)
        assert np.array_equal(scores, scores.T)
        assert np.all(np.diag(scores) == 0)

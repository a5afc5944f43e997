"""Truncated-SVD link-prediction baselines.

Three ways to keep a rank-d factorization of the evolving adjacency:

* ``optimal_svd``     - recompute the best rank-d approximation from scratch.
* ``inc_svd_update``  - fold a low-rank edge delta into the existing factors
                        (additive subspace extension + small re-diagonalization).
* ``rerun_svd_step``  - incremental updates with a tolerance-triggered full
                        recomputation once the reconstruction error drifts.

Link scores are inner products of the source/target factors U*sqrt(S) and
V*sqrt(S).
"""

from dataclasses import dataclass, replace

import numpy as np

# Maximum number of columns allowed in a delta factor pair after lossless
# compression; larger deltas are rejected rather than silently truncated.
DELTA_RANK_CAP = 64


@dataclass
class SvdState:
    """Rank-d factorization U diag(S) V^T of the last fitted matrix.

    error_at_last_rerun is the Frobenius reconstruction error the state had
    when it was last computed from scratch; steps_since_rerun counts the
    incremental updates applied since then.  target is the matrix the state
    currently approximates (needed to turn the next snapshot into an edge
    delta); it is bookkeeping, not part of the embedding.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    error_at_last_rerun: float
    steps_since_rerun: int
    target: np.ndarray

    @property
    def rank(self):
        return self.S.shape[0]

    def reconstruction(self):
        return (self.U * self.S) @ self.V.T


def optimal_svd(matrix, d):
    """Best rank-d approximation via a full decomposition.

    The returned error is sqrt(sum of squared discarded singular values),
    which is exactly the Frobenius distance of the rank-d reconstruction.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if d > min(matrix.shape):
        raise ValueError(f"rank d={d} exceeds matrix dimension {min(matrix.shape)}")
    u, s, vt = np.linalg.svd(matrix)
    error = float(np.sqrt(np.sum(s[d:] ** 2)))
    return SvdState(
        U=np.ascontiguousarray(u[:, :d]),
        S=s[:d].copy(),
        V=np.ascontiguousarray(vt[:d].T),
        error_at_last_rerun=error,
        steps_since_rerun=0,
        target=matrix.copy(),
    )


def frobenius_error(state, matrix):
    return float(np.linalg.norm(np.asarray(matrix) - state.reconstruction()))


def _greedy_cover(n, changes):
    """Small node set touching every changed edge (greedy max-degree cover)."""
    degree = {}
    for u, v, _ in changes:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    remaining = {(u, v) for u, v, _ in changes}
    cover = []
    while remaining:
        best = max(degree, key=lambda node: (degree[node], -node))
        cover.append(best)
        done = [e for e in remaining if best in e[:2]]
        for u, v in ((e[0], e[1]) for e in done):
            degree[u] -= 1
            degree[v] -= 1
        remaining -= {(u, v) for u, v in ((e[0], e[1]) for e in done)}
        degree.pop(best, None)
    return sorted(cover)


def edges_to_factors(n, changes, cap=DELTA_RANK_CAP):
    """Turn a list of (u, v, delta_w) entry changes into P, Q with D = P Q^T.

    changes are directed entry updates (both (u,v) and (v,u) must be listed
    for a symmetric delta).  Every changed entry must have an endpoint in a
    small cover set M, giving exact factors of at most 2|M| columns; a thin
    orthogonalization then drops redundant directions.  Raises ValueError if
    the numerical rank still exceeds cap.
    """
    if not changes:
        return np.zeros((n, 0)), np.zeros((n, 0))
    cover = _greedy_cover(n, changes)
    index = {node: i for i, node in enumerate(cover)}
    m = len(cover)
    if 2 * m > max(4 * cap, 256):
        raise ValueError(
            f"delta touches too many nodes to factor cheaply "
            f"(cover size {m}); recompute from scratch instead"
        )
    rows = np.zeros((m, n))       # delta rows whose source is in the cover
    cols = np.zeros((m, n))       # remaining delta columns into the cover
    for u, v, dw in changes:
        if u in index:
            rows[index[u], v] += dw
        elif v in index:
            cols[index[v], u] += dw
        else:
            raise AssertionError("cover misses a changed edge")
    selector = np.zeros((n, m))
    selector[cover, np.arange(m)] = 1.0
    p = np.concatenate([selector, cols.T], axis=1)
    q = np.concatenate([rows.T, selector], axis=1)
    return compress_factors(p, q, cap=cap)


def compress_factors(p, q, cap=DELTA_RANK_CAP):
    """Losslessly reduce P Q^T to minimal-rank factors; enforce the cap."""
    if p.shape[1] != q.shape[1]:
        raise ValueError(f"factor column counts differ: {p.shape} vs {q.shape}")
    if p.shape[1] == 0:
        return p, q
    qp, rp = np.linalg.qr(p)
    qq, rq = np.linalg.qr(q)
    u, s, vt = np.linalg.svd(rp @ rq.T)
    keep = s > (s[0] * 1e-12 if s.size and s[0] > 0 else 0.0)
    rank = int(np.count_nonzero(keep))
    if rank > cap:
        raise ValueError(
            f"delta rank {rank} exceeds the factor cap {cap}; "
            f"recompute from scratch instead"
        )
    root = np.sqrt(s[:rank])
    return qp @ (u[:, :rank] * root), qq @ (vt[:rank].T * root)


def snapshot_delta(old, new, tol=1e-12):
    """Directed entry changes between two dense matrices, as (u, v, dw).

    Entries differing by at most tol are treated as unchanged, so float
    dust from earlier factor arithmetic does not masquerade as edits.
    """
    diff = np.asarray(new, dtype=np.float64) - np.asarray(old, dtype=np.float64)
    iu, ju = np.nonzero(np.abs(diff) > tol)
    return [(int(u), int(v), float(diff[u, v])) for u, v in zip(iu, ju)]


def inc_svd_update(state, delta, cap=DELTA_RANK_CAP):
    """Additive Brand-style update of the factorization by a low-rank delta.

    delta is either a (P, Q) factor pair with the perturbation P Q^T, or a
    list of (u, v, dw) entry changes that is converted internally.  The
    subspaces are extended with the orthogonal components of P and Q, the
    small core matrix is re-diagonalized, and the result is truncated back
    to the state's rank.
    """
    n = state.U.shape[0]
    changes = None
    if isinstance(delta, tuple):
        p, q = (np.asarray(f, dtype=np.float64) for f in delta)
        if p.shape[0] != n or q.shape[0] != n or p.shape[1] != q.shape[1]:
            raise ValueError(
                f"delta factors must be (n x r) pairs, got {p.shape} and {q.shape}"
            )
        if p.shape[1] > cap:
            raise ValueError(
                f"delta factor rank {p.shape[1]} exceeds the cap {cap}"
            )
    else:
        changes = list(delta)
        p, q = edges_to_factors(n, changes, cap=cap)
    if p.shape[1] == 0:
        return replace(state, steps_since_rerun=state.steps_since_rerun + 1,
                       target=state.target.copy())

    d = state.rank
    # keep the tracked target exact for edge deltas; factor deltas carry
    # whatever float error their product has
    if changes is None:
        new_target = state.target + p @ q.T
    else:
        new_target = state.target.copy()
        for u, v, dw in changes:
            new_target[u, v] += dw

    up = state.U.T @ p
    p_res = p - state.U @ up
    jp, rp = np.linalg.qr(p_res)
    vq = state.V.T @ q
    q_res = q - state.V @ vq
    jq, rq = np.linalg.qr(q_res)

    core = np.zeros((d + rp.shape[0], d + rq.shape[0]))
    core[:d, :d] = np.diag(state.S)
    core += np.concatenate([up, rp]) @ np.concatenate([vq, rq]).T
    cu, cs, cvt = np.linalg.svd(core)
    new_u = np.concatenate([state.U, jp], axis=1) @ cu[:, :d]
    new_v = np.concatenate([state.V, jq], axis=1) @ cvt[:d].T
    return SvdState(
        U=new_u,
        S=cs[:d].copy(),
        V=new_v,
        error_at_last_rerun=state.error_at_last_rerun,
        steps_since_rerun=state.steps_since_rerun + 1,
        target=new_target,
    )


def rerun_svd_step(state, matrix, d, tolerance):
    """Incremental update toward matrix, with threshold-triggered recompute.

    After folding in the delta, the state is rebuilt from scratch whenever
    its Frobenius reconstruction error exceeds (1 + tolerance) times the
    error it had at the last from-scratch computation.  tolerance = 0 makes
    any error growth trigger a recompute; tolerance = inf never recomputes.
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    matrix = np.asarray(matrix, dtype=np.float64)
    updated = inc_svd_update(state, snapshot_delta(state.target, matrix))
    error = frobenius_error(updated, matrix)
    if error > (1.0 + tolerance) * updated.error_at_last_rerun:
        return optimal_svd(matrix, d)
    return updated


def svd_scores(state, directed=False):
    """Link scores (U sqrt(S)) (V sqrt(S))^T, symmetrized, zero diagonal."""
    scores = state.reconstruction()
    if not directed:
        scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    return scores


def jacobi_svd(matrix, tol=1e-12, max_sweeps=60):
    """Full SVD of a small dense matrix by cyclic one-sided Jacobi rotations.

    Independent of the LAPACK path; used as a from-first-principles oracle
    for the optimality of truncated decompositions.  Returns (U, s, Vt)
    with singular values sorted non-increasing.
    """
    a = np.array(matrix, dtype=np.float64)
    rows, cols = a.shape
    if rows < cols:
        u, s, vt = jacobi_svd(a.T, tol=tol, max_sweeps=max_sweeps)
        return vt.T, s, u.T
    v = np.eye(cols)
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                ai, aj = a[:, i], a[:, j]
                apq = ai @ aj
                app = ai @ ai
                aqq = aj @ aj
                if abs(apq) <= tol * np.sqrt(app * aqq) or apq == 0.0:
                    continue
                off = max(off, abs(apq) / max(np.sqrt(app * aqq), 1e-300))
                theta = 0.5 * np.arctan2(2.0 * apq, app - aqq)
                c, s_ = np.cos(theta), np.sin(theta)
                a[:, i], a[:, j] = c * ai + s_ * aj, -s_ * ai + c * aj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i], v[:, j] = c * vi + s_ * vj, -s_ * vi + c * vj
        if off < tol:
            break
    norms = np.linalg.norm(a, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    a = a[:, order]
    v = v[:, order]
    u = np.zeros((rows, cols))
    for k in range(cols):
        if norms[k] > 1e-300:
            u[:, k] = a[:, k] / norms[k]
        else:
            u[:, k] = 0.0
    return u, norms, v.T

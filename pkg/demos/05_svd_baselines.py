"""The three truncated-SVD baselines on one evolving graph.

Run:  python demos/05_svd_baselines.py
"""

from dynembed import SbmConfig, generate_dynamic
from dynembed.metrics import evaluate_method
from dynembed.svd import (
    frobenius_error,
    inc_svd_update,
    optimal_svd,
    rerun_svd_step,
    snapshot_delta,
    svd_scores,
)

cfg = SbmConfig(block_sizes=(100, 100), p_in=0.1, p_cross=0.01, steps=10,
                migrate_lo=4, migrate_hi=8, cross_edges_per_migrant=12,
                scenario="diminish", seed=0)
graph = generate_dynamic(cfg).graph
rank = 16

# Reconstruction error over time: incremental drifts above optimal, and
# the tolerance-triggered rerun pulls it back down.
state_inc = optimal_svd(graph.adjacency(0), rank)
state_rerun = optimal_svd(graph.adjacency(0), rank)
print(" t   optimal   incremental   rerun(theta=0.1)   reruns")
reruns = 0
for t in range(1, graph.num_steps):
    matrix = graph.adjacency(t)
    state_inc = inc_svd_update(state_inc,
                               snapshot_delta(state_inc.target, matrix))
    state_rerun = rerun_svd_step(state_rerun, matrix, rank, tolerance=0.1)
    if state_rerun.steps_since_rerun == 0:
        reruns += 1
    optimal_err = optimal_svd(matrix, rank).error_at_last_rerun
    print(f"{t:2d}   {optimal_err:7.3f}   {frobenius_error(state_inc, matrix):11.3f}"
          f"   {frobenius_error(state_rerun, matrix):16.3f}   {reruns:6d}")

# Link prediction: score step t from the factorization of step t-1.
boundary = graph.num_steps // 2


def make_predictor(kind):
    box = {"state": optimal_svd(graph.adjacency(0), rank), "cursor": 0}

    def predictor(t):
        while box["cursor"] < t - 1:
            box["cursor"] += 1
            matrix = graph.adjacency(box["cursor"])
            if kind == "optimal":
                box["state"] = optimal_svd(matrix, rank)
            elif kind == "incremental":
                box["state"] = inc_svd_update(
                    box["state"], snapshot_delta(box["state"].target, matrix))
            else:
                box["state"] = rerun_svd_step(box["state"], matrix, rank, 0.1)
        return svd_scores(box["state"])

    return predictor


print("\nmean MAP over the held-out half:")
for kind in ("optimal", "incremental", "rerun"):
    report = evaluate_method(make_predictor(kind), graph,
                             (boundary, graph.num_steps))
    print(f"  {kind:11s} {report.mean_map:.3f}")

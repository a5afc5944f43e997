"""Link-prediction scoring: per-node precision@k, average precision, MAP.

Rankings are per node over all other nodes, ordered by descending score
with ties broken by ascending node id so two runs always produce identical
reports.  Nodes without any ground-truth edge at the target step have no
defined average precision and are excluded from the MAP denominator (the
report records how many).
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_KS = (2, 10, 100, 200, 300, 500, 800, 1000)


@dataclass
class NodeRanking:
    """Candidates of one node, sorted by (-score, id); excludes the node."""

    node: int
    candidates: np.ndarray
    scores: np.ndarray


def build_ranking(score_row, node):
    score_row = np.asarray(score_row, dtype=np.float64)
    n = score_row.shape[0]
    candidates = np.concatenate([np.arange(node), np.arange(node + 1, n)])
    scores = score_row[candidates]
    # stable sort on descending score keeps ascending-id tie order
    order = np.argsort(-scores, kind="stable")
    return NodeRanking(node, candidates[order], scores[order])


def precision_at_k(ranking, gt_neighbors, k):
    """|top-k intersect ground truth| / k.

    When fewer than k candidates exist the divisor stays k, so the value
    reflects the fraction of k requested predictions that were correct.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = ranking.candidates[:k]
    hits = sum(1 for v in top if int(v) in gt_neighbors)
    return hits / k


def average_precision(ranking, gt_neighbors):
    """Mean of precision@k over exactly the ranks holding a true edge."""
    if not gt_neighbors:
        raise ValueError(f"node {ranking.node} has no ground-truth edges; AP undefined")
    hits = 0
    total = 0.0
    for rank, v in enumerate(ranking.candidates, start=1):
        if int(v) in gt_neighbors:
            hits += 1
            total += hits / rank
    return total / hits if hits else 0.0


@dataclass
class MapResult:
    map: float
    per_node_ap: dict
    excluded: int


def _truth_matrix(gt_snapshot):
    n = gt_snapshot.n
    truth = np.zeros((n, n), dtype=bool)
    for u, v, _ in gt_snapshot.edges:
        truth[u, v] = True
        if not gt_snapshot.directed:
            truth[v, u] = True
    return truth


def map_score(scores, gt_snapshot, nodes=None):
    """MAP of a score matrix against one ground-truth snapshot.

    Averages per-node AP over the given nodes (default: all) that have at
    least one ground-truth edge; raises if none does.  The ranking rule is
    identical to build_ranking / average_precision, just batched.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores contain non-finite values")
    n = gt_snapshot.n
    if scores.shape != (n, n):
        raise ValueError(f"scores shape {scores.shape} does not match n={n}")
    truth = _truth_matrix(gt_snapshot)
    if nodes is None:
        nodes = range(n)
    per_node = {}
    excluded = 0
    for u in nodes:
        u = int(u)
        candidates = np.concatenate([np.arange(u), np.arange(u + 1, n)])
        truth_row = truth[u, candidates]
        if not truth_row.any():
            excluded += 1
            continue
        order = np.argsort(-scores[u, candidates], kind="stable")
        ranks = np.nonzero(truth_row[order])[0] + 1
        per_node[u] = float(np.mean(np.arange(1, ranks.size + 1) / ranks))
    if not per_node:
        raise ValueError("no evaluated node has ground-truth edges")
    return MapResult(
        map=sum(per_node.values()) / len(per_node),
        per_node_ap=per_node,
        excluded=excluded,
    )


def global_precision_at_k(scores, gt_snapshot, ks):
    """Precision of the top-k node pairs over the whole score matrix.

    Pairs are unordered for undirected graphs (u < v) and ordered otherwise,
    the diagonal is excluded, and ties break on ascending pair index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = gt_snapshot.n
    if gt_snapshot.directed:
        iu, ju = np.where(~np.eye(n, dtype=bool))
    else:
        iu, ju = np.triu_indices(n, k=1)
    flat = scores[iu, ju]
    order = np.argsort(-flat, kind="stable")
    truth = _truth_matrix(gt_snapshot)
    ranked_truth = truth[iu[order], ju[order]]
    hits = np.cumsum(ranked_truth)
    out = {}
    for k in ks:
        k_eff = min(k, ranked_truth.size)
        out[int(k)] = float(hits[k_eff - 1] / k) if k_eff > 0 else 0.0
    return out


@dataclass
class EvalReport:
    """Per-target-step link-prediction quality plus run metadata."""

    steps: tuple
    map_per_step: tuple
    p_at_k: tuple             # one {k: value} dict per step
    excluded_per_step: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def mean_map(self):
        return sum(self.map_per_step) / len(self.map_per_step)

    def to_rows(self):
        """CSV rows: one per (target step, k)."""
        rows = []
        for step, m, pk in zip(self.steps, self.map_per_step, self.p_at_k):
            for k in sorted(pk):
                rows.append({"target_t": step, "map": m, "k": k, "p_at_k": pk[k]})
        return rows

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            writer = csv.DictWriter(fh, fieldnames=["target_t", "map", "k", "p_at_k"])
            writer.writeheader()
            for row in self.to_rows():
                writer.writerow({
                    "target_t": row["target_t"],
                    "map": f"{row['map']:.17g}",
                    "k": row["k"],
                    "p_at_k": f"{row['p_at_k']:.17g}",
                })

    def summary(self):
        return {
            "metadata": self.metadata,
            "mean_map": self.mean_map,
            "steps": list(self.steps),
            "map_per_step": list(self.map_per_step),
            "excluded_per_step": list(self.excluded_per_step),
            "p_at_k": [{str(k): v for k, v in pk.items()} for pk in self.p_at_k],
        }

    def write_json(self, path):
        with open(path, "w", newline="\n") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def new_links_snapshot(gt_snapshot, previous_snapshot):
    """Ground truth restricted to edges absent from the previous snapshot."""
    from .graphs import Snapshot

    before = previous_snapshot.edge_set()
    edges = [e for e in gt_snapshot.edges if (e[0], e[1]) not in before]
    return Snapshot(gt_snapshot.n, edges, directed=gt_snapshot.directed)


def evaluate_method(predictor, graph, eval_range, nodes=None, ks=DEFAULT_KS,
                    new_links_only=False, metadata=None):
    """Score a predictor over each target step in eval_range.

    predictor(t) must return an n x n score matrix for target step t using
    only information from steps strictly before t.  Returns an EvalReport
    with per-step MAP and global precision@k curves.
    """
    t_lo, t_hi = eval_range
    if not 0 < t_lo <= t_hi <= graph.num_steps:
        raise ValueError(
            f"eval range [{t_lo},{t_hi}) outside (0,{graph.num_steps}]"
        )
    steps, maps, pks, excluded = [], [], [], []
    for t in range(t_lo, t_hi):
        scores = predictor(t)
        gt = graph.snapshots[t]
        if new_links_only:
            gt = new_links_snapshot(gt, graph.snapshots[t - 1])
        result = map_score(scores, gt, nodes=nodes)
        steps.append(t)
        maps.append(result.map)
        pks.append(global_precision_at_k(scores, gt, ks))
        excluded.append(result.excluded)
    return EvalReport(
        steps=tuple(steps),
        map_per_step=tuple(maps),
        p_at_k=tuple(pks),
        excluded_per_step=tuple(excluded),
        metadata=dict(metadata or {}),
    )

"""Synthetic dynamic stochastic-block-model sequences.

Two evolution scenarios over a two-community SBM:

* ``shift``    - a fixed-size cohort migrates from community 1 to community 0
                 at every step.
* ``diminish`` - community 1 is continuously drained into community 0, with a
                 per-step cohort size drawn uniformly from a range.

Migration is a two-phase process spread over consecutive snapshots: the
cohort picked at step t first shows up with extra edges into its destination
community (still carrying its old label), and only in the transition to step
t+1 does its label flip and its incident edges get resampled under the new
membership.  The signal that a node is about to move is therefore visible
exactly one step before the label change, which is what makes the next-step
prediction task learnable.
"""

from dataclasses import dataclass

import numpy as np

from .graphs import DynamicGraph, Snapshot

SCENARIOS = ("shift", "diminish")

# Community 1 is the source (drained) community, community 0 the default
# destination; matches the two-block setup used throughout.
SOURCE_COMMUNITY = 1


@dataclass(frozen=True)
class SbmConfig:
    """Generator settings for a dynamic SBM sequence."""

    block_sizes: tuple = (500, 500)
    p_in: float = 0.1
    p_cross: float = 0.01
    steps: int = 10
    migrate_lo: int = 10
    migrate_hi: int = 20
    cross_edges_per_migrant: int = 30
    scenario: str = "diminish"
    seed: int = 0
    # Keep the pre-migration booster edges through the flip instead of
    # resampling them away with the rest of the cohort's edges.
    keep_boost_edges: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if len(self.block_sizes) < 2 or any(b < 1 for b in self.block_sizes):
            raise ValueError(f"need >= 2 positive block sizes, got {self.block_sizes}")
        if not 0.0 <= self.p_cross <= self.p_in <= 1.0:
            raise ValueError(
                f"probabilities must satisfy 0 <= p_cross <= p_in <= 1, "
                f"got p_in={self.p_in}, p_cross={self.p_cross}"
            )
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0 <= self.migrate_lo <= self.migrate_hi:
            raise ValueError(
                f"need 0 <= migrate_lo <= migrate_hi, got "
                f"[{self.migrate_lo},{self.migrate_hi}]"
            )
        if self.migrate_hi > min(self.block_sizes):
            raise ValueError(
                f"migrate_hi={self.migrate_hi} exceeds smallest block "
                f"{min(self.block_sizes)}"
            )
        if self.cross_edges_per_migrant < 0:
            raise ValueError("cross_edges_per_migrant must be >= 0")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")

    @property
    def n(self):
        return sum(self.block_sizes)


@dataclass
class PendingCohort:
    """Nodes selected for migration whose label flip is one step away."""

    nodes: tuple
    dests: tuple
    boost_edges: tuple = ()


@dataclass
class LabeledDynamicGraph:
    """A dynamic graph plus per-step community labels and migrant sets.

    labels[t] is the length-n community assignment at step t.  migrants[t]
    (one entry per transition, length T-1) lists the nodes whose label
    changes between steps t and t+1; their elevated cross-community degree
    is already visible in snapshot t for t >= 1.
    """

    graph: DynamicGraph
    labels: np.ndarray
    migrants: tuple
    truncated: bool = False

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.shape != (self.graph.num_steps, self.graph.n):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match "
                f"(T={self.graph.num_steps}, n={self.graph.n})"
            )


def _edges_from_sets(n, neighbor_sets):
    edges = []
    for u in range(n):
        for v in neighbor_sets[u]:
            if u < v:
                edges.append((u, v, 1.0))
    return edges


def generate_static(block_sizes, p_in, p_cross, seed_or_rng):
    """One SBM draw: each unordered pair is an independent Bernoulli edge.

    Same-block pairs connect with probability p_in, cross-block pairs with
    p_cross.  Returns (Snapshot, labels array).
    """
    if not 0.0 <= p_cross <= p_in <= 1.0:
        raise ValueError("need 0 <= p_cross <= p_in <= 1")
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    labels = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = labels.size
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_cross)
    draws = rng.random((n, n)) < prob
    iu, ju = np.where(np.triu(draws, k=1))
    edges = [(int(u), int(v), 1.0) for u, v in zip(iu, ju)]
    return Snapshot(n, edges), labels


def _cohort_size(cfg, rng):
    """Per-step migration count: fixed for shift, uniform in range otherwise."""
    if cfg.migrate_lo == cfg.migrate_hi:
        return cfg.migrate_lo
    return int(rng.integers(cfg.migrate_lo, cfg.migrate_hi + 1))


def _select_cohort(rng, labels, size, community):
    members = np.where(labels == community)[0]
    if members.size < size:
        raise ValueError(
            f"community {community} has {members.size} members, cannot select {size}"
        )
    return tuple(int(v) for v in np.sort(rng.choice(members, size=size, replace=False)))


def _choose_dests(rng, cfg, labels, nodes):
    """Destination community per migrating node."""
    n_blocks = len(cfg.block_sizes)
    if n_blocks == 2:
        return tuple(0 for _ in nodes)
    if cfg.scenario == "diminish":
        return tuple(0 for _ in nodes)
    # shift with >2 blocks: uniform choice among the other communities
    dests = []
    for v in nodes:
        options = [c for c in range(n_blocks) if c != labels[v]]
        dests.append(int(rng.choice(options)))
    return tuple(dests)


def evolve_step(snapshot, labels, cfg, rng, pending=None, select_next=True):
    """Advance the graph one step of the two-phase migration process.

    Phase A (completes the previous step's selection): flip the pending
    cohort's labels and resample all of its incident edges under the new
    membership (p_in to the new community, p_cross to the others).  When no
    cohort is pending (the first transition) a fresh one is flipped with no
    forewarning, so every transition changes exactly the configured number
    of labels.

    Phase B (starts the next migration, skipped when select_next is False):
    select a new cohort from the source community and add
    cross_edges_per_migrant edges from each member to uniformly random
    nodes of its destination community.

    Returns (snapshot', labels', flipped, pending') where flipped is the
    tuple of nodes whose labels changed in this transition and pending' is
    the newly selected cohort (it flips next step).
    """
    labels = np.array(labels, dtype=int)
    n = snapshot.n

    if pending is None:
        m = _cohort_size(cfg, rng)
        nodes = _select_cohort(rng, labels, m, SOURCE_COMMUNITY)
        pending = PendingCohort(nodes, _choose_dests(rng, cfg, labels, nodes))

    nbrs = snapshot.neighbor_sets()

    # Phase A: flip and resample the pending cohort.
    flipped = pending.nodes
    for v, dest in zip(flipped, pending.dests):
        labels[v] = dest
    flipped_set = set(flipped)
    for v in flipped:
        for u in list(nbrs[v]):
            nbrs[u].discard(v)
        nbrs[v].clear()
    for idx, v in enumerate(flipped):
        draws = rng.random(n)
        prob = np.where(labels == labels[v], cfg.p_in, cfg.p_cross)
        hit = np.where(draws < prob)[0]
        for u in hit:
            u = int(u)
            if u == v:
                continue
            # pairs inside the cohort are sampled once, by the lower-index member
            if u in flipped_set and flipped.index(u) < idx:
                continue
            nbrs[v].add(u)
            nbrs[u].add(v)
    if cfg.keep_boost_edges:
        for u, v in pending.boost_edges:
            nbrs[u].add(v)
            nbrs[v].add(u)

    # Phase B: select the next cohort and add its booster edges.
    if not select_next:
        return (Snapshot(n, _edges_from_sets(n, nbrs)), labels, flipped,
                PendingCohort((), ()))
    source_left = int(np.sum(labels == SOURCE_COMMUNITY))
    if source_left < cfg.migrate_hi:
        raise ValueError(
            f"source community exhausted: {source_left} nodes left, "
            f"need at least {cfg.migrate_hi}"
        )
    next_nodes = _select_cohort(rng, labels, _cohort_size(cfg, rng), SOURCE_COMMUNITY)
    next_dests = _choose_dests(rng, cfg, labels, next_nodes)
    boost = []
    for v, dest in zip(next_nodes, next_dests):
        candidates = np.where(labels == dest)[0]
        candidates = np.array([u for u in candidates if u != v and u not in nbrs[v]])
        count = min(cfg.cross_edges_per_migrant, candidates.size)
        if count > 0:
            targets = rng.choice(candidates, size=count, replace=False)
            for u in targets:
                u = int(u)
                nbrs[v].add(u)
                nbrs[u].add(v)
                boost.append((v, u))

    new_snapshot = Snapshot(n, _edges_from_sets(n, nbrs))
    return new_snapshot, labels, flipped, PendingCohort(next_nodes, next_dests, tuple(boost))


def generate_dynamic(cfg):
    """Full dynamic SBM sequence under cfg; deterministic given cfg.seed.

    If the source community runs out of nodes before cfg.steps snapshots
    are produced, generation stops early and the result carries
    truncated=True.
    """
    rng = np.random.default_rng(cfg.seed)
    snapshot, labels = generate_static(cfg.block_sizes, cfg.p_in, cfg.p_cross, rng)
    snapshots = [snapshot]
    labels_per_step = [labels.copy()]
    migrants = []
    truncated = False
    pending = None
    for step in range(1, cfg.steps):
        try:
            snapshot, labels, flipped, pending = evolve_step(
                snapshots[-1], labels_per_step[-1], cfg, rng, pending=pending,
                select_next=step < cfg.steps - 1,
            )
        except ValueError as exc:
            if "exhausted" in str(exc) or "cannot select" in str(exc):
                truncated = True
                break
            raise
        snapshots.append(snapshot)
        labels_per_step.append(labels)
        migrants.append(flipped)
    return LabeledDynamicGraph(
        DynamicGraph(snapshots),
        np.stack(labels_per_step),
        tuple(migrants),
        truncated=truncated,
    )


def save_labels(labeled, path):
    """Labels sidecar: per step, one line of n space-separated community ids."""
    with open(path, "w", newline="\n") as fh:
        for row in labeled.labels:
            fh.write(" ".join(str(int(c)) for c in row) + "\n")


def load_labels(path):
    """Read a labels sidecar into a (T, n) integer array."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"empty labels file {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent label row lengths {sorted(widths)} in {path}")
    return np.array(rows, dtype=int)


def migrants_from_labels(labels):
    """Per-transition migrant sets recovered from consecutive label rows."""
    labels = np.asarray(labels)
    out = []
    for t in range(labels.shape[0] - 1):
        out.append(tuple(int(v) for v in np.where(labels[t] != labels[t + 1])[0]))
    return tuple(out)

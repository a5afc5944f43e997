"""Data model for evolving graphs.

A dynamic graph is a fixed vertex set 0..n-1 with an ordered sequence of
edge snapshots.  Snapshots are stored sparsely (edge lists) and materialized
to dense adjacency matrices on demand; dense matrices are what the models
and baselines consume.
"""

import numpy as np


class SnapshotFormatError(ValueError):
    """Raised when a snapshot file does not follow the documented format."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Snapshot:
    """One time step of an evolving graph: an edge list over n nodes.

    Edges are (u, v, w) with w >= 0.  Undirected edges are stored once,
    canonicalized as u < v; materialization emits both directions.
    Self loops and duplicate pairs are rejected.
    """

    __slots__ = ("n", "edges", "directed")

    def __init__(self, n, edges, directed=False):
        if n < 0:
            raise ValueError(f"node count must be >= 0, got {n}")
        canonical = []
        seen = set()
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) outside node range [0,{n})")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if w < 0:
                raise ValueError(f"negative weight {w} on edge ({u},{v})")
            if not directed and u > v:
                u, v = v, u
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            canonical.append((u, v, w))
        canonical.sort()
        self.n = n
        self.edges = tuple(canonical)
        self.directed = directed

    @property
    def num_edges(self):
        return len(self.edges)

    def edge_set(self):
        """Set of (u, v) pairs as stored (canonical order if undirected)."""
        return {(u, v) for u, v, _ in self.edges}

    def neighbor_sets(self):
        """Per-node sets of adjacent node ids (both directions if undirected)."""
        nbrs = [set() for _ in range(self.n)]
        for u, v, _ in self.edges:
            nbrs[u].add(v)
            if not self.directed:
                nbrs[v].add(u)
        return nbrs

    def __eq__(self, other):
        return (
            isinstance(other, Snapshot)
            and self.n == other.n
            and self.directed == other.directed
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.directed, self.edges))

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Snapshot(n={self.n}, edges={len(self.edges)}, {kind})"


def materialize_adjacency(snapshot):
    """Dense n x n adjacency with entries normalized to [0, 1].

    Weights are divided by the maximum weight in the snapshot, so binary
    graphs come out as raw 0/1 and weighted graphs land in [0, 1] where the
    sigmoid decoder output can match them.
    """
    n = snapshot.n
    mat = np.zeros((n, n))
    if not snapshot.edges:
        return mat
    w_max = max(w for _, _, w in snapshot.edges)
    scale = 1.0 / w_max if w_max > 0 else 0.0
    for u, v, w in snapshot.edges:
        mat[u, v] = w * scale
        if not snapshot.directed:
            mat[v, u] = w * scale
    return mat


class DynamicGraph:
    """A fixed node set with T >= 1 snapshots in temporal order.

    Immutable after construction and safe to share read-only.  An optional
    access listener (used by the benchmark harness to audit temporal
    leakage) is notified with the time index whenever an adjacency matrix
    is materialized.
    """

    def __init__(self, snapshots):
        snapshots = tuple(snapshots)
        if not snapshots:
            raise ValueError("a dynamic graph needs at least one snapshot")
        n = snapshots[0].n
        directed = snapshots[0].directed
        for t, snap in enumerate(snapshots):
            if snap.n != n:
                raise ValueError(
                    f"snapshot {t} has n={snap.n}, expected {n} (node set is fixed)"
                )
            if snap.directed != directed:
                raise ValueError(f"snapshot {t} changes directedness")
        self.snapshots = snapshots
        self.n = n
        self.directed = directed
        self._listener = None

    @property
    def num_steps(self):
        return len(self.snapshots)

    def set_access_listener(self, fn):
        """Install fn(t) to be called on every adjacency materialization."""
        self._listener = fn

    def adjacency(self, t):
        """Dense normalized adjacency of snapshot t."""
        if not 0 <= t < len(self.snapshots):
            raise IndexError(f"time index {t} outside [0,{len(self.snapshots)})")
        if self._listener is not None:
            self._listener(t)
        return materialize_adjacency(self.snapshots[t])

    def __eq__(self, other):
        return isinstance(other, DynamicGraph) and self.snapshots == other.snapshots

    def __repr__(self):
        return f"DynamicGraph(n={self.n}, T={self.num_steps})"


def neighborhood_vector(graph, t, u):
    """Row u of the adjacency at time t (the node's connectivity profile)."""
    if not 0 <= u < graph.n:
        raise IndexError(f"node {u} outside [0,{graph.n})")
    return graph.adjacency(t)[u]


class Window:
    """A training/inference window: lb stacked input matrices and one target.

    inputs[i] is the adjacency at time start+i; target is the adjacency at
    time start+lb.
    """

    __slots__ = ("inputs", "target", "start")

    def __init__(self, inputs, target, start):
        self.inputs = inputs
        self.target = target
        self.start = start

    @property
    def lookback(self):
        return self.inputs.shape[0]

    def __repr__(self):
        return f"Window(start={self.start}, lookback={self.lookback})"


def make_windows(graph, lookback, t_lo, t_hi):
    """All full windows whose target index lies in [t_lo, t_hi).

    One window per target tau in [max(t_lo, lookback), t_hi), with inputs
    A_{tau-lookback} .. A_{tau-1}.  Partial windows at the sequence start
    are dropped, never zero-padded.  Returns an empty list when the range
    is too short; callers decide whether that is an error.
    """
    if lookback < 1:
        raise ValueError(f"lookback must be >= 1, got {lookback}")
    if t_lo < 0 or t_hi > graph.num_steps:
        raise ValueError(
            f"window range [{t_lo},{t_hi}) outside [0,{graph.num_steps}]"
        )
    windows = []
    for tau in range(max(t_lo, lookback), t_hi):
        inputs = np.stack([graph.adjacency(t) for t in range(tau - lookback, tau)])
        windows.append(Window(inputs, graph.adjacency(tau), tau - lookback))
    return windows


def sample_nodes(graph, k, seed):
    """Induced subgraph on k uniformly sampled nodes, same nodes every step.

    Sampling is without replacement and deterministic given the seed.  Kept
    node ids are relabeled in ascending order, so k == n returns a graph
    identical to the input.  Returns (subgraph, mapping old id -> new id).
    """
    n = graph.n
    if not 1 <= k <= n:
        raise ValueError(f"sample size {k} outside [1,{n}]")
    rng = np.random.default_rng(seed)
    kept = np.sort(rng.choice(n, size=k, replace=False))
    remap = {int(old): new for new, old in enumerate(kept)}
    snapshots = []
    for snap in graph.snapshots:
        edges = [
            (remap[u], remap[v], w)
            for u, v, w in snap.edges
            if u in remap and v in remap
        ]
        snapshots.append(Snapshot(k, edges, directed=snap.directed))
    return DynamicGraph(snapshots), remap


def format_snapshots(graph):
    """The plain-text snapshot format as a string.

    Layout: header line ``n T directed|undirected``; then one block per
    snapshot starting with ``# t <index> <edge-count>`` followed by
    ``<u> <v> <w>`` lines.  LF line endings, weights as decimal floats.
    """
    lines = [f"{graph.n} {graph.num_steps} "
             f"{'directed' if graph.directed else 'undirected'}"]
    for t, snap in enumerate(graph.snapshots):
        lines.append(f"# t {t} {len(snap.edges)}")
        for u, v, w in snap.edges:
            lines.append(f"{u} {v} {w!r}")
    return "\n".join(lines) + "\n"


def save_snapshots(graph, path):
    """Write the plain-text snapshot format (see format_snapshots)."""
    with open(path, "w", newline="\n") as fh:
        fh.write(format_snapshots(graph))


def load_snapshots(path):
    """Parse the snapshot file format written by save_snapshots.

    Malformed input raises SnapshotFormatError naming the offending line.
    """
    with open(path) as fh:
        raw = fh.read().split("\n")
    lines = [(i + 1, line.strip()) for i, line in enumerate(raw) if line.strip()]
    if not lines:
        raise SnapshotFormatError(1, "empty file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        raise SnapshotFormatError(lineno, f"bad header {header!r}")
    try:
        n, num_steps = int(parts[0]), int(parts[1])
    except ValueError:
        raise SnapshotFormatError(lineno, f"bad header counts {header!r}") from None
    if parts[2] not in ("directed", "undirected"):
        raise SnapshotFormatError(lineno, f"bad directedness flag {parts[2]!r}")
    directed = parts[2] == "directed"
    if n < 0 or num_steps < 1:
        raise SnapshotFormatError(lineno, f"bad header counts {header!r}")

    snapshots = []
    pos = 1
    for t in range(num_steps):
        if pos >= len(lines):
            raise SnapshotFormatError(
                lines[-1][0], f"expected {num_steps} snapshot blocks, found {t}"
            )
        lineno, block = lines[pos]
        parts = block.split()
        if len(parts) != 4 or parts[0] != "#" or parts[1] != "t":
            raise SnapshotFormatError(lineno, f"expected '# t {t} <edges>' marker")
        try:
            t_declared, m = int(parts[2]), int(parts[3])
        except ValueError:
            raise SnapshotFormatError(lineno, f"bad block marker {block!r}") from None
        if t_declared != t:
            raise SnapshotFormatError(lineno, f"block index {t_declared}, expected {t}")
        if m < 0:
            raise SnapshotFormatError(lineno, f"negative edge count {m}")
        pos += 1
        edges = []
        for _ in range(m):
            if pos >= len(lines):
                raise SnapshotFormatError(lines[-1][0], "file truncated inside block")
            lineno, edge_line = lines[pos]
            parts = edge_line.split()
            if len(parts) != 3:
                raise SnapshotFormatError(lineno, f"bad edge line {edge_line!r}")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise SnapshotFormatError(lineno, f"bad edge line {edge_line!r}") from None
            edges.append((u, v, w))
            pos += 1
        try:
            snapshots.append(Snapshot(n, edges, directed=directed))
        except ValueError as exc:
            raise SnapshotFormatError(lineno, str(exc)) from None
    if pos != len(lines):
        raise SnapshotFormatError(
            lines[pos][0], f"trailing content after {num_steps} snapshot blocks"
        )
    return DynamicGraph(snapshots)

"""Build a small evolving graph by hand, save it, and slice windows.

Run:  python demos/01_snapshots_and_windows.py
"""

import tempfile
from pathlib import Path

from dynembed import (
    DynamicGraph,
    Snapshot,
    load_snapshots,
    make_windows,
    neighborhood_vector,
    save_snapshots,
)

# Three snapshots of a 5-node graph: a path that slowly closes into a cycle.
snapshots = [
    Snapshot(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]),
    Snapshot(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]),
    Snapshot(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0),
                 (0, 4, 1.0)]),
]
graph = DynamicGraph(snapshots)
print(graph)

# A node's neighborhood vector is one adjacency row.
print("node 1 at t=0:", neighborhood_vector(graph, 0, 1))
print("node 4 at t=2:", neighborhood_vector(graph, 2, 4))

# Windows pair a stack of input snapshots with the following target snapshot.
for window in make_windows(graph, lookback=2, t_lo=0, t_hi=3):
    print(f"window: inputs t={window.start}..{window.start + 1}, "
          f"target t={window.start + 2}")

# Snapshot files round-trip exactly.
path = Path(tempfile.mkdtemp()) / "toy.txt"
save_snapshots(graph, path)
print("\nfile starts with:")
print("\n".join(path.read_text().splitlines()[:4]))
assert load_snapshots(path) == graph
print("round trip OK")

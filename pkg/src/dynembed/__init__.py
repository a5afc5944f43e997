"""dynembed: temporal node embeddings and link prediction for evolving graphs.

The package is organized as a small numpy library:

* :mod:`dynembed.graphs`   - snapshot sequences, windowing, sampling, file I/O
* :mod:`dynembed.sbm`      - dynamic stochastic-block-model generators
* :mod:`dynembed.autodiff` - reverse-mode tape over dense matrix primitives
* :mod:`dynembed.nn`       - parameter store, dense/LSTM layers, Adam
* :mod:`dynembed.models`   - the ae / rnn / aernn architectures and training
* :mod:`dynembed.svd`      - truncated-SVD baselines (optimal/incremental/rerun)
* :mod:`dynembed.metrics`  - precision@k, average precision, MAP
* :mod:`dynembed.harness`  - experiment runner, sweeps, plots, leakage audit
"""

from .graphs import (
    DynamicGraph,
    Snapshot,
    Window,
    load_snapshots,
    make_windows,
    materialize_adjacency,
    neighborhood_vector,
    sample_nodes,
    save_snapshots,
)
from .harness import ExperimentConfig, run_experiment, sweep_history, sweep_lookback
from .metrics import average_precision, evaluate_method, map_score, precision_at_k
from .models import (
    DynModel,
    EmbeddingSeries,
    ModelSpec,
    TrainConfig,
    default_spec,
    embed,
    get_architecture_input,
    load_model,
    predict_next,
    save_model,
    train,
)
from .sbm import LabeledDynamicGraph, SbmConfig, generate_dynamic, generate_static
from .svd import SvdState, inc_svd_update, optimal_svd, rerun_svd_step, svd_scores

__version__ = "0.1.0"

__all__ = [
    "DynamicGraph",
    "DynModel",
    "EmbeddingSeries",
    "ExperimentConfig",
    "LabeledDynamicGraph",
    "ModelSpec",
    "SbmConfig",
    "Snapshot",
    "SvdState",
    "TrainConfig",
    "Window",
    "average_precision",
    "default_spec",
    "embed",
    "evaluate_method",
    "generate_dynamic",
    "generate_static",
    "get_architecture_input",
    "inc_svd_update",
    "load_model",
    "load_snapshots",
    "make_windows",
    "map_score",
    "materialize_adjacency",
    "neighborhood_vector",
    "optimal_svd",
    "precision_at_k",
    "predict_next",
    "rerun_svd_step",
    "run_experiment",
    "sample_nodes",
    "save_model",
    "save_snapshots",
    "svd_scores",
    "sweep_history",
    "sweep_lookback",
    "train",
]

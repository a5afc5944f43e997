"""Train a small recurrent model and predict the next snapshot's links.

Run:  python demos/04_train_and_predict.py   (about a minute)
"""

import numpy as np

from dynembed import (
    DynModel,
    ModelSpec,
    SbmConfig,
    TrainConfig,
    embed,
    evaluate_method,
    generate_dynamic,
    predict_next,
    train,
)

cfg = SbmConfig(block_sizes=(100, 100), p_in=0.1, p_cross=0.01, steps=10,
                migrate_lo=4, migrate_hi=8, cross_edges_per_migrant=12,
                scenario="diminish", seed=0)
labeled = generate_dynamic(cfg)
graph = labeled.graph
boundary = graph.num_steps // 2

spec = ModelSpec("aernn", n=graph.n, lookback=3, embed_dim=32,
                 encoder_widths=(100,), lstm_widths=(32,),
                 decoder_widths=(100, graph.n))
model = DynModel.build(spec, seed=0)
losses = train(model, graph, 0, boundary,
               TrainConfig(epochs=60, batch_size=50, lr=3e-3, seed=0))
print(f"training loss: {losses[0]:.1f} -> {losses[-1]:.1f}")

# Slide the inference window over the held-out steps and score each one.
report = evaluate_method(lambda t: predict_next(model, graph, t - 1),
                         graph, (boundary, graph.num_steps),
                         metadata={"method": "aernn", "embed_dim": 32})
for t, m in zip(report.steps, report.map_per_step):
    print(f"  target t={t}: MAP {m:.3f}")
print(f"mean MAP {report.mean_map:.3f}")

# Embeddings separate the two communities.
y = embed(model, graph, boundary)
labels = labeled.labels[boundary]
centroids = np.stack([y[labels == c].mean(axis=0) for c in (0, 1)])
assigned = np.array([
    int(np.linalg.norm(y[v] - centroids[0]) > np.linalg.norm(y[v] - centroids[1]))
    for v in range(graph.n)
])
accuracy = float(np.mean(assigned == labels))
print(f"nearest-centroid community accuracy: {accuracy:.3f}")

"""The three temporal encoder-decoder architectures and their training loop.

* ``ae``    - dense autoencoder over the concatenated lookback window.
* ``rnn``   - stacked LSTM fed one neighborhood vector per lag.
* ``aernn`` - dense per-step pre-encoder feeding a (smaller) LSTM stack.

All three decode the embedding with a dense stack whose sigmoid output is
trained to reconstruct the next snapshot's adjacency rows under the
weighted loss, so a trained model is simultaneously an embedding function
and a next-step link predictor.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Var, scale, weighted_recon_loss
from .graphs import make_windows
from .nn import (
    LSTM_GATES,
    ParamStore,
    adam_step,
    dense_forward,
    init_dense,
    init_lstm,
    lstm_cell_forward,
    lstm_initial_state,
    read_params,
    write_params,
)

KINDS = ("ae", "rnn", "aernn")

_INFERENCE_CHUNK = 256


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description: kind, sizes, and layer widths."""

    kind: str
    n: int
    lookback: int = 3
    embed_dim: int = 128
    encoder_widths: tuple = ()
    lstm_widths: tuple = ()
    decoder_widths: tuple = ()
    dense_activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))
        object.__setattr__(self, "lstm_widths", tuple(self.lstm_widths))
        object.__setattr__(self, "decoder_widths", tuple(self.decoder_widths))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1 or self.lookback < 1 or self.embed_dim < 1:
            raise ValueError("n, lookback and embed_dim must be positive")
        for widths in (self.encoder_widths, self.lstm_widths, self.decoder_widths):
            if any(w < 1 for w in widths):
                raise ValueError(f"layer widths must be positive, got {widths}")
        if not self.decoder_widths or self.decoder_widths[-1] != self.n:
            raise ValueError(
                f"decoder widths must end at n={self.n}, got {self.decoder_widths}"
            )
        if self.kind == "ae":
            if not self.encoder_widths or self.encoder_widths[-1] != self.embed_dim:
                raise ValueError(
                    f"ae encoder widths must end at embed_dim={self.embed_dim}, "
                    f"got {self.encoder_widths}"
                )
            if self.lstm_widths:
                raise ValueError("ae takes no lstm widths")
        else:
            if not self.lstm_widths or self.lstm_widths[-1] != self.embed_dim:
                raise ValueError(
                    f"{self.kind} lstm widths must end at embed_dim="
                    f"{self.embed_dim}, got {self.lstm_widths}"
                )
            if self.kind == "rnn" and self.encoder_widths:
                raise ValueError("rnn takes no dense encoder widths")
            if self.kind == "aernn" and not self.encoder_widths:
                raise ValueError("aernn needs dense pre-encoder widths")
        if self.dense_activation not in ("relu", "tanh", "sigmoid", "identity"):
            raise ValueError(f"unknown activation {self.dense_activation!r}")


def default_spec(kind, n, embed_dim=128, lookback=3):
    """Paper-scale default widths for each architecture."""
    decoder = (300, 500, n)
    if kind == "ae":
        return ModelSpec(kind, n, lookback, embed_dim,
                         encoder_widths=(500, 300, embed_dim),
                         decoder_widths=decoder)
    if kind == "rnn":
        return ModelSpec(kind, n, lookback, embed_dim,
                         lstm_widths=(500, 300, embed_dim),
                         decoder_widths=decoder)
    if kind == "aernn":
        return ModelSpec(kind, n, lookback, embed_dim,
                         encoder_widths=(500, 300),
                         lstm_widths=(embed_dim,),
                         decoder_widths=decoder)
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass
class TrainConfig:
    """Optimization settings for the reconstruction objective.

    The defaults are sized so a full benchmark run of all three
    architectures at n=1000, d=128 stays within a desktop-CPU budget;
    batches of 250 nodes keep the per-step optimizer overhead small
    relative to the matrix work.
    """

    beta: float = 5.0
    epochs: int = 100
    batch_size: int = 250
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EmbeddingSeries:
    """Per-time-step embedding matrices (each n x d)."""

    times: tuple
    matrices: tuple

    def __post_init__(self):
        if len(self.times) != len(self.matrices):
            raise ValueError("times and matrices must align")

    def at(self, t):
        return self.matrices[self.times.index(t)]


def _param_names(spec):
    names = []
    if spec.kind == "ae":
        enc_dense = len(spec.encoder_widths)
    else:
        enc_dense = len(spec.encoder_widths)
        for i in range(len(spec.lstm_widths)):
            for gate in LSTM_GATES:
                names.append(f"lstm{i}_W{gate}")
                names.append(f"lstm{i}_b{gate}")
    for i in range(enc_dense):
        names.append(f"encoder{i}_W")
        names.append(f"encoder{i}_b")
    for i in range(len(spec.decoder_widths)):
        names.append(f"decoder{i}_W")
        names.append(f"decoder{i}_b")
    return set(names)


def get_architecture_input(inputs, kind, nodes):
    """Slice a stacked window into the shape each architecture consumes.

    inputs is the (lookback, n, n) stack of a Window; nodes indexes the
    mini-batch rows.  ae gets the per-node concatenation of its rows across
    the window, (batch, n*lookback); recurrent kinds get the time-ordered
    stack (lookback, batch, n) to be fed stepwise.
    """
    nodes = np.asarray(nodes)
    if kind == "ae":
        return np.concatenate([inputs[i][nodes] for i in range(inputs.shape[0])],
                              axis=1)
    if kind in ("rnn", "aernn"):
        return inputs[:, nodes, :]
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


class DynModel:
    """A parameterized architecture instance (spec + store)."""

    def __init__(self, spec, store, seed=None):
        self.spec = spec
        self.store = store
        self.seed = seed

    @classmethod
    def build(cls, spec, seed=0):
        rng = np.random.default_rng(seed)
        store = ParamStore()
        n, lb = spec.n, spec.lookback
        if spec.kind == "ae":
            dims = [n * lb, *spec.encoder_widths]
            for i in range(len(spec.encoder_widths)):
                init_dense(store, f"encoder{i}", dims[i + 1], dims[i], rng)
        else:
            step_in = n
            for i in range(len(spec.encoder_widths)):
                init_dense(store, f"encoder{i}", spec.encoder_widths[i], step_in, rng)
                step_in = spec.encoder_widths[i]
            for i, width in enumerate(spec.lstm_widths):
                init_lstm(store, f"lstm{i}", step_in, width, rng)
                step_in = width
        dims = [spec.embed_dim, *spec.decoder_widths]
        for i in range(len(spec.decoder_widths)):
            init_dense(store, f"decoder{i}", dims[i + 1], dims[i], rng)
        return cls(spec, store, seed=seed)

    def _encode(self, tape, inputs):
        spec = self.spec
        if spec.kind == "ae":
            h = Var(inputs)
            for i in range(len(spec.encoder_widths)):
                h = dense_forward(tape, self.store, f"encoder{i}", h,
                                  activation=spec.dense_activation)
            return h
        lookback, batch = inputs.shape[0], inputs.shape[1]
        states = [lstm_initial_state(batch, w) for w in spec.lstm_widths]
        for t in range(lookback):
            x = Var(inputs[t])
            for i in range(len(spec.encoder_widths)):
                x = dense_forward(tape, self.store, f"encoder{i}", x,
                                  activation=spec.dense_activation)
            for i in range(len(spec.lstm_widths)):
                states[i] = lstm_cell_forward(tape, self.store, f"lstm{i}", x,
                                              states[i])
                x = states[i].h
        return states[-1].h

    def _decode(self, tape, embedding):
        spec = self.spec
        h = embedding
        last = len(spec.decoder_widths) - 1
        for i in range(len(spec.decoder_widths)):
            act = "sigmoid" if i == last else spec.dense_activation
            h = dense_forward(tape, self.store, f"decoder{i}", h, activation=act)
        return h

    def forward(self, tape, inputs):
        """(embedding, prediction) Vars for one input batch."""
        embedding = self._encode(tape, inputs)
        return embedding, self._decode(tape, embedding)


def train(model, graph, t_lo, t_hi, cfg):
    """Fit the model on all windows with targets in [t_lo, t_hi).

    Every epoch walks the windows in temporal order and the nodes in a
    fresh uniform shuffle, taking one Adam step per node mini-batch on the
    batch-mean weighted reconstruction loss.  Returns the per-epoch mean
    per-node loss; fully deterministic given cfg.seed.
    """
    spec = model.spec
    if cfg.batch_size > graph.n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds n={graph.n}")
    windows = make_windows(graph, spec.lookback, t_lo, t_hi)
    if not windows:
        raise ValueError(
            f"no training window fits in [{t_lo},{t_hi}) with "
            f"lookback {spec.lookback}"
        )
    rng = np.random.default_rng(cfg.seed)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(graph.n)
        loss_sum = 0.0
        node_count = 0
        for window in windows:
            for lo in range(0, graph.n, cfg.batch_size):
                batch = order[lo:lo + cfg.batch_size]
                x = get_architecture_input(window.inputs, spec.kind, batch)
                tape = Tape()
                _, prediction = model.forward(tape, x)
                total = weighted_recon_loss(tape, prediction,
                                            window.target[batch], cfg.beta)
                mean = scale(tape, total, 1.0 / batch.size)
                tape.backward(mean)
                adam_step(model.store, lr=cfg.lr, beta1=cfg.beta1,
                          beta2=cfg.beta2, eps=cfg.eps)
                loss_sum += float(total.value)
                node_count += batch.size
        history.append(loss_sum / node_count)
    return history


def _history_stack(graph, t, lookback):
    if t - lookback + 1 < 0 or t >= graph.num_steps:
        raise ValueError(
            f"need {lookback} snapshots ending at t={t}; "
            f"graph has steps [0,{graph.num_steps})"
        )
    return np.stack([graph.adjacency(s) for s in range(t - lookback + 1, t + 1)])


def _batched_forward(model, stack):
    n = stack.shape[1]
    embeddings = []
    predictions = []
    for lo in range(0, n, _INFERENCE_CHUNK):
        nodes = np.arange(lo, min(lo + _INFERENCE_CHUNK, n))
        x = get_architecture_input(stack, model.spec.kind, nodes)
        tape = Tape()
        emb, pred = model.forward(tape, x)
        embeddings.append(emb.value)
        predictions.append(pred.value)
    return np.concatenate(embeddings), np.concatenate(predictions)


def embed(model, graph, t):
    """Embedding matrix Y_t (n x d) from the window ending at snapshot t."""
    stack = _history_stack(graph, t, model.spec.lookback)
    embeddings, _ = _batched_forward(model, stack)
    return embeddings


def embed_series(model, graph, times):
    return EmbeddingSeries(tuple(times),
                           tuple(embed(model, graph, t) for t in times))


def predict_next(model, graph, t):
    """Predicted adjacency for snapshot t+1 from the window ending at t.

    Scores land in [0, 1]; undirected graphs get symmetrized scores and the
    diagonal is forced to zero.
    """
    stack = _history_stack(graph, t, model.spec.lookback)
    _, scores = _batched_forward(model, stack)
    if not graph.directed:
        scores = 0.5 * (scores + scores.T)
    np.fill_diagonal(scores, 0.0)
    return scores


# ---------------------------------------------------------------------------
# Model checkpoint: a text preamble (key value per line, closed by "end")
# followed by the binary parameter container from dynembed.nn.
# ---------------------------------------------------------------------------


def _encode_widths(widths):
    return ",".join(str(w) for w in widths) if widths else "-"


def _decode_widths(text):
    return () if text == "-" else tuple(int(tok) for tok in text.split(","))


def save_model(model, path):
    spec = model.spec
    lines = [
        "dynembed-model 1",
        f"kind {spec.kind}",
        f"n {spec.n}",
        f"lookback {spec.lookback}",
        f"embed_dim {spec.embed_dim}",
        f"encoder_widths {_encode_widths(spec.encoder_widths)}",
        f"lstm_widths {_encode_widths(spec.lstm_widths)}",
        f"decoder_widths {_encode_widths(spec.decoder_widths)}",
        f"dense_activation {spec.dense_activation}",
        f"seed {model.seed if model.seed is not None else '-'}",
        "end",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        write_params(model.store, fh)


def load_model(path):
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii").strip()
        if first != "dynembed-model 1":
            raise ValueError(f"not a model checkpoint: header {first!r}")
        fields = {}
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "end":
                break
            if not line:
                raise ValueError("model checkpoint preamble truncated")
            key, _, value = line.partition(" ")
            fields[key] = value
        spec = ModelSpec(
            kind=fields["kind"],
            n=int(fields["n"]),
            lookback=int(fields["lookback"]),
            embed_dim=int(fields["embed_dim"]),
            encoder_widths=_decode_widths(fields["encoder_widths"]),
            lstm_widths=_decode_widths(fields["lstm_widths"]),
            decoder_widths=_decode_widths(fields["decoder_widths"]),
            dense_activation=fields["dense_activation"],
        )
        store = read_params(fh)
        seed = None if fields.get("seed", "-") == "-" else int(fields["seed"])
    if set(store.names()) != _param_names(spec):
        raise ValueError("checkpoint parameters do not match the declared spec")
    return DynModel(spec, store, seed=seed)

import numpy as np
import pytest

from dynembed import autodiff as ad
from dynembed.graphs import DynamicGraph, Snapshot, make_windows
from dynembed.models import (
    DynModel,
    ModelSpec,
    TrainConfig,
    default_spec,
    embed,
    embed_series,
    get_architecture_input,
    load_model,
    predict_next,
    save_model,
    train,
)
from dynembed.nn import finite_diff_check


def tiny_spec(kind, n=6, lookback=2, embed_dim=3):
    if kind == "ae":
        return ModelSpec(kind, n, lookback, embed_dim,
                         encoder_widths=(8, embed_dim),
                         decoder_widths=(8, n))
    if kind == "rnn":
        return ModelSpec(kind, n, lookback, embed_dim,
                         lstm_widths=(5, embed_dim),
                         decoder_widths=(8, n))
    return ModelSpec(kind, n, lookback, embed_dim,
                     encoder_widths=(7,),
                     lstm_widths=(embed_dim,),
                     decoder_widths=(8, n))


def random_dynamic_graph(rng, n, num_steps, p=0.4):
    snapshots = []
    for _ in range(num_steps):
        edges = [(u, v, 1.0) for u in range(n) for v in range(u + 1, n)
                 if rng.random() < p]
        snapshots.append(Snapshot(n, edges))
    return DynamicGraph(snapshots)


def ring_backbone_graph(rng, n, num_steps, p=0.3):
    """Random graph with a ring so no snapshot has an all-zero row.

    Zero input rows put relu pre-activations exactly on the kink (bias
    starts at zero), where central differences are meaningless; gradient
    checks use this generator instead.
    """
    snapshots = []
    for _ in range(num_steps):
        edges = {(u, (u + 1) % n) for u in range(n)}
        edges = {(min(u, v), max(u, v)) for u, v in edges}
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < p:
                    edges.add((u, v))
        snapshots.append(Snapshot(n, [(u, v, 1.0) for u, v in sorted(edges)]))
    return DynamicGraph(snapshots)


class TestModelSpec:
    def test_rejects_bad_kind(self):
        with pytest.raises(ValueError, match="kind"):
            ModelSpec("gnn", 4, decoder_widths=(4,))

    def test_decoder_must_end_at_n(self):
        with pytest.raises(ValueError, match="decoder"):
            ModelSpec("ae", 4, encoder_widths=(3,), embed_dim=3,
                      decoder_widths=(5,))

    def test_encoder_must_end_at_embed_dim(self):
        with pytest.raises(ValueError, match="encoder widths"):
            ModelSpec("ae", 4, embed_dim=3, encoder_widths=(5,),
                      decoder_widths=(4,))

    def test_lstm_must_end_at_embed_dim(self):
        with pytest.raises(ValueError, match="lstm widths"):
            ModelSpec("rnn", 4, embed_dim=3, lstm_widths=(5,),
                      decoder_widths=(4,))

    def test_defaults_are_valid(self):
        for kind in ("ae", "rnn", "aernn"):
            spec = default_spec(kind, n=50, embed_dim=16, lookback=2)
            assert spec.decoder_widths[-1] == 50

    def test_train_config_rejects_zero_epochs(self):
        with pytest.raises(ValueError, match="epochs"):
            TrainConfig(epochs=0)

    def test_train_config_rejects_beta_below_one(self):
        with pytest.raises(ValueError, match="beta"):
            TrainConfig(beta=0.5)


class TestArchitectureInput:
    def test_lookback_one_ae_is_neighborhood_row(self):
        rng = np.random.default_rng(0)
        g = random_dynamic_graph(rng, 5, 2)
        w = make_windows(g, 1, 0, 2)[0]
        x = get_architecture_input(w.inputs, "ae", np.array([2]))
        assert np.array_equal(x[0], g.adjacency(w.start)[2])

    def test_ae_concatenates_rows_in_time_order(self):
        rng = np.random.default_rng(1)
        g = random_dynamic_graph(rng, 3, 3)
        w = make_windows(g, 2, 0, 3)[0]
        x = get_architecture_input(w.inputs, "ae", np.array([1]))
        assert x.shape == (1, 6)
        assert np.array_equal(x[0, :3], g.adjacency(w.start)[1])
        assert np.array_equal(x[0, 3:], g.adjacency(w.start + 1)[1])

    def test_rnn_input_is_time_ordered_stack(self):
        rng = np.random.default_rng(2)
        g = random_dynamic_graph(rng, 3, 3)
        w = make_windows(g, 2, 0, 3)[0]
        x = get_architecture_input(w.inputs, "rnn", np.array([0, 1]))
        assert x.shape == (2, 2, 3)
        assert np.array_equal(x[0][1], g.adjacency(w.start)[1])
        assert np.array_equal(x[1][1], g.adjacency(w.start + 1)[1])


class TestForward:
    @pytest.mark.parametrize("kind", ["ae", "rnn", "aernn"])
    def test_shapes(self, kind):
        spec = tiny_spec(kind)
        model = DynModel.build(spec, seed=0)
        rng = np.random.default_rng(3)
        batch = 4
        if kind == "ae":
            x = rng.random((batch, spec.n * spec.lookback))
        else:
            x = rng.random((spec.lookback, batch, spec.n))
        emb, pred = model.forward(ad.Tape(), x)
        assert emb.value.shape == (batch, spec.embed_dim)
        assert pred.value.shape == (batch, spec.n)
        assert np.all(pred.value > 0) and np.all(pred.value < 1)

    def test_ae_zero_weights_ignores_input(self):
        spec = tiny_spec("ae")
        model = DynModel.build(spec, seed=0)
        for name, p in model.store.items():
            p.value[:] = 0.0
        bias = model.store.get("decoder1_b")
        bias.value[:] = 0.7
        rng = np.random.default_rng(4)
        a = model.forward(ad.Tape(), rng.random((2, 12)))[1].value
        b = model.forward(ad.Tape(), rng.random((2, 12)))[1].value
        expected = 1.0 / (1.0 + np.exp(-0.7))
        assert np.allclose(a, expected) and np.array_equal(a, b)

    def test_aernn_with_identity_preencoder_equals_rnn(self):
        # same dense activation on both sides so the tied decoders agree
        n, lb, d = 5, 3, 3
        rnn_spec = ModelSpec("rnn", n, lb, d, lstm_widths=(4, d),
                             decoder_widths=(6, n),
                             dense_activation="identity")
        aernn_spec = ModelSpec("aernn", n, lb, d, encoder_widths=(n,),
                               lstm_widths=(4, d), decoder_widths=(6, n),
                               dense_activation="identity")
        rnn = DynModel.build(rnn_spec, seed=7)
        aernn = DynModel.build(aernn_spec, seed=8)
        # identity pre-encoder + shared LSTM/decoder weights
        aernn.store.get("encoder0_W").value[:] = np.eye(n)
        aernn.store.get("encoder0_b").value[:] = 0.0
        for name, p in rnn.store.items():
            aernn.store.get(name).value[:] = p.value
        rng = np.random.default_rng(5)
        x = rng.random((lb, 4, n))
        emb_r, pred_r = rnn.forward(ad.Tape(), x)
        emb_a, pred_a = aernn.forward(ad.Tape(), x)
        assert np.max(np.abs(emb_r.value - emb_a.value)) < 1e-12
        assert np.max(np.abs(pred_r.value - pred_a.value)) < 1e-12

    def test_rnn_decoder_uses_identity_activation_path(self):
        # rnn hidden state flows through the dense decoder; sanity on bounds
        spec = tiny_spec("rnn")
        model = DynModel.build(spec, seed=1)
        x = np.random.default_rng(6).random((spec.lookback, 3, spec.n))
        emb, _ = model.forward(ad.Tape(), x)
        assert np.all(np.abs(emb.value) < 1.0)  # tanh-bounded LSTM output


class TestTrain:
    def test_loss_decreases_on_static_sequence(self):
        rng = np.random.default_rng(7)
        snap = random_dynamic_graph(rng, 6, 1).snapshots[0]
        g = DynamicGraph([snap] * 5)
        model = DynModel.build(tiny_spec("ae"), seed=0)
        cfg = TrainConfig(epochs=50, batch_size=3, lr=3e-3, seed=0)
        losses = train(model, g, 0, 5, cfg)
        assert losses[-1] < losses[0]

    def test_no_windows_is_error(self):
        rng = np.random.default_rng(8)
        g = random_dynamic_graph(rng, 6, 2)
        model = DynModel.build(tiny_spec("ae", lookback=3), seed=0)
        with pytest.raises(ValueError, match="no training window"):
            train(model, g, 0, 2, TrainConfig(epochs=1, batch_size=2))

    def test_determinism(self):
        rng = np.random.default_rng(9)
        g = random_dynamic_graph(rng, 6, 4)
        cfg = TrainConfig(epochs=5, batch_size=2, seed=3)
        runs = []
        for _ in range(2):
            model = DynModel.build(tiny_spec("rnn"), seed=1)
            runs.append(train(model, g, 0, 4, cfg))
        assert runs[0] == runs[1]

    def test_batch_size_larger_than_n_rejected(self):
        rng = np.random.default_rng(10)
        g = random_dynamic_graph(rng, 4, 3)
        model = DynModel.build(tiny_spec("ae", n=4), seed=0)
        with pytest.raises(ValueError, match="batch_size"):
            train(model, g, 0, 3, TrainConfig(epochs=1, batch_size=9))

    @pytest.mark.parametrize("kind", ["ae", "rnn", "aernn"])
    def test_end_to_end_gradients_match_finite_differences(self, kind):
        # gradient of the batch loss w.r.t. every parameter, micro instance
        rng = np.random.default_rng(11)
        g = ring_backbone_graph(rng, 6, 3)
        window = make_windows(g, 2, 0, 3)[0]
        model = DynModel.build(tiny_spec(kind), seed=2)
        nodes = np.arange(6)
        x = get_architecture_input(window.inputs, kind, nodes)
        target = window.target[nodes]

        def closure():
            tape = ad.Tape()
            _, pred = model.forward(tape, x)
            loss = ad.weighted_recon_loss(tape, pred, target, beta=5.0)
            return tape, ad.scale(tape, loss, 1.0 / 6.0)

        report = finite_diff_check(closure, model.store, tolerance=1e-4)
        assert report.passed, report.failures


class TestInference:
    def test_embed_shape_and_determinism(self):
        rng = np.random.default_rng(12)
        g = random_dynamic_graph(rng, 6, 4)
        model = DynModel.build(tiny_spec("aernn"), seed=0)
        y1 = embed(model, g, 2)
        y2 = embed(model, g, 2)
        assert y1.shape == (6, 3)
        assert np.array_equal(y1, y2)

    def test_embed_insufficient_history(self):
        rng = np.random.default_rng(13)
        g = random_dynamic_graph(rng, 6, 4)
        model = DynModel.build(tiny_spec("ae", lookback=3), seed=0)
        with pytest.raises(ValueError, match="snapshots ending"):
            embed(model, g, 1)

    def test_predict_next_contract(self):
        rng = np.random.default_rng(14)
        g = random_dynamic_graph(rng, 6, 4)
        model = DynModel.build(tiny_spec("rnn"), seed=0)
        scores = predict_next(model, g, 2)
        assert scores.shape == (6, 6)
        assert np.all(scores >= 0) and np.all(scores <= 1)
        assert np.array_equal(scores, scores.T)
        assert np.all(np.diag(scores) == 0)

    def test_embed_series(self):
        rng = np.random.default_rng(15)
        g = random_dynamic_graph(rng, 6, 5)
        model = DynModel.build(tiny_spec("ae"), seed=0)
        series = embed_series(model, g, (2, 3, 4))
        assert series.times == (2, 3, 4)
        assert np.array_equal(series.at(3), embed(model, g, 3))


class TestParameterCounts:
    def test_ae_first_layer_dominates_rnn_input_kernel_at_lb4(self):
        n, d1 = 40, 8
        ae = DynModel.build(ModelSpec("ae", n, lookback=4, embed_dim=d1,
                                      encoder_widths=(d1,),
                                      decoder_widths=(n,)), seed=0)
        rnn = DynModel.build(ModelSpec("rnn", n, lookback=4, embed_dim=d1,
                                       lstm_widths=(d1,),
                                       decoder_widths=(n,)), seed=0)
        ae_first = ae.store.get("encoder0_W").value.size
        assert ae_first == n * 4 * d1
        rnn_input_kernel = sum(
            rnn.store.get(f"lstm0_W{gate}").value[:, d1:].size
            for gate in "ifco"
        )
        assert rnn_input_kernel == 4 * n * d1
        assert ae_first >= rnn_input_kernel


class TestModelCheckpoint:
    @pytest.mark.parametrize("kind", ["ae", "rnn", "aernn"])
    def test_round_trip(self, tmp_path, kind):
        rng = np.random.default_rng(16)
        g = random_dynamic_graph(rng, 6, 3)
        model = DynModel.build(tiny_spec(kind), seed=5)
        path = tmp_path / "model.ckpt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.spec == model.spec
        assert loaded.seed == 5
        assert np.array_equal(predict_next(loaded, g, 1),
                              predict_next(model, g, 1))

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"something else\n")
        with pytest.raises(ValueError, match="header"):
            load_model(path)

"""Experiment orchestration: dataset -> method -> evaluation -> artifacts.

A run trains (or fits) one method on the snapshots before the split
boundary and scores its next-step predictions on every later snapshot,
writing report.csv / report.json / manifest.json and optional plots under
an output directory.  Sweeps repeat runs along a lookback or
history-length axis with identical seeds.

Temporal hygiene is enforced, not assumed: during the prediction of target
step t the graph's adjacency accesses are audited and any read of step
>= t raises LeakageError.
"""

import concurrent.futures
import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import plots
from .graphs import DynamicGraph, format_snapshots, load_snapshots, sample_nodes
from .metrics import DEFAULT_KS, EvalReport, evaluate_method
from .models import (
    DynModel,
    ModelSpec,
    TrainConfig,
    default_spec,
    embed,
    load_model,
    predict_next,
    save_model,
    train,
)
from .sbm import SbmConfig, generate_dynamic, load_labels
from .svd import inc_svd_update, optimal_svd, rerun_svd_step, snapshot_delta, svd_scores

LEARNED_METHODS = ("ae", "rnn", "aernn")
BASELINE_METHODS = ("optimal-svd", "inc-svd", "rerun-svd")
METHODS = LEARNED_METHODS + BASELINE_METHODS

THREADS_ENV = "DYNEMBED_THREADS"


class ConfigError(ValueError):
    """An experiment configuration field is missing or inconsistent."""


class LeakageError(RuntimeError):
    """A prediction read its own target (or a later) snapshot."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run."""

    dataset: dict
    method: str
    embed_dim: int = 128
    lookback: int = 3
    train: dict = field(default_factory=dict)
    widths: dict | None = None
    theta: float = 0.1
    boundary: int | None = None
    sample: dict | None = None
    new_links_only: bool = False
    retrain_per_step: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if not isinstance(self.dataset, dict) or "kind" not in self.dataset:
            raise ConfigError("dataset must be a dict with a 'kind' field")
        if self.dataset["kind"] not in ("sbm", "file"):
            raise ConfigError(f"dataset kind must be sbm or file, got "
                              f"{self.dataset['kind']!r}")
        if self.dataset["kind"] == "file" and "path" not in self.dataset:
            raise ConfigError("file dataset needs a 'path' field")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.lookback < 1:
            raise ConfigError(f"lookback must be >= 1, got {self.lookback}")
        if self.theta < 0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if self.sample is not None and "k" not in self.sample:
            raise ConfigError("sample needs a 'k' field")

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "method": self.method,
            "embed_dim": self.embed_dim,
            "lookback": self.lookback,
            "train": self.train,
            "widths": self.widths,
            "theta": self.theta,
            "boundary": self.boundary,
            "sample": self.sample,
            "new_links_only": self.new_links_only,
            "retrain_per_step": self.retrain_per_step,
            "seed": self.seed,
        }


class AccessAudit:
    """Listener proving predictions never touch their target snapshot."""

    def __init__(self, graph):
        self._forbidden = None
        self.checked_steps = 0
        self.max_seen = {}
        graph.set_access_listener(self._on_access)

    def _on_access(self, t):
        if self._forbidden is None:
            return
        target = self._forbidden
        if t >= target:
            raise LeakageError(
                f"prediction of step {target} read snapshot {t}"
            )
        self.max_seen[target] = max(self.max_seen.get(target, -1), t)

    def scope(self, target):
        audit = self

        class _Scope:
            def __enter__(self):
                audit._forbidden = target
                audit.checked_steps += 1

            def __exit__(self, *exc):
                audit._forbidden = None
                return False

        return _Scope()

    def summary(self):
        return {
            "checked_steps": self.checked_steps,
            "max_history_read": {str(k): v for k, v in sorted(self.max_seen.items())},
            "violations": 0,
        }


def load_dataset(cfg):
    """Build or read the dynamic graph (and labels if available)."""
    kind = cfg.dataset["kind"]
    if kind == "sbm":
        params = {k: v for k, v in cfg.dataset.items() if k != "kind"}
        if "block_sizes" in params:
            params["block_sizes"] = tuple(params["block_sizes"])
        labeled = generate_dynamic(SbmConfig(**params))
        return labeled.graph, labeled.labels
    graph = load_snapshots(cfg.dataset["path"])
    labels = None
    if cfg.dataset.get("labels"):
        labels = load_labels(cfg.dataset["labels"])
    return graph, labels


def _resolve_spec(cfg, n):
    if cfg.widths:
        return ModelSpec(
            kind=cfg.method,
            n=n,
            lookback=cfg.lookback,
            embed_dim=cfg.embed_dim,
            encoder_widths=tuple(cfg.widths.get("encoder", ())),
            lstm_widths=tuple(cfg.widths.get("lstm", ())),
            decoder_widths=tuple(cfg.widths.get("decoder", ())),
        )
    return default_spec(cfg.method, n, embed_dim=cfg.embed_dim,
                        lookback=cfg.lookback)


def _train_config(cfg, n):
    fields = dict(cfg.train)
    fields.setdefault("seed", cfg.seed)
    config = TrainConfig(**fields)
    if "batch_size" not in fields and config.batch_size > n:
        config.batch_size = n
    return config


def baseline_rank(embed_dim):
    """Factorization rank for a d-dimensional SVD-baseline embedding.

    A node's embedding is the concatenation of its source and target factor
    rows (U sqrt(S) and V sqrt(S)), so d embedding coordinates correspond to
    a rank d/2 truncation.
    """
    return max(1, embed_dim // 2)


def _baseline_predictor(cfg, graph, boundary):
    """Stateful predictor: advance the SVD state through A_{t-1}, score."""
    d = baseline_rank(cfg.embed_dim)
    if d > graph.n:
        raise ConfigError(f"embed_dim {cfg.embed_dim} needs rank {d} > n={graph.n}")
    directed = graph.directed
    box = {"state": optimal_svd(graph.adjacency(0), d), "cursor": 0}

    def advance(to):
        while box["cursor"] < to:
            t = box["cursor"] + 1
            matrix = graph.adjacency(t)
            if cfg.method == "optimal-svd":
                box["state"] = optimal_svd(matrix, d)
            elif cfg.method == "inc-svd":
                box["state"] = inc_svd_update(
                    box["state"], snapshot_delta(box["state"].target, matrix)
                )
            else:
                box["state"] = rerun_svd_step(box["state"], matrix, d, cfg.theta)
            box["cursor"] = t

    def predictor(target):
        advance(target - 1)
        return svd_scores(box["state"], directed=directed)

    # fit through the end of the training range
    advance(boundary - 1)
    return predictor


def _learned_predictor(cfg, graph, boundary):
    spec = _resolve_spec(cfg, graph.n)
    train_cfg = _train_config(cfg, graph.n)
    if cfg.retrain_per_step:
        cache = {}

        def predictor(target):
            if target not in cache:
                model = DynModel.build(spec, seed=train_cfg.seed)
                train(model, graph, 0, target, train_cfg)
                cache.clear()
                cache[target] = model
            return predict_next(cache[target], graph, target - 1)

        return predictor, None

    model = DynModel.build(spec, seed=train_cfg.seed)
    history = train(model, graph, 0, boundary, train_cfg)

    def predictor(target):
        return predict_next(model, graph, target - 1)

    return predictor, (model, history)


def _dataset_fingerprint(cfg, graph, labels):
    digest = hashlib.sha256()
    digest.update(format_snapshots(graph).encode("ascii"))
    if labels is not None:
        digest.update(np.ascontiguousarray(labels).tobytes())
    return digest.hexdigest()


def run_experiment(cfg, out_dir=None, ks=DEFAULT_KS):
    """Execute one configured run; returns (EvalReport, extras).

    extras carries the trained model (when applicable), the training loss
    history, the evaluated graph, and the leakage-audit summary.
    """
    graph, labels = load_dataset(cfg)
    if cfg.sample:
        graph, mapping = sample_nodes(graph, int(cfg.sample["k"]),
                                      cfg.sample.get("seed", 0))
        if labels is not None:
            kept = sorted(mapping, key=mapping.get)
            labels = labels[:, kept]
    total_steps = graph.num_steps
    boundary = cfg.boundary if cfg.boundary is not None else total_steps // 2
    lb = cfg.lookback
    is_learned = cfg.method in LEARNED_METHODS
    if is_learned and not (lb + 1 <= boundary <= total_steps - 1):
        raise ConfigError(
            f"boundary {boundary} outside [lookback+1={lb + 1}, T-1={total_steps - 1}]"
        )
    if not is_learned and not (1 <= boundary <= total_steps - 1):
        raise ConfigError(
            f"boundary {boundary} outside [1, T-1={total_steps - 1}]"
        )

    audit = AccessAudit(graph)
    model = None
    history = None
    if is_learned:
        inner, trained = _learned_predictor(cfg, graph, boundary)
        if trained:
            model, history = trained
    else:
        inner = _baseline_predictor(cfg, graph, boundary)

    def predictor(target):
        with audit.scope(target):
            return inner(target)

    metadata = {
        "method": cfg.method,
        "embed_dim": cfg.embed_dim,
        "lookback": cfg.lookback,
        "seed": cfg.seed,
        "n": graph.n,
        "T": total_steps,
        "boundary": boundary,
        "new_links_only": cfg.new_links_only,
    }
    report = evaluate_method(predictor, graph, (boundary, total_steps), ks=ks,
                             new_links_only=cfg.new_links_only, metadata=metadata)
    extras = {
        "graph": graph,
        "labels": labels,
        "model": model,
        "loss_history": history,
        "audit": audit.summary(),
    }
    if out_dir is not None:
        write_run_outputs(cfg, report, extras, out_dir)
    return report, extras


def write_run_outputs(cfg, report, extras, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    report.write_csv(os.path.join(out_dir, "report.csv"))
    report.write_json(os.path.join(out_dir, "report.json"))
    manifest = {
        "config": cfg.to_dict(),
        "dataset_sha256": _dataset_fingerprint(cfg, extras["graph"],
                                               extras["labels"]),
        "leakage_audit": extras["audit"],
        "mean_map": report.mean_map,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if extras["model"] is not None:
        save_model(extras["model"], os.path.join(out_dir, "model.ckpt"))
    if extras["loss_history"] is not None:
        with open(os.path.join(out_dir, "loss.csv"), "w", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "mean_loss"])
            for i, value in enumerate(extras["loss_history"]):
                writer.writerow([i, f"{value:.17g}"])


@dataclass
class SweepResult:
    """One mean-MAP row per axis value, plus the per-step detail."""

    axis_name: str
    axis: tuple
    mean_map: tuple
    per_step: tuple          # one tuple of per-target-step MAPs per axis value
    steps: tuple             # evaluated target steps (same for every value)
    metadata: dict = field(default_factory=dict)

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.axis_name, "target_t", "map", "mean_map"])
            for value, per_step, mean in zip(self.axis, self.per_step,
                                             self.mean_map):
                for t, m in zip(self.steps, per_step):
                    writer.writerow([value, t, f"{m:.17g}", f"{mean:.17g}"])

    def write_json(self, path):
        payload = {
            "axis_name": self.axis_name,
            "axis": list(self.axis),
            "mean_map": list(self.mean_map),
            "per_step": [list(row) for row in self.per_step],
            "steps": list(self.steps),
            "metadata": self.metadata,
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _max_workers(n_points):
    limit = int(os.environ.get(THREADS_ENV, "1") or "1")
    return max(1, min(limit, n_points))


def _run_points(configs, n_points):
    workers = _max_workers(n_points)
    if workers == 1:
        return [run_experiment(cfg)[0] for cfg in configs]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cfg: run_experiment(cfg)[0], configs))


def sweep_lookback(cfg, lookbacks):
    """run_experiment per lookback value with identical seeds."""
    lookbacks = [int(lb) for lb in lookbacks]
    if not lookbacks:
        raise ConfigError("sweep needs at least one lookback value")
    if any(b <= a for a, b in zip(lookbacks, lookbacks[1:])):
        raise ConfigError(f"lookback axis must be strictly increasing: {lookbacks}")
    configs = [replace(cfg, lookback=lb) for lb in lookbacks]
    reports = _run_points(configs, len(lookbacks))
    return SweepResult(
        axis_name="lookback",
        axis=tuple(lookbacks),
        mean_map=tuple(r.mean_map for r in reports),
        per_step=tuple(r.map_per_step for r in reports),
        steps=reports[0].steps,
        metadata={"method": cfg.method, "embed_dim": cfg.embed_dim,
                  "seed": cfg.seed},
    )


def sweep_history(cfg, lengths=None):
    """Retrain on growing training-history suffixes; fixed test range.

    The history length axis counts snapshots available for training: length
    L trains on windows whose targets lie in [boundary-(L-lookback),
    boundary).  The largest length equals the full training range of
    run_experiment.
    """
    if cfg.method not in LEARNED_METHODS:
        raise ConfigError("history sweep applies to learned methods only")
    graph, _ = load_dataset(cfg)
    if cfg.sample:
        graph, _ = sample_nodes(graph, int(cfg.sample["k"]),
                                cfg.sample.get("seed", 0))
    total_steps = graph.num_steps
    lb = cfg.lookback
    if total_steps < 2 * (lb + 1):
        raise ConfigError(
            f"history sweep needs T >= 2*(lookback+1) = {2 * (lb + 1)}, "
            f"got T={total_steps}"
        )
    boundary = cfg.boundary if cfg.boundary is not None else total_steps // 2
    if lengths is None:
        lengths = list(range(lb + 1, boundary + 1))
    lengths = [int(x) for x in lengths]
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ConfigError(f"history axis must be strictly increasing: {lengths}")
    if lengths[0] < lb + 1 or lengths[-1] > boundary:
        raise ConfigError(
            f"history lengths must lie in [{lb + 1},{boundary}], got {lengths}"
        )

    def run_point(length):
        report, _ = _run_history_point(cfg, graph, boundary, length)
        return report

    workers = _max_workers(len(lengths))
    if workers == 1:
        reports = [run_point(length) for length in lengths]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_point, lengths))
    return SweepResult(
        axis_name="history_length",
        axis=tuple(lengths),
        mean_map=tuple(r.mean_map for r in reports),
        per_step=tuple(r.map_per_step for r in reports),
        steps=reports[0].steps,
        metadata={"method": cfg.method, "embed_dim": cfg.embed_dim,
                  "seed": cfg.seed, "boundary": boundary},
    )


def _run_history_point(cfg, shared_graph, boundary, length):
    # private graph object so concurrent sweep points get independent audits
    graph = DynamicGraph(shared_graph.snapshots)
    spec = _resolve_spec(cfg, graph.n)
    train_cfg = _train_config(cfg, graph.n)
    model = DynModel.build(spec, seed=train_cfg.seed)
    t_lo = boundary - (length - cfg.lookback)
    history = train(model, graph, t_lo, boundary, train_cfg)
    audit = AccessAudit(graph)

    def predictor(target):
        with audit.scope(target):
            return predict_next(model, graph, target - 1)

    metadata = {"method": cfg.method, "history_length": length,
                "embed_dim": cfg.embed_dim, "seed": cfg.seed}
    report = evaluate_method(predictor, graph, (boundary, graph.num_steps),
                             new_links_only=cfg.new_links_only,
                             metadata=metadata)
    return report, history


def export_embeddings(checkpoint_path, graph, t, path):
    """CSV of node id + embedding coordinates at snapshot t."""
    if not os.path.exists(checkpoint_path):
        raise FileNotFoundError(f"model checkpoint {checkpoint_path!r} not found")
    model = load_model(checkpoint_path)
    matrix = embed(model, graph, t)
    with open(path, "w", newline="\n") as fh:
        for node in range(matrix.shape[0]):
            coords = ",".join(f"{x:.17g}" for x in matrix[node])
            fh.write(f"{node},{coords}\n")
    return matrix


def emit_report_plot(report, out_dir, stem="map_per_step"):
    """Per-step MAP bars for a single run."""
    os.makedirs(out_dir, exist_ok=True)
    label = report.metadata.get("method", "method")
    svg = plots.bar_chart(
        f"MAP per target step ({label})",
        "MAP",
        [str(t) for t in report.steps],
        {label: list(report.map_per_step)},
    )
    path = os.path.join(out_dir, f"{stem}.svg")
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
    return path


def emit_comparison_plot(reports, out_dir, stem="map_comparison"):
    """Grouped mean-MAP bars across runs (grouped by embedding size)."""
    if not reports:
        raise ValueError("no reports to plot")
    os.makedirs(out_dir, exist_ok=True)
    dims = sorted({r.metadata.get("embed_dim", 0) for r in reports})
    methods = []
    for r in reports:
        m = r.metadata.get("method", "method")
        if m not in methods:
            methods.append(m)
    series = {}
    for m in methods:
        row = []
        for d in dims:
            found = [r.mean_map for r in reports
                     if r.metadata.get("method") == m
                     and r.metadata.get("embed_dim", 0) == d]
            row.append(found[0] if found else 0.0)
        series[m] = row
    svg = plots.bar_chart("Mean MAP by method and embedding size", "mean MAP",
                          [str(d) for d in dims], series)
    path = os.path.join(out_dir, f"{stem}.svg")
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
    return path


def emit_sweep_plot(sweep, out_dir, stem=None):
    """MAP-vs-axis line plot for a sweep result."""
    if not sweep.axis:
        raise ValueError("empty sweep: nothing to plot")
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or f"map_vs_{sweep.axis_name}"
    label = sweep.metadata.get("method", "method")
    svg = plots.line_chart(
        f"Mean MAP vs {sweep.axis_name} ({label})",
        sweep.axis_name,
        "mean MAP",
        list(sweep.axis),
        {label: list(sweep.mean_map)},
    )
    path = os.path.join(out_dir, f"{stem}.svg")
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
    return path

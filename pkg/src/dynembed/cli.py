"""Command-line entry points for the benchmark harness.

Subcommands: generate-sbm, run, sweep-lookback, sweep-history,
export-embeddings, plot.  `run` and the sweeps take a JSON experiment
config (--config); individual flags override config fields.  Results land
under --out.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

from .graphs import load_snapshots, save_snapshots
from .harness import (
    ExperimentConfig,
    emit_comparison_plot,
    emit_report_plot,
    emit_sweep_plot,
    export_embeddings,
    run_experiment,
    sweep_history,
    sweep_lookback,
)
from .metrics import EvalReport
from .sbm import SbmConfig, generate_dynamic, save_labels


def _parse_int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def _load_config(args):
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        if not getattr(args, "dataset", None):
            raise SystemExit("either --config or --dataset is required")
        cfg = ExperimentConfig(
            dataset={"kind": "file", "path": args.dataset},
            method=args.method or "aernn",
        )
    overrides = {}
    if getattr(args, "dataset", None) and args.config:
        overrides["dataset"] = {"kind": "file", "path": args.dataset}
    for name in ("method", "embed_dim", "lookback", "theta", "boundary", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "new_links_only", False):
        overrides["new_links_only"] = True
    if getattr(args, "retrain_per_step", False):
        overrides["retrain_per_step"] = True
    train = dict(cfg.train)
    for name in ("epochs", "batch_size", "beta", "lr"):
        value = getattr(args, name, None)
        if value is not None:
            train[name] = value
    if train != cfg.train:
        overrides["train"] = train
    return replace(cfg, **overrides) if overrides else cfg


def _add_common_run_flags(parser):
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--dataset", help="snapshot file (overrides config dataset)")
    parser.add_argument("--method", choices=["ae", "rnn", "aernn", "optimal-svd",
                                             "inc-svd", "rerun-svd"])
    parser.add_argument("--embed-dim", type=int, dest="embed_dim")
    parser.add_argument("--lookback", type=int)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--boundary", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--beta", type=float)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--new-links-only", action="store_true",
                        dest="new_links_only")
    parser.add_argument("--retrain-per-step", action="store_true",
                        dest="retrain_per_step")
    parser.add_argument("--out", required=True, help="output directory")


def _cmd_generate_sbm(args):
    cfg = SbmConfig(
        block_sizes=tuple(_parse_int_list(args.blocks)),
        p_in=args.p_in,
        p_cross=args.p_cross,
        steps=args.steps,
        migrate_lo=args.migrate_lo,
        migrate_hi=args.migrate_hi,
        cross_edges_per_migrant=args.cross_edges,
        scenario=args.scenario,
        seed=args.seed,
    )
    labeled = generate_dynamic(cfg)
    save_snapshots(labeled.graph, args.out)
    if args.labels_out:
        save_labels(labeled, args.labels_out)
    status = "truncated" if labeled.truncated else "complete"
    print(f"wrote {labeled.graph.num_steps} snapshots of n={labeled.graph.n} "
          f"to {args.out} ({status})")
    return 0


def _cmd_run(args):
    cfg = _load_config(args)
    report, _ = run_experiment(cfg, out_dir=args.out)
    emit_report_plot(report, args.out)
    print(f"method={cfg.method} mean MAP={report.mean_map:.4f} "
          f"over steps {list(report.steps)}")
    return 0


def _cmd_sweep_lookback(args):
    cfg = _load_config(args)
    sweep = sweep_lookback(cfg, _parse_int_list(args.lookbacks))
    os.makedirs(args.out, exist_ok=True)
    sweep.write_csv(os.path.join(args.out, "sweep_lookback.csv"))
    sweep.write_json(os.path.join(args.out, "sweep_lookback.json"))
    emit_sweep_plot(sweep, args.out)
    for lb, m in zip(sweep.axis, sweep.mean_map):
        print(f"lookback={lb} mean MAP={m:.4f}")
    return 0


def _cmd_sweep_history(args):
    cfg = _load_config(args)
    lengths = _parse_int_list(args.lengths) if args.lengths else None
    sweep = sweep_history(cfg, lengths)
    os.makedirs(args.out, exist_ok=True)
    sweep.write_csv(os.path.join(args.out, "sweep_history.csv"))
    sweep.write_json(os.path.join(args.out, "sweep_history.json"))
    emit_sweep_plot(sweep, args.out)
    for length, m in zip(sweep.axis, sweep.mean_map):
        print(f"history={length} mean MAP={m:.4f}")
    return 0


def _cmd_export_embeddings(args):
    graph = load_snapshots(args.dataset)
    matrix = export_embeddings(args.checkpoint, graph, args.t, args.out)
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} embedding to {args.out}")
    return 0


def _report_from_json(path):
    with open(path) as fh:
        data = json.load(fh)
    if "axis" in data:
        return data
    return EvalReport(
        steps=tuple(data["steps"]),
        map_per_step=tuple(data["map_per_step"]),
        p_at_k=tuple({int(k): v for k, v in pk.items()} for pk in data["p_at_k"]),
        excluded_per_step=tuple(data["excluded_per_step"]),
        metadata=data["metadata"],
    )


def _cmd_plot(args):
    loaded = [_report_from_json(path) for path in args.inputs]
    sweeps = [x for x in loaded if isinstance(x, dict)]
    reports = [x for x in loaded if isinstance(x, EvalReport)]
    written = []
    for data in sweeps:
        from .harness import SweepResult

        sweep = SweepResult(
            axis_name=data["axis_name"],
            axis=tuple(data["axis"]),
            mean_map=tuple(data["mean_map"]),
            per_step=tuple(tuple(row) for row in data["per_step"]),
            steps=tuple(data["steps"]),
            metadata=data["metadata"],
        )
        written.append(emit_sweep_plot(sweep, args.out))
    if len(reports) == 1:
        written.append(emit_report_plot(reports[0], args.out))
    elif len(reports) > 1:
        written.append(emit_comparison_plot(reports, args.out))
    if not written:
        raise SystemExit("nothing to plot")
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dynembed",
        description="Temporal graph embedding benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-sbm", help="write a synthetic dynamic SBM")
    p.add_argument("--scenario", choices=["shift", "diminish"], default="diminish")
    p.add_argument("--blocks", default="500,500")
    p.add_argument("--p-in", type=float, default=0.1, dest="p_in")
    p.add_argument("--p-cross", type=float, default=0.01, dest="p_cross")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--migrate-lo", type=int, default=10, dest="migrate_lo")
    p.add_argument("--migrate-hi", type=int, default=20, dest="migrate_hi")
    p.add_argument("--cross-edges", type=int, default=30, dest="cross_edges")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out", dest="labels_out")
    p.set_defaults(fn=_cmd_generate_sbm)

    p = sub.add_parser("run", help="train/fit one method and evaluate it")
    _add_common_run_flags(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep-lookback", help="mean MAP across lookback values")
    _add_common_run_flags(p)
    p.add_argument("--lbs", "--lookbacks", required=True, dest="lookbacks")
    p.set_defaults(fn=_cmd_sweep_lookback)

    p = sub.add_parser("sweep-history", help="mean MAP across training lengths")
    _add_common_run_flags(p)
    p.add_argument("--lengths")
    p.set_defaults(fn=_cmd_sweep_history)

    p = sub.add_parser("export-embeddings", help="write an embedding CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_export_embeddings)

    p = sub.add_parser("plot", help="render SVG figures from report/sweep JSON")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

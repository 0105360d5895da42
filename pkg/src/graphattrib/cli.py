"""Command-line front end: generate sessions, dump graphs, classify, evaluate.

Heavy imports happen inside the command handlers so the GRAPH_ATTRIB_THREADS
cap can be applied to the math libraries before they load.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        args = _build_parser().parse_args(argv)
        return args.handler(args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _apply_thread_cap() -> None:
    raw = os.environ.get("GRAPH_ATTRIB_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"GRAPH_ATTRIB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"GRAPH_ATTRIB_THREADS must be positive, got {n}")
    for var in _THREAD_ENV_VARS:
        os.environ.setdefault(var, str(n))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph-attrib",
        description="Assign speaker labels to embedding segments with graph-based "
        "semi-supervised learning.",
    )
    sub = parser.add_subparsers(required=True, metavar="command")

    gen = sub.add_parser("gen", help="generate a synthetic embedding-set file")
    _common_flags(gen, input_flag=False)
    gen.set_defaults(handler=cmd_gen)

    graph = sub.add_parser("graph", help="build the session graph and dump its edge list")
    _common_flags(graph)
    graph.set_defaults(handler=cmd_graph)

    run = sub.add_parser("run", help="classify the test segments of one session")
    _common_flags(run)
    run.add_argument(
        "--method", required=True, choices=["cosine", "lp", "gcn"], help="classifier to apply"
    )
    run.set_defaults(handler=cmd_run)

    ev = sub.add_parser("eval", help="run the repeated-sampling evaluation protocol")
    _common_flags(ev)
    ev.set_defaults(handler=cmd_eval)
    return parser


def _common_flags(parser: argparse.ArgumentParser, input_flag: bool = True) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    if input_flag:
        parser.add_argument("--input", type=Path, default=None, help="embedding-set file to read")
    parser.add_argument(
        "--output", type=Path, default=Path("."), help="directory for output files (default: .)"
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="override the command's master seed from the config"
    )


def _load_config(args):
    from .config import default_config, load_app_config

    return load_app_config(args.config) if args.config is not None else default_config()


def _out_dir(args) -> Path:
    args.output.mkdir(parents=True, exist_ok=True)
    return args.output


def _require_input(args):
    from .segments import load_segment_set

    if args.input is None:
        raise ValueError("missing --input: this command reads an embedding-set file")
    return load_segment_set(args.input)


def cmd_gen(args) -> int:
    from dataclasses import replace

    from .segments import save_segment_set
    from .synth import gen_session

    cfg = _load_config(args)
    if cfg.synth is None:
        raise ValueError("config: missing 'synth' section (required by gen)")
    synth = cfg.synth if args.seed is None else replace(cfg.synth, seed=args.seed)
    segment_set = gen_session(synth)
    path = _out_dir(args) / "embeddings.json"
    save_segment_set(segment_set, path)
    print(
        f"wrote {path}: N={segment_set.num_segments} M={segment_set.num_profiles} "
        f"C={segment_set.num_classes}"
    )
    return 0


def cmd_graph(args) -> int:
    from .graph import build_affinity, dump_edges

    cfg = _load_config(args)
    segment_set = _require_input(args)
    graph = build_affinity(segment_set, cfg.graph)
    path = _out_dir(args) / "edges.txt"
    dump_edges(graph, path)
    print(f"wrote {path}: nodes={graph.node_count} edges={graph.kept_edges}")
    return 0


def cmd_run(args) -> int:
    import csv
    from dataclasses import replace

    from .baseline import classify_test_segments, fit_centroids
    from .evaluation import segment_error_rate
    from .gcn import classify_gcn
    from .graph import build_affinity
    from .labelprop import classify_lp

    cfg = _load_config(args)
    segment_set = _require_input(args)
    view = segment_set.without_test_labels()
    if args.method == "cosine":
        preds = classify_test_segments(fit_centroids(view), view)
    elif args.method == "lp":
        preds = classify_lp(view, build_affinity(view, cfg.graph), cfg.lp)
    else:
        gcn_cfg = cfg.gcn if args.seed is None else replace(cfg.gcn, seed=args.seed)
        preds = classify_gcn(view, build_affinity(view, cfg.graph), gcn_cfg)

    path = _out_dir(args) / "predictions.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "predicted_class"])
        for seg, pred in zip(view.tests, preds):
            writer.writerow([seg.id, int(pred)])
    print(f"wrote {path}: {len(view.tests)} predictions")

    truth_pairs = [(int(p), s.speaker) for p, s in zip(preds, segment_set.tests) if s.speaker is not None]
    if truth_pairs:
        err = segment_error_rate([p for p, _ in truth_pairs], [t for _, t in truth_pairs])
        print(f"segment_error_rate={err}")
    return 0


def cmd_eval(args) -> int:
    from .evaluation import report_to_table, run_experiment, write_aggregate_csv, write_per_run_csv
    from .plotting import save_error_rate_figure
    from .segments import load_segment_set

    cfg = _load_config(args)
    if args.input is not None:
        source = load_segment_set(args.input)
    elif cfg.synth is not None:
        source = cfg.synth
    else:
        raise ValueError("eval needs --input or a 'synth' config section")

    seed = cfg.eval.seed if args.seed is None else args.seed
    report = run_experiment(
        source,
        methods=cfg.eval.methods,
        ks=cfg.eval.ks,
        repeats=cfg.eval.repeats,
        seed=seed,
        graph_config=cfg.graph,
        lp_config=cfg.lp,
        gcn_config=cfg.gcn,
    )
    out = _out_dir(args)
    write_per_run_csv(report, out / "per_run.csv")
    write_aggregate_csv(report, out / "aggregate.csv")
    table = report_to_table(report)
    (out / "report.txt").write_text(table)
    save_error_rate_figure(report, out / "error_rates.png")
    print(table, end="")
    print(f"wrote {out / 'per_run.csv'}, {out / 'aggregate.csv'}, "
          f"{out / 'report.txt'}, {out / 'error_rates.png'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

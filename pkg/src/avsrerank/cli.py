"""Command-line entry point.

Subcommands: rerank, eval, compare, sweep, convert, inspect. Data goes to
stdout (or --out); diagnostics go to stderr. Exit codes: 0 success, 1
usage error, 2 data or validation error. The AVSRERANK_LOG environment
variable (error|warn|info|debug) controls logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import graphrerank
from .errors import ConfigError, DataError
from .experiments import SweepSpec, per_query_report, sweep
from .fusion import FusionConfig, rerank_run
from .metrics import evaluate_run
from .runio import parse_qrels, parse_run, write_run
from .store import (
    QueryEmbeddings,
    load_store,
    open_store,
    parse_text_store,
    save_store,
    store_from_records,
    write_text_store,
)

log = logging.getLogger("avsrerank")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _configure_logging() -> None:
    raw = os.environ.get("AVSRERANK_LOG", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        level = logging.WARNING
        print(
            f"avsrerank: ignoring unknown AVSRERANK_LOG value {raw!r}",
            file=sys.stderr,
        )
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="avsrerank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rerank", help="fuse or label-spread a run against a store")
    p.add_argument("--run", required=True, help="input run file")
    p.add_argument("--store", required=True, help="frame embedding store (EMBS)")
    p.add_argument("--queries", required=True, help="query embedding store (EMBS)")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--norm", choices=("none", "minmax", "zscore"), default="none")
    p.add_argument("--pool", choices=("max", "mean"), default="max")
    p.add_argument("--missing", choices=("error", "floor"), default="error")
    p.add_argument("--method", choices=("fuse", "labelspread"), default="fuse")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output run file (default stdout)")
    p.add_argument("--prop-alpha", type=float, default=0.99,
                   help="labelspread propagation strength")
    p.add_argument("--seeds", type=int, default=10,
                   help="labelspread positive seed count")
    p.add_argument("--sigma", type=float, default=None,
                   help="labelspread kernel width (default: median heuristic)")
    p.add_argument("--solver", choices=("closed_form", "iterative"),
                   default="closed_form")
    p.add_argument("--graph-max-iters", type=int, default=1000)
    p.add_argument("--graph-tol", type=float, default=1e-6)

    p = sub.add_parser("eval", help="evaluate a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", choices=("ap", "infap"), default="infap")
    p.add_argument("--out")

    p = sub.add_parser("compare", help="per-query deltas between two runs")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", choices=("ap", "infap"), default="infap")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="grid-sweep alpha/k/normalization")
    p.add_argument("--spec", required=True, help="JSON sweep specification")
    p.add_argument("--run", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("convert", help="convert between text interchange and EMBS")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--to", choices=("embs", "text"), default="embs")
    p.add_argument("--raw", action="store_true",
                   help="keep rows as-is instead of L2-normalizing (embs only)")

    p = sub.add_parser("inspect", help="print store header information")
    p.add_argument("--store", required=True)

    return parser


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_run(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_run(fh)


def _load_qrels(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_qrels(fh)


def _load_queries(path: str) -> QueryEmbeddings:
    return QueryEmbeddings.from_store(load_store(path))


def _cmd_rerank(args) -> int:
    run = _load_run(args.run)
    store = load_store(args.store)
    if args.method == "labelspread":
        cfg = graphrerank.GraphConfig(
            propagation_alpha=args.prop_alpha,
            seeds=args.seeds,
            sigma=args.sigma,
            solver=args.solver,
            max_iters=args.graph_max_iters,
            tolerance=args.graph_tol,
        )
        out = graphrerank.label_spread_run(run, store, cfg, k=args.k)
        _emit(write_run(out), args.out)
        return EXIT_OK
    queries = _load_queries(args.queries)
    cfg = FusionConfig(
        alpha=args.alpha,
        k=args.k,
        normalization=args.norm,
        pooling=args.pool,
        missing_policy=args.missing,
    )
    out, diags = rerank_run(run, store, queries, cfg, jobs=args.jobs)
    for qid, missing in diags.missing.items():
        log.warning("query %s: %d candidates had no embedding", qid, len(missing))
    _emit(write_run(out), args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = evaluate_run(_load_run(args.run), _load_qrels(args.qrels), args.metric)
    for qid in report.skipped:
        log.warning("query %s skipped (unjudged or no relevant videos)", qid)
    _emit(report.to_tsv(), args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    text = per_query_report(
        _load_run(args.before),
        _load_run(args.after),
        _load_qrels(args.qrels),
        metric=args.metric,
    )
    _emit(text, args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {"alphas", "ks", "normalizations", "metric", "pooling"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown sweep spec keys: {', '.join(sorted(unknown))}")
    if "alphas" not in raw or "ks" not in raw:
        raise ConfigError("sweep spec requires 'alphas' and 'ks'")
    spec = SweepSpec(
        alphas=raw["alphas"],
        ks=raw["ks"],
        normalizations=raw.get("normalizations", ["none"]),
        metric=raw.get("metric", "infap"),
        pooling=raw.get("pooling", "max"),
    )
    result = sweep(
        _load_run(args.run),
        load_store(args.store),
        _load_queries(args.queries),
        _load_qrels(args.qrels),
        spec,
        jobs=args.jobs,
    )
    _emit(result.to_tsv(), args.out)
    return EXIT_OK


def _cmd_convert(args) -> int:
    if args.to == "embs":
        with open(args.in_path, "r", encoding="utf-8") as fh:
            records = parse_text_store(fh)
        store = store_from_records(records, normalize=not args.raw)
        save_store(store, args.out)
    else:
        store = load_store(args.in_path)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(write_text_store(store))
    return EXIT_OK


def _cmd_inspect(args) -> int:
    store = load_store(args.store)
    lines = [
        "format: EMBS v1",
        f"dim: {store.dim}",
        f"normalized: {'yes' if store.normalized else 'no'}",
        f"videos: {len(store)}",
        f"frames: {store.total_frames}",
    ]
    sys.stdout.write("".join(line + "\n" for line in lines))
    return EXIT_OK


_COMMANDS = {
    "rerank": _cmd_rerank,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "convert": _cmd_convert,
    "inspect": _cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"avsrerank: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"avsrerank: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"avsrerank: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command-line entry points: corpus generation, annotation, indexing, search, serving."""

from __future__ import annotations

import argparse
import contextlib
import json
import signal
import sys
from pathlib import Path

from . import annotator, gencorpus
from . import index as index_mod
from .config import Config, load_resources
from .errors import KasError
from .matcher import canonical_json, results_to_dict, search
from .queryproc import build_pattern_plans, parse_query
from .server import AppState, serve_forever

_CLASS_FLAGS = [
    ("entity", "ENTITY", "concept"),
    ("pronoun", "PRONOUN", "subnonterminal"),
    ("dosage", "DOSAGE", "constraint"),
    ("interval", "INTERVAL", "subnonterminal"),
    ("frequency", "FREQUENCY", "subnonterminal"),
    ("roa", "ROA", "subnonterminal"),
    ("drugform", "DRUGFORM", "subnonterminal"),
    ("sideffect", "SIDEFFECT", "subnonterminal"),
    ("emotion", "EMOTION", "subnonterminal"),
    ("intensity", "INTENSITY", "subnonterminal"),
    ("sentiment", "SENTIMENT", "subnonterminal"),
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kas", description="template-pattern corpus search")
    parser.add_argument("--config", help="config file (or set KAS_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-corpus", help="generate a synthetic corpus with known ground truth")
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--docs", type=int, default=200)
    gen.add_argument("--out", required=True)
    gen.add_argument("--fixture", choices=["scenario1"],
                     help="generate the fixed filter-trace fixture instead of a random corpus")

    ann = sub.add_parser("annotate", help="extract annotations from a corpus")
    ann.add_argument("--corpus", required=True)
    ann.add_argument("--out", required=True)
    ann.add_argument("--workers", type=int, default=1)
    ann.add_argument("--stats", help="write per-pattern counts to this file")

    idx = sub.add_parser("index", help="build a positional index from annotations")
    idx.add_argument("--in", dest="annotations", required=True)
    idx.add_argument("--corpus", required=True)
    idx.add_argument("--out", required=True)

    srch = sub.add_parser("search", help="run a template query against an index")
    srch.add_argument("--index")
    srch.add_argument("--query", help="query JSON (inline or @file)")
    srch.add_argument("--pattern", help="template pattern id")
    for flag, _cls, _kind in _CLASS_FLAGS:
        srch.add_argument(f"--{flag}")
    srch.add_argument("--ranges", help="comma-separated max gaps, one per adjacent pair")
    srch.add_argument("--limit", type=int)
    srch.add_argument("--distinct-docs", action="store_true")
    srch.add_argument("--trace", action="store_true", help="also print the per-filter count trace")
    srch.add_argument("--print-query", action="store_true",
                      help="print the query JSON instead of searching")

    srv = sub.add_parser("serve", help="serve the HTTP API over a loaded index")
    srv.add_argument("--index")
    srv.add_argument("--host")
    srv.add_argument("--port", type=int)
    srv.add_argument("--ui-dir", help="directory of static UI files to serve at /")
    return parser


def _config(args) -> Config:
    if args.config:
        return Config.load(args.config)
    return Config.from_env()


def build_query_obj(args) -> dict:
    if args.query:
        text = args.query
        if text.startswith("@"):
            text = Path(text[1:]).read_text(encoding="utf-8")
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise KasError("query JSON must be an object")
        return obj
    elements = []
    for flag, cls, kind in _CLASS_FLAGS:
        value = getattr(args, flag)
        if value is None:
            continue
        if flag == "interval":
            value = "|".join(f"BY_{p.strip().upper()}" if not p.strip().upper().startswith("BY_")
                             else p.strip().upper() for p in value.split(","))
        elif kind == "subnonterminal" and flag != "dosage":
            value = "|".join(p.strip() for p in value.split(","))
        elements.append({"class": cls, "binding_kind": kind, "value": value})
    if not elements:
        raise KasError("no query given: pass --query or per-class flags")
    obj: dict = {"elements": elements}
    if args.pattern:
        obj["pattern"] = args.pattern
    if args.ranges:
        obj["ranges"] = [int(x) for x in args.ranges.split(",")]
    if args.limit is not None:
        obj["limit"] = args.limit
    if args.distinct_docs:
        obj["distinct_docs"] = True
    return obj


def main(argv=None) -> int:
    if hasattr(signal, "SIGPIPE"):  # die quietly when piped into head & co
        with contextlib.suppress(ValueError):  # not the main thread (tests)
            signal.signal(signal.SIGPIPE, signal.SIG_DFL)
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except KasError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    cfg = _config(args)

    if args.command == "gen-corpus":
        if args.fixture == "scenario1":
            docs, truth = gencorpus.generate_scenario1(args.seed)
        else:
            docs, truth = gencorpus.generate_random(args.seed, args.docs)
        truth_path = gencorpus.write_corpus(args.out, docs, truth)
        print(f"wrote {len(docs)} documents to {args.out} (truth: {truth_path})")
        return 0

    if args.command == "annotate":
        res = load_resources(cfg)
        plans = build_pattern_plans(res.grammar, res.model, res.tables)
        docs = annotator.read_corpus(args.corpus)
        annotations, stats = annotator.annotate_corpus(plans, docs, workers=args.workers)
        annotator.write_annotations(args.out, annotations)
        text = annotator.format_stats(stats)
        if args.stats:
            Path(args.stats).write_text(text, encoding="utf-8")
        print(text, end="")
        return 0

    if args.command == "index":
        res = load_resources(cfg)
        docs = annotator.read_corpus(args.corpus)
        annotations = annotator.read_annotations(args.annotations)
        idx = index_mod.build_index(annotations, docs, pattern_ids=res.grammar.pattern_order)
        index_mod.save(idx, args.out)
        print(f"indexed {len(annotations)} annotations over {len(docs)} documents")
        return 0

    if args.command == "search":
        obj = build_query_obj(args)
        res = load_resources(cfg)
        if args.print_query:
            print(canonical_json(obj))
            return 0
        idx = index_mod.load(args.index or cfg.index)
        query = parse_query(res.grammar, res.model, res.tables, obj, cfg.range_ceiling)
        results, trace = search(idx, res.tables, query, cfg.snippet_context)
        if args.trace:
            print(f"[{', '.join(str(n) for n in trace)}]")
        print(canonical_json(results_to_dict(results, trace)))
        return 0

    if args.command == "serve":
        res = load_resources(cfg)
        idx = index_mod.load(args.index or cfg.index)
        if args.host:
            cfg.host = args.host
        if args.port:
            cfg.port = args.port
        if args.ui_dir:
            cfg.ui_dir = Path(args.ui_dir)
        serve_forever(AppState(resources=res, index=idx, config=cfg))
        return 0

    raise KasError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface: asset building, linking, evaluation,
benchmarking, uncertainty export, and serving."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .embedding import EmbeddingTrainConfig
from .pipeline import (
    BuildConfig,
    BuildStageError,
    bench,
    build_assets,
    evaluate,
    export_uncertain,
    link_passage,
    load_pages,
    open_bundle,
)
from .corpus import parse_gold
from .segmentation import SegmentationParams
from .server import prediction_to_dict, serve
from .store import DEFAULT_CAPACITIES, NAMESPACES, LruCacheConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisylink")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build-assets", help="run the offline asset pipeline")
    build.add_argument("--corpus", nargs="+", required=True, help="ingestion JSONL paths")
    build.add_argument("--phrases", required=True, help="labeled phrase TSV")
    build.add_argument("--gold", required=True, help="training gold JSONL")
    build.add_argument("--out", required=True, help="output bundle directory")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--config", help="JSON file of build config overrides")

    link = sub.add_parser("link", help="link text against a bundle")
    link.add_argument("--assets", required=True)
    group = link.add_mutually_exclusive_group(required=True)
    group.add_argument("--text")
    group.add_argument("--input", help="JSONL of {id, text} passages")
    link.add_argument("--format", choices=["json"], default="json")

    ev = sub.add_parser("evaluate", help="score predictions against gold")
    ev.add_argument("--assets", required=True)
    ev.add_argument("--gold", required=True)
    ev.add_argument("--mode", choices=["doc", "span"], default="doc")

    bn = sub.add_parser("bench", help="measure steady-state throughput")
    bn.add_argument("--assets", required=True)
    bn.add_argument("--corpus", required=True, help="JSONL of {id, text} documents")
    bn.add_argument("--no-trie", action="store_true")
    bn.add_argument("--threads", type=int, default=1)
    for ns in NAMESPACES:
        bn.add_argument(f"--cache-{ns}", type=int, default=None, metavar="N")

    ex = sub.add_parser("export-uncertain", help="dump lowest-margin predictions")
    ex.add_argument("--assets", required=True)
    ex.add_argument("--corpus", required=True)
    ex.add_argument("-k", type=int, required=True)

    sv = sub.add_parser("serve", help="start the HTTP endpoint")
    sv.add_argument("--assets", required=True)
    sv.add_argument("--port", type=int, required=True)
    return parser


def _load_build_config(args) -> BuildConfig:
    config = BuildConfig(seed=args.seed)
    if not args.config:
        return config
    with open(args.config, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    seg = overrides.pop("segmentation", None)
    emb = overrides.pop("embedding", None)
    if seg:
        config = replace(config, segmentation=SegmentationParams(**seg))
    if emb:
        emb.setdefault("seed", args.seed)
        config = replace(config, embedding=EmbeddingTrainConfig(**emb))
    config = replace(config, **overrides)
    if config.embedding.seed != args.seed and emb is None:
        config = replace(
            config, embedding=replace(config.embedding, seed=args.seed)
        )
    return config


def _read_passages(path: str) -> list[tuple[str, str]]:
    return [(str(p.get("id", i)), p["text"]) for i, p in enumerate(load_pages([path]))]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except BuildStageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "build-assets":
        config = _load_build_config(args)
        if config.embedding.seed != args.seed:
            config = replace(
                config, embedding=replace(config.embedding, seed=args.seed)
            )
        bundle = build_assets(args.corpus, args.phrases, args.gold, args.out, config)
        print(f"bundle written to {bundle.directory}")
        return 0

    if args.command == "link":
        bundle = open_bundle(args.assets)
        if args.text is not None:
            passages = [("text", args.text)]
        else:
            passages = _read_passages(args.input)
        for passage_id, text in passages:
            links = [prediction_to_dict(p) for p in link_passage(text, bundle)]
            print(json.dumps({"id": passage_id, "links": links}))
        return 0

    if args.command == "evaluate":
        bundle = open_bundle(args.assets)
        gold = parse_gold(args.gold)
        predictions = {
            passage.id: link_passage(passage.text, bundle) for passage, _ in gold
        }
        report = evaluate(predictions, gold, mode=args.mode)
        print(
            json.dumps(
                {
                    "mode": report.mode,
                    "precision": report.precision,
                    "recall": report.recall,
                    "f1": report.f1,
                }
            )
        )
        return 0

    if args.command == "bench":
        capacities = dict(DEFAULT_CAPACITIES)
        for ns in NAMESPACES:
            override = getattr(args, f"cache_{ns}")
            if override is not None:
                capacities[ns] = override
        bundle = open_bundle(
            args.assets,
            cache_config=LruCacheConfig(capacities=capacities),
            use_trie=not args.no_trie,
        )
        texts = [text for _, text in _read_passages(args.corpus)]
        report = bench(texts, bundle, threads=args.threads)
        print(
            json.dumps(
                {
                    "docs_per_sec": report.docs_per_sec,
                    "docs": report.docs_processed,
                    "cache_hit_rates": report.cache_hit_rates,
                    "trie_avoided": report.trie_avoided,
                    "trie_avoided_pct": report.trie_avoided_pct,
                    "peak_cache_entries": report.peak_cache_entries,
                    "threads": report.threads,
                }
            )
        )
        return 0

    if args.command == "export-uncertain":
        bundle = open_bundle(args.assets)
        passages = _read_passages(args.corpus)
        for record in export_uncertain(bundle, passages, args.k):
            record = dict(record)
            if record["margin"] == float("inf"):
                record["margin"] = None
            print(json.dumps(record))
        return 0

    if args.command == "serve":
        bundle = open_bundle(args.assets)
        print(f"serving on port {args.port}", file=sys.stderr)
        serve(bundle, args.port)
        return 0

    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

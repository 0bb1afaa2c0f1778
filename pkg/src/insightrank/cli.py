"""Command-line pipeline orchestrator.

Subcommands: synth, split, extract, label, train, rank, baseline, eval,
pipeline.  Exit codes: 0 success, 1 usage error, 2 data error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

from .config import PipelineConfig
from .errors import ConfigError, DataError, InsightRankError
from .insights import load_insights, save_insights
from .metrics import evaluate_corpus, format_report, save_report
from .model import Ranker, Vocabulary, load_model, save_model, train
from .pipeline import (
    METHODS,
    extract_corpus,
    group_by_table,
    label_corpus,
    load_dataset,
    rank_with_method,
    rankings_to_pairs,
    run_pipeline,
    save_rankings,
    split_ids,
)
from .synth import generate_dataset
from .textsim import load_labeled, save_labeled

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        overrides = {
            name: {"seed": args.seed}
            for name in ("synth", "model", "split", "cluster")
        }
        config = config.override(**overrides)
    return config


def _cmd_synth(args) -> int:
    config = _load_config(args)
    ids = generate_dataset(config.synth, args.dataset)
    print(f"wrote {len(ids)} tables to {args.dataset}")
    return EXIT_OK


def _cmd_split(args) -> int:
    config = _load_config(args)
    tables, _ = load_dataset(args.dataset)
    manifest = split_ids(list(tables), config.split.ratios, config.split.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    sizes = {k: len(v) for k, v in manifest.items()}
    print(f"wrote {args.out}: {sizes}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    config = _load_config(args)
    tables, _ = load_dataset(args.dataset)
    per_table = extract_corpus(tables, config.extract)
    insights = [ins for group in per_table.values() for ins in group]
    save_insights(insights, args.out)
    print(f"wrote {len(insights)} insights to {args.out}")
    return EXIT_OK


def _cmd_label(args) -> int:
    config = _load_config(args)
    tables, docs = load_dataset(args.dataset)
    per_table = group_insights(load_insights(args.insights))
    labeled = label_corpus(per_table, tables, docs, config.text)
    flat = [lab for group in labeled.values() for lab in group]
    save_labeled(flat, args.out)
    print(f"wrote {len(flat)} labeled insights to {args.out}")
    return EXIT_OK


def group_insights(insights):
    out = {}
    for ins in insights:
        out.setdefault(ins.table_id, []).append(ins)
    return out


def _load_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_train(args) -> int:
    config = _load_config(args)
    labeled = group_by_table(load_labeled(args.labels))
    manifest = _load_manifest(args.split)

    def tables_for(split):
        return [labeled[tid] for tid in manifest[split] if labeled.get(tid)]

    train_split = tables_for("train")
    vocab = Vocabulary.from_insights(
        lab.insight for group in train_split for lab in group
    )
    params, log = train(train_split, tables_for("valid"), vocab, config.model)
    save_model(args.out, params, vocab, config.model)
    with open(os.path.join(args.out, "training_log.json"), "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=1, sort_keys=True)
    print(
        f"trained {config.model.variant} model: best val NDCG@{config.model.val_k} "
        f"= {log['best_val_ndcg']:.4f} (epoch {log['best_epoch']})"
    )
    return EXIT_OK


def _select_split(per_table, args):
    if args.split:
        manifest = _load_manifest(args.split)
        wanted = set(manifest[args.subset])
        per_table = {tid: v for tid, v in per_table.items() if tid in wanted}
    return per_table


def _cmd_rank(args) -> int:
    config = _load_config(args)
    per_table = _select_split(group_insights(load_insights(args.insights)), args)
    ranker = None
    if args.method == "tar":
        if not args.model:
            raise DataError("--model is required for the tar method")
        params, vocab, model_config = load_model(args.model)
        ranker = Ranker(params, vocab, model_config)
    rankings = rank_with_method(
        args.method,
        per_table,
        ranker=ranker,
        cluster_k=args.k or config.cluster.k,
        cluster_seed=config.cluster.seed,
    )
    save_rankings(rankings, args.method, args.out)
    print(f"wrote rankings for {len(rankings)} tables to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _load_config(args)
    labeled = group_by_table(load_labeled(args.labels))
    rankings = {}
    with open(args.rankings, encoding="utf-8") as fh:
        method = "unknown"
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            method = obj.get("method", method)
            rankings.setdefault(obj["table_id"], []).append(
                (obj["insight_id"], obj["score"], obj["rank"])
            )
    pairs = rankings_to_pairs(rankings, labeled)
    ks = [args.k] if args.k else config.eval.ks
    report = {method: evaluate_corpus(pairs, ks, config.eval.binary_relevance)}
    if args.out:
        save_report(report, args.out)
    print(format_report(report))
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = _load_config(args)
    manifest = _load_manifest(args.split) if args.split else None
    reports = run_pipeline(args.dataset, args.out, config, manifest=manifest)
    print(format_report(reports))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="insightrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False):
        p.add_argument("--config", help="pipeline config JSON file")
        p.add_argument("--seed", type=int, help="override stage seeds")
        if dataset:
            p.add_argument("--dataset", required=True, help="dataset root directory")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p, dataset=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("split", help="write a train/valid/test manifest")
    common(p, dataset=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("extract", help="extract candidate insights")
    common(p, dataset=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("label", help="attach weak-supervision gold scores")
    common(p, dataset=True)
    p.add_argument("--insights", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("train", help="train the neural ranker")
    common(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--split", required=True, help="split manifest JSON")
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(func=_cmd_train)

    for name in ("rank", "baseline"):
        p = sub.add_parser(
            name,
            help="rank insights with the model" if name == "rank" else "rank with a significance baseline",
        )
        common(p)
        p.add_argument("--insights", required=True)
        p.add_argument(
            "--method",
            choices=METHODS,
            default="tar" if name == "rank" else "sig_cluster",
        )
        p.add_argument("--model", help="trained model directory (tar method)")
        p.add_argument("--split", help="split manifest JSON")
        p.add_argument("--subset", default="test", choices=("train", "valid", "test"))
        p.add_argument("--k", type=int, help="cluster count for sig_cluster")
        p.add_argument("--out", required=True)
        p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("eval", help="score a rankings file against labels")
    common(p)
    p.add_argument("--rankings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, help="evaluate a single cutoff")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pipeline", help="run extract/label/train/rank/eval end to end")
    common(p, dataset=True)
    p.add_argument("--split", help="existing split manifest JSON")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (DataError, ConfigError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InsightRankError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

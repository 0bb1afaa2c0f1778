"""Stage runners tying the modules into the end-to-end pipeline."""

from __future__ import annotations

import json
import os

import numpy as np

from . import baselines as bl
from .config import PipelineConfig
from .errors import DataError
from .insights import Insight, extract_all, save_insights
from .metrics import RankingPair, evaluate_corpus, save_report
from .model import Ranker, Vocabulary, save_model, train
from .tables import DocumentText, Table, load_document, load_table
from .textsim import (
    LabeledInsight,
    keywords_for_table,
    label_insights,
    preprocess,
    save_labeled,
)

__all__ = [
    "load_dataset",
    "split_ids",
    "extract_corpus",
    "label_corpus",
    "group_by_table",
    "rank_with_method",
    "rankings_to_pairs",
    "run_pipeline",
]

METHODS = ("tar", "sig_table", "sig_dataset", "sig_cluster")


def load_dataset(root) -> tuple[dict[str, Table], dict[str, DocumentText]]:
    """Read tables/ and texts/ under the dataset root, matched by id."""
    tables_dir = os.path.join(root, "tables")
    texts_dir = os.path.join(root, "texts")
    if not os.path.isdir(tables_dir):
        raise DataError(f"dataset root {root} has no tables/ directory")
    tables = {}
    for name in sorted(os.listdir(tables_dir)):
        if name.endswith(".json"):
            table = load_table(os.path.join(tables_dir, name))
            tables[table.id] = table
    docs = {}
    if os.path.isdir(texts_dir):
        for name in sorted(os.listdir(texts_dir)):
            if name.endswith(".json"):
                doc = load_document(os.path.join(texts_dir, name))
                if doc.table_id not in tables:
                    raise DataError(f"text {name} references unknown table {doc.table_id}")
                docs[doc.table_id] = doc
    return tables, docs


def split_ids(ids: list[str], ratios, seed: int) -> dict[str, list[str]]:
    """Seeded table-level split into train/valid/test; disjoint, exhaustive."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    ids = sorted(ids)
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n = len(ids)
    n_train = int(round(ratios[0] * n))
    n_valid = int(round(ratios[1] * n))
    return {
        "train": sorted(order[:n_train]),
        "valid": sorted(order[n_train : n_train + n_valid]),
        "test": sorted(order[n_train + n_valid :]),
    }


def extract_corpus(tables: dict[str, Table], config) -> dict[str, list[Insight]]:
    return {tid: extract_all(table, config) for tid, table in sorted(tables.items())}


def label_corpus(
    per_table: dict[str, list[Insight]],
    tables: dict[str, Table],
    docs: dict[str, DocumentText],
    text_config,
) -> dict[str, list[LabeledInsight]]:
    out = {}
    for tid, insights in sorted(per_table.items()):
        if not insights:
            out[tid] = []
            continue
        doc = docs.get(tid)
        sentences = []
        if doc is not None:
            keywords = keywords_for_table(tables[tid], text_config)
            sentences = preprocess(doc, text_config, keywords)
        out[tid] = label_insights(insights, sentences, config=text_config)
    return out


def group_by_table(labeled: list[LabeledInsight]) -> dict[str, list[LabeledInsight]]:
    out: dict[str, list[LabeledInsight]] = {}
    for lab in labeled:
        out.setdefault(lab.insight.table_id, []).append(lab)
    return out


def rank_with_method(
    method: str,
    per_table: dict[str, list[Insight]],
    ranker: Ranker | None = None,
    cluster_k: int = 7,
    cluster_seed: int = 0,
) -> dict[str, list[tuple[str, float, int]]]:
    """Per-table (insight id, score, rank) lists for one ranking method."""
    per_table = {tid: ins for tid, ins in per_table.items() if ins}
    if method == "tar":
        if ranker is None:
            raise DataError("tar ranking requires a trained model")
        return {
            tid: ranker.predict_ranking(ins) for tid, ins in sorted(per_table.items())
        }
    if method == "sig_table":
        return {tid: bl.rank_sig_table(ins) for tid, ins in sorted(per_table.items())}
    if method == "sig_dataset":
        return bl.rank_sig_dataset(per_table)
    if method == "sig_cluster":
        return bl.rank_sig_cluster(per_table, k=cluster_k, seed=cluster_seed)
    raise DataError(f"unknown ranking method {method!r}")


def rankings_to_pairs(
    rankings: dict[str, list[tuple[str, float, int]]],
    labeled: dict[str, list[LabeledInsight]],
) -> list[RankingPair]:
    pairs = []
    for tid in sorted(rankings):
        ranked = sorted(rankings[tid], key=lambda t: t[2])
        gold = {lab.insight.id: lab.gold_score for lab in labeled[tid]}
        pairs.append(
            RankingPair(
                table_id=tid,
                predicted=tuple(i for i, _, _ in ranked),
                gold_scores=gold,
            )
        )
    return pairs


def save_rankings(rankings, method: str, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tid in sorted(rankings):
            for ins_id, score, rank in sorted(rankings[tid], key=lambda t: t[2]):
                fh.write(
                    json.dumps(
                        {
                            "table_id": tid,
                            "insight_id": ins_id,
                            "score": score,
                            "rank": rank,
                            "method": method,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


def run_pipeline(dataset_root, out_dir, config: PipelineConfig, manifest=None) -> dict:
    """extract -> label -> train -> rank (tar + baselines) -> evaluate.

    Writes every stage artifact under ``out_dir`` and returns the metric
    reports keyed by method.
    """
    os.makedirs(out_dir, exist_ok=True)
    tables, docs = load_dataset(dataset_root)
    if manifest is None:
        manifest = split_ids(list(tables), config.split.ratios, config.split.seed)
        with open(os.path.join(out_dir, "splits.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)

    per_table = extract_corpus(tables, config.extract)
    all_insights = [ins for group in per_table.values() for ins in group]
    save_insights(all_insights, os.path.join(out_dir, "insights.jsonl"))

    labeled = label_corpus(per_table, tables, docs, config.text)
    save_labeled(
        [lab for group in labeled.values() for lab in group],
        os.path.join(out_dir, "labels.jsonl"),
    )

    def split_tables(split: str) -> list[list[LabeledInsight]]:
        return [labeled[tid] for tid in manifest[split] if labeled.get(tid)]

    train_insights = [
        lab.insight for tid in manifest["train"] for lab in labeled.get(tid, [])
    ]
    vocab = Vocabulary.from_insights(train_insights)
    params, log = train(
        split_tables("train"), split_tables("valid"), vocab, config.model
    )
    model_dir = os.path.join(out_dir, "model")
    save_model(model_dir, params, vocab, config.model)
    with open(os.path.join(out_dir, "training_log.json"), "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=1, sort_keys=True)

    ranker = Ranker(params, vocab, config.model)
    test_insights = {
        tid: [lab.insight for lab in labeled[tid]]
        for tid in manifest["test"]
        if labeled.get(tid)
    }
    test_labeled = {tid: labeled[tid] for tid in test_insights}

    reports = {}
    for method in METHODS:
        rankings = rank_with_method(
            method,
            test_insights,
            ranker=ranker,
            cluster_k=config.cluster.k,
            cluster_seed=config.cluster.seed,
        )
        save_rankings(
            rankings, method, os.path.join(out_dir, f"rankings_{method}.jsonl")
        )
        pairs = rankings_to_pairs(rankings, test_labeled)
        reports[method] = evaluate_corpus(
            pairs, config.eval.ks, config.eval.binary_relevance
        )
    save_report(reports, os.path.join(out_dir, "metrics.json"))
    return reports

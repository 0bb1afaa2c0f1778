"""Ranking quality metrics: Precision@k, mAP@k, NDCG@k, corpus aggregation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import DataError

__all__ = [
    "RankingPair",
    "precision_at_k",
    "map_at_k",
    "ndcg_at_k",
    "evaluate_corpus",
    "format_report",
    "save_report",
]

METRIC_NAMES = ("precision", "map", "ndcg")


@dataclass(frozen=True)
class RankingPair:
    table_id: str
    predicted: tuple[str, ...]
    gold_scores: dict[str, float]

    def __post_init__(self):
        if set(self.predicted) != set(self.gold_scores) or len(self.predicted) != len(
            self.gold_scores
        ):
            raise DataError(
                f"{self.table_id}: prediction must be a permutation of the gold ids"
            )

    @property
    def size(self) -> int:
        return len(self.predicted)

    def gold_order(self) -> list[str]:
        return sorted(self.gold_scores, key=lambda i: (-self.gold_scores[i], i))


def _check_k(pair: RankingPair, k: int):
    if not 1 <= k <= pair.size:
        raise DataError(f"{pair.table_id}: k={k} out of range 1..{pair.size}")


def _relevant_set(pair: RankingPair, k: int, binary_relevance: bool) -> set[str]:
    if binary_relevance:
        return {i for i, g in pair.gold_scores.items() if g > 0}
    return set(pair.gold_order()[:k])


def precision_at_k(pair: RankingPair, k: int, binary_relevance: bool = False) -> float:
    """|top-k predictions ∩ relevant| / k.

    The relevant set defaults to the gold top-k (ties broken by id); with
    ``binary_relevance`` it is the set of ids with positive gold score.
    """
    _check_k(pair, k)
    relevant = _relevant_set(pair, k, binary_relevance)
    return len(set(pair.predicted[:k]) & relevant) / k


def map_at_k(pair: RankingPair, k: int, binary_relevance: bool = False) -> float:
    """Average precision over the top-k predictions against the relevant set."""
    _check_k(pair, k)
    relevant = _relevant_set(pair, k, binary_relevance)
    if not relevant:
        return 0.0
    hits = 0
    total = 0.0
    for i, pred in enumerate(pair.predicted[:k], 1):
        if pred in relevant:
            hits += 1
            total += hits / i
    return total / min(k, len(relevant))


def ndcg_at_k(pair: RankingPair, k: int) -> float:
    """Exponential-gain DCG over the top-k, normalized by the ideal DCG.

    Defined as 1.0 when every gold score is zero.
    """
    _check_k(pair, k)

    def dcg(ids):
        return sum(
            (2.0 ** pair.gold_scores[x] - 1.0) / math.log2(i + 1)
            for i, x in enumerate(ids, 1)
        )

    ideal = dcg(pair.gold_order()[:k])
    if ideal == 0.0:
        return 1.0
    return dcg(pair.predicted[:k]) / ideal


def evaluate_corpus(
    pairs: list[RankingPair],
    ks=(1, 3, 5),
    binary_relevance: bool = False,
) -> dict:
    """Mean of each metric over tables for each k.

    Tables with fewer than k insights are skipped for that k; skip counts
    are reported alongside the means.
    """
    if not pairs:
        raise DataError("evaluate_corpus needs at least one ranking pair")
    report = {"n_tables": len(pairs), "ks": list(ks), "metrics": {}, "skipped": {}}
    for k in ks:
        usable = [p for p in pairs if p.size >= k]
        report["skipped"][str(k)] = len(pairs) - len(usable)
        entry = {}
        if usable:
            entry["precision"] = sum(
                precision_at_k(p, k, binary_relevance) for p in usable
            ) / len(usable)
            entry["map"] = sum(map_at_k(p, k, binary_relevance) for p in usable) / len(
                usable
            )
            entry["ndcg"] = sum(ndcg_at_k(p, k) for p in usable) / len(usable)
        else:
            entry = {name: float("nan") for name in METRIC_NAMES}
        report["metrics"][str(k)] = entry
    return report


def format_report(reports: dict[str, dict], ks=None) -> str:
    """Aligned console table: one row per method, one column per metric@k."""
    if not reports:
        return "(no results)"
    first = next(iter(reports.values()))
    if ks is None:
        ks = first["ks"]
    headers = ["method"]
    for name in METRIC_NAMES:
        headers.extend(f"{name}@{k}" for k in ks)
    rows = [headers]
    for method, rep in reports.items():
        row = [method]
        for name in METRIC_NAMES:
            for k in ks:
                value = rep["metrics"][str(k)][name]
                row.append(f"{value:.4f}" if value == value else "-")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def save_report(reports: dict[str, dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(reports, fh, indent=1, sort_keys=True)
        fh.write("\n")

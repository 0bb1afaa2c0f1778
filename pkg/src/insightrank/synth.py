"""Synthetic corpus generator: planted-trend tables plus description texts.

Stands in for non-redistributable report corpora.  Each table gets a grid of
item series with planted monotone trends (and occasional outliers); the
companion text verbalizes the templates of the rows a planted importance
function selects.  Importance depends on the item identity (a fixed
per-item weight) and on table context: a row trending against the table's
majority direction gets a bonus, so context-aware models have something to
learn that per-insight features cannot capture.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tables import Cell, Table, save_document, save_table

__all__ = ["SynthConfig", "build_item_pool", "generate_table", "generate_dataset"]

_ADJECTIVES = (
    "gross",
    "total",
    "operating",
    "deferred",
    "adjusted",
    "recurring",
    "combined",
    "domestic",
    "foreign",
    "allocated",
)
_NOUNS = (
    "revenue",
    "income",
    "expenses",
    "liabilities",
    "assets",
    "receivables",
    "inventory",
    "equity",
    "amortization",
    "payroll",
)

_DISTRACTORS = (
    "Management discussed broader market conditions affecting 12.5 million customers during the period.",
    "The board of directors met four times and approved 3 new initiatives for the coming period.",
    "Headcount remained stable at 240 employees across the two principal office locations worldwide.",
)


@dataclass(frozen=True)
class SynthConfig:
    n_tables: int = 300
    n_items: int = 5
    n_years: int = 5
    start_year: int = 2014
    noise: float = 0.0
    seed: int = 0
    verbalize_top: int = 3
    item_pool_size: int = 24
    minority_prob: float = 0.3
    outlier_prob: float = 0.4
    minority_bonus: float = 1.0
    weight_range: tuple[float, float] = (0.0, 1.0)
    measure: str = "Sales"

    def __post_init__(self):
        if self.n_tables < 1 or self.n_items < 2 or self.n_years < 3:
            raise ConfigError("synth config: need >=1 tables, >=2 items, >=3 years")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("synth config: noise must be in [0,1]")
        if self.verbalize_top < 1 or self.verbalize_top > self.n_items:
            raise ConfigError("synth config: verbalize_top out of range")
        max_pool = len(_NOUNS) * len(_ADJECTIVES) * (len(_ADJECTIVES) - 1) // 2
        if not self.n_items <= self.item_pool_size <= max_pool:
            raise ConfigError("synth config: item_pool_size out of range")
        lo, hi = self.weight_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError("synth config: weight_range must satisfy 0 <= lo <= hi <= 1")


def build_item_pool(config: SynthConfig) -> list[tuple[str, float]]:
    """(item name, importance weight) pairs with minimal token sharing.

    The first five names use pairwise-disjoint adjective/noun triples; larger
    pools fall back to the remaining adjective combinations.
    """
    n_adj = len(_ADJECTIVES)
    names = []
    seen = set()
    for i in range(n_adj // 2):
        name = f"{_ADJECTIVES[2 * i]} {_ADJECTIVES[2 * i + 1]} {_NOUNS[i]}"
        names.append(name)
        seen.add(name)
    for a1, a2 in itertools.combinations(_ADJECTIVES, 2):
        if len(names) >= config.item_pool_size:
            break
        for noun in _NOUNS:
            name = f"{a1} {a2} {noun}"
            if name not in seen:
                names.append(name)
                seen.add(name)
                break
    names = names[: config.item_pool_size]
    rng = np.random.default_rng(config.seed)
    lo, hi = config.weight_range
    weights = rng.uniform(lo, hi, size=len(names))
    return list(zip(names, weights))


def _noisy_sentence(sentence: str, rng, noise: float) -> str:
    if noise <= 0 or rng.random() >= noise:
        return sentence
    choice = rng.integers(3)
    if choice == 0:
        sentence = sentence.replace("increasing", "growing").replace(
            "decreasing", "declining"
        )
    elif choice == 1:
        sentence = sentence[:-1] + " compared to the prior period."
    else:
        sentence = "Overall, " + sentence[0].lower() + sentence[1:]
    return sentence


def generate_table(
    table_id: str,
    pool: list[tuple[str, float]],
    config: SynthConfig,
    rng: np.random.Generator,
) -> tuple[Table, str]:
    """One table plus its description text."""
    years = [str(config.start_year + i) for i in range(config.n_years)]
    report_year = years[-1]
    item_idx = rng.choice(len(pool), size=config.n_items, replace=False)
    items = [pool[i] for i in item_idx]
    majority_up = bool(rng.random() < 0.5)

    rows = []
    for name, weight in items:
        minority = bool(rng.random() < config.minority_prob)
        upward = majority_up != minority
        growth = rng.uniform(0.08, 0.25) * (1.0 if upward else -1.0)
        base = 10.0 ** rng.uniform(1.0, 3.0)
        values = [
            base * (1.0 + growth) ** t * (1.0 + rng.normal(0.0, 0.02))
            for t in range(config.n_years)
        ]
        importance = 2.0 * weight
        if minority:
            importance += config.minority_bonus
        importance += 0.05 * rng.normal()
        rows.append(
            {
                "name": name,
                "upward": upward,
                "minority": minority,
                "importance": importance,
                "values": [round(max(v, 0.01), 2) for v in values],
            }
        )

    chosen = set(
        r["name"] for r in sorted(rows, key=lambda r: -r["importance"])[: config.verbalize_top]
    )
    # Outliers go to non-verbalized rows only, so the verbalized trends stay
    # clean; and never in the two report years, so point descriptions cannot
    # collide with year substitution.
    spare = [r for r in rows if r["name"] not in chosen]
    if spare and config.n_years >= 5 and rng.random() < config.outlier_prob:
        row = spare[int(rng.integers(len(spare)))]
        t = int(rng.integers(1, config.n_years - 2))
        row["values"][t] = round(row["values"][t] * rng.uniform(3.0, 5.0), 2)

    cells = []
    for row in rows:
        for year, value in zip(years, row["values"]):
            cells.append(Cell(dims=(row["name"], year), value=value))
    table = Table(
        id=table_id,
        dim_names=("Item", "Year"),
        cells=tuple(cells),
        meta={"measure": config.measure, "report_year": report_year},
    )

    sentences = [
        f"{config.measure} of {row['name']} is "
        f"{'increasing' if row['upward'] else 'decreasing'} year over year."
        for row in rows
        if row["name"] in chosen
    ]
    sentences = [_noisy_sentence(s, rng, config.noise) for s in sentences]
    sentences.extend(
        _DISTRACTORS[int(i)] for i in rng.choice(len(_DISTRACTORS), size=2, replace=False)
    )
    order = rng.permutation(len(sentences))
    text = " ".join(sentences[i] for i in order)
    return table, text


def generate_dataset(config: SynthConfig, out_dir) -> list[str]:
    """Write tables/ and texts/ under ``out_dir``; returns the table ids."""
    tables_dir = os.path.join(out_dir, "tables")
    texts_dir = os.path.join(out_dir, "texts")
    os.makedirs(tables_dir, exist_ok=True)
    os.makedirs(texts_dir, exist_ok=True)
    pool = build_item_pool(config)
    rng = np.random.default_rng(config.seed + 1)
    ids = []
    for i in range(config.n_tables):
        table_id = f"synth-{i:04d}"
        table, text = generate_table(table_id, pool, config, rng)
        save_table(table, os.path.join(tables_dir, f"{table_id}.json"))
        save_document(
            table_id,
            text,
            {"report_year": table.meta["report_year"]},
            os.path.join(texts_dir, f"{table_id}.json"),
        )
        ids.append(table_id)
    return ids

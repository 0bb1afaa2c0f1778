"""Description-text preprocessing and weak-supervision similarity labels.

The gold importance score of an insight is the maximum similarity between
its template description and the sentences of the companion document, using
a 50/50 blend of sentence-overlap and header-overlap similarity.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import DataError, ParseError
from .insights import Insight, insight_from_dict, insight_to_dict
from .tables import DocumentText, Table

__all__ = [
    "TextConfig",
    "TokenizedSentence",
    "LabeledInsight",
    "tokenize",
    "preprocess",
    "sim_sentence",
    "sim_header",
    "sim_combined",
    "header_tokens",
    "keywords_for_table",
    "label_insights",
    "save_labeled",
    "load_labeled",
]

# Word tokens, keeping decimal numbers like 71.7 whole.
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:\.[0-9]+)*")

DEFAULT_KEYWORDS = (
    "increase",
    "increased",
    "increasing",
    "decrease",
    "decreased",
    "decreasing",
    "million",
    "billion",
    "outstanding",
    "revenue",
    "income",
    "expenses",
)


@dataclass(frozen=True)
class TextConfig:
    min_chars: int = 50
    min_tokens: int = 10
    extra_keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    sim_weight_sentence: float = 0.5
    sim_weight_header: float = 0.5


@dataclass(frozen=True)
class TokenizedSentence:
    raw: str
    tokens: tuple[str, ...]
    has_number: bool


@dataclass(frozen=True)
class LabeledInsight:
    insight: Insight
    gold_score: float
    best_sentence_index: int | None
    gold_rank: int

    def __post_init__(self):
        if not 0.0 <= self.gold_score <= 1.0:
            raise DataError(f"{self.insight.id}: gold score out of [0,1]")
        if self.gold_rank < 1:
            raise DataError(f"{self.insight.id}: gold rank must be >= 1")


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(_TOKEN_RE.findall(text.lower()))


def keywords_for_table(table: Table, config: TextConfig = TextConfig()) -> frozenset[str]:
    """Union of the table's header tokens and the configured keyword list."""
    words = set(config.extra_keywords)
    for cell in table.cells:
        for label in cell.dims:
            words.update(tokenize(label))
    for name in table.dim_names:
        words.update(tokenize(name))
    words.update(tokenize(table.measure))
    return frozenset(words)


def _substitute_years(sentence: str, report_year: int | None) -> str:
    if report_year is None:
        return sentence
    sentence = re.sub(rf"\b{report_year}\b", "this year", sentence)
    sentence = re.sub(rf"\b{report_year - 1}\b", "last year", sentence)
    return sentence


def preprocess(
    doc: DocumentText,
    config: TextConfig = TextConfig(),
    keywords: frozenset[str] = frozenset(),
) -> list[TokenizedSentence]:
    """Filter and tokenize the document sentences.

    Drops sentences shorter than the character or token minimum and
    sentences containing neither a number nor a keyword; substitutes the
    report year with "this year" and the preceding year with "last year".
    """
    report_year = None
    raw_year = doc.meta.get("report_year")
    if raw_year is not None:
        try:
            report_year = int(raw_year)
        except ValueError:
            raise DataError(f"document {doc.table_id}: bad report_year {raw_year!r}")
    out = []
    for raw in doc.sentences:
        substituted = _substitute_years(raw, report_year)
        tokens = tokenize(substituted)
        if len(substituted) < config.min_chars or len(tokens) < config.min_tokens:
            continue
        has_number = any(any(ch.isdigit() for ch in tok) for tok in tokens)
        if not has_number and not any(tok in keywords for tok in tokens):
            continue
        out.append(TokenizedSentence(raw=raw, tokens=tokens, has_number=has_number))
    return out


def sim_sentence(d_tokens, s_tokens) -> float:
    """Count^2 / (|d| * |s|), Count = distinct shared word types."""
    if not d_tokens or not s_tokens:
        raise DataError("sim_sentence requires non-empty token lists")
    count = len(set(d_tokens) & set(s_tokens))
    return count * count / (len(d_tokens) * len(s_tokens))


def sim_header(h_tokens, s_tokens, all_headers) -> float:
    """(Count/|h|) * (Count / max_k Count(h_k, s)); 0 when no header matches."""
    if not h_tokens:
        raise DataError("sim_header requires a non-empty header")
    s_set = set(s_tokens)
    count = len(set(h_tokens) & s_set)
    max_count = max((len(set(h) & s_set) for h in all_headers), default=0)
    if max_count == 0:
        return 0.0
    return (count / len(h_tokens)) * (count / max_count)


def sim_combined(
    d_tokens,
    h_tokens,
    s_tokens,
    all_headers,
    w_sentence: float = 0.5,
    w_header: float = 0.5,
) -> float:
    return w_sentence * sim_sentence(d_tokens, s_tokens) + w_header * sim_header(
        h_tokens, s_tokens, all_headers
    )


def header_tokens(insight: Insight) -> tuple[str, ...]:
    """Header word tokens of an insight: the fixed labels of its subspace."""
    return tokenize(insight.subspace.fixed_label_text)


def label_insights(
    insights: list[Insight],
    sentences: list[TokenizedSentence],
    headers: list[tuple[str, ...]] | None = None,
    config: TextConfig = TextConfig(),
) -> list[LabeledInsight]:
    """Gold score = max combined similarity over sentences; ranks per table.

    Ties in the gold score break by ascending insight id.  With no surviving
    sentences every gold score is 0 and ranks follow id order.
    """
    if headers is None:
        headers = [header_tokens(ins) for ins in insights]
    if len(headers) != len(insights):
        raise DataError("one header token list per insight required")
    scored = []
    for ins, h_tokens in zip(insights, headers):
        d_tokens = tokenize(ins.description)
        best_score = 0.0
        best_index = None
        for j, sent in enumerate(sentences):
            score = sim_combined(
                d_tokens,
                h_tokens,
                sent.tokens,
                headers,
                config.sim_weight_sentence,
                config.sim_weight_header,
            )
            if score > best_score:
                best_score = score
                best_index = j
        scored.append((ins, best_score, best_index))
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], scored[i][0].id))
    ranks = [0] * len(scored)
    for rank, i in enumerate(order, 1):
        ranks[i] = rank
    return [
        LabeledInsight(insight=ins, gold_score=score, best_sentence_index=idx, gold_rank=ranks[i])
        for i, (ins, score, idx) in enumerate(scored)
    ]


def save_labeled(labeled: list[LabeledInsight], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in labeled:
            obj = insight_to_dict(lab.insight)
            obj["gold_score"] = lab.gold_score
            obj["gold_rank"] = lab.gold_rank
            if lab.best_sentence_index is not None:
                obj["best_sentence_index"] = lab.best_sentence_index
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_labeled(path) -> list[LabeledInsight]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(
                    LabeledInsight(
                        insight=insight_from_dict(obj),
                        gold_score=float(obj["gold_score"]),
                        best_sentence_index=obj.get("best_sentence_index"),
                        gold_rank=int(obj["gold_rank"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from exc
    return out

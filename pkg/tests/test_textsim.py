import itertools

import numpy as np
import pytest

from insightrank.errors import DataError
from insightrank.insights import extract_all
from insightrank.tables import DocumentText, split_sentences
from insightrank.textsim import (
    TextConfig,
    TokenizedSentence,
    header_tokens,
    keywords_for_table,
    label_insights,
    load_labeled,
    preprocess,
    save_labeled,
    sim_combined,
    sim_header,
    sim_sentence,
    tokenize,
)

LONG_PAD = "and overall results were broadly consistent with plan"


def make_doc(text, report_year=None, table_id="t"):
    meta = {} if report_year is None else {"report_year": report_year}
    return DocumentText(
        table_id=table_id, sentences=tuple(split_sentences(text)), meta=meta
    )


class TestTokenize:
    def test_lowercase_and_decimals(self):
        assert tokenize("Revenue was 71.7 million.") == (
            "revenue",
            "was",
            "71.7",
            "million",
        )

    def test_punctuation_split(self):
        assert tokenize("year-over-year growth") == ("year", "over", "year", "growth")


class TestPreprocess:
    def test_year_substitution_and_decimal(self):
        doc = make_doc(
            "Revenue was 71.7 million for the year ended 2017.", report_year=2017
        )
        out = preprocess(doc)
        assert len(out) == 1
        assert "this" in out[0].tokens and "year" in out[0].tokens
        assert "71.7" in out[0].tokens
        assert "2017" not in out[0].tokens
        assert out[0].has_number

    def test_last_year_substitution(self):
        doc = make_doc(
            f"Revenue declined sharply in 2016 {LONG_PAD} this period.",
            report_year=2017,
        )
        out = preprocess(doc, keywords=frozenset({"revenue"}))
        assert len(out) == 1
        assert "last" in out[0].tokens
        assert "2016" not in out[0].tokens

    def test_short_sentence_dropped(self):
        # 9 tokens and under 50 characters: both filters trip
        doc = make_doc("Revenue up by 2 and costs down by 3.")
        assert preprocess(doc) == []

    def test_no_number_no_keyword_dropped(self):
        doc = make_doc(
            f"The weather stayed pleasant throughout the quarter {LONG_PAD}."
        )
        assert preprocess(doc) == []

    def test_keyword_rescues_numberless_sentence(self):
        doc = make_doc(
            f"The weather stayed pleasant throughout the quarter {LONG_PAD}."
        )
        out = preprocess(doc, keywords=frozenset({"quarter"}))
        assert len(out) == 1
        assert not out[0].has_number

    def test_bad_report_year_raises(self):
        doc = make_doc("Revenue was 71.7 million for the year ended 2017.", "soon")
        with pytest.raises(DataError, match="report_year"):
            preprocess(doc)


class TestKeywords:
    def test_union_of_headers_and_defaults(self, car_sales_table):
        words = keywords_for_table(car_sales_table)
        assert {"a", "b", "c", "2015", "brand", "year", "sales"} <= words
        assert "increasing" in words  # from the default keyword list


class TestSimSentence:
    def test_identity(self):
        toks = ("alpha", "beta", "gamma", "delta", "epsilon")
        assert sim_sentence(toks, toks) == 1.0

    def test_disjoint(self):
        assert sim_sentence(("a", "b"), ("c", "d")) == 0.0

    def test_worked_example(self):
        d = ("revenue", "increased", "this", "year")
        s = ("total", "revenue", "increased", "significantly", "this", "year")
        assert sim_sentence(d, s) == pytest.approx(16 / 24, abs=1e-15)

    def test_repeated_tokens_count_once(self):
        # Count uses distinct types, lengths include repeats.
        assert sim_sentence(("a", "a", "b"), ("a", "b")) == pytest.approx(4 / 6)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        vocab = [f"w{i}" for i in range(8)]
        for _ in range(100):
            x = tuple(rng.choice(vocab, size=rng.integers(1, 7)))
            y = tuple(rng.choice(vocab, size=rng.integers(1, 7)))
            assert sim_sentence(x, y) == sim_sentence(y, x)
            assert 0.0 <= sim_sentence(x, y) <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            sim_sentence((), ("a",))


class TestSimHeader:
    def test_full_containment_max(self):
        h = ("operating", "income")
        s = ("operating", "income", "rose", "sharply")
        assert sim_header(h, s, [h, ("payroll",)]) == 1.0

    def test_no_overlap_zero(self):
        assert sim_header(("a",), ("x", "y"), [("a",), ("b",)]) == 0.0

    def test_worked_example(self):
        # Count(h,s)=1, |h|=2, max over headers = 2 -> 0.5 * 0.5 = 0.25
        h = ("operating", "income")
        rival = ("net", "income", "x")
        s = ("net", "income", "grew")
        assert sim_header(h, s, [h, rival]) == pytest.approx(0.25, abs=1e-15)

    def test_bounds_fuzz(self):
        rng = np.random.default_rng(4)
        vocab = [f"w{i}" for i in range(6)]
        for _ in range(100):
            headers = [
                tuple(rng.choice(vocab, size=rng.integers(1, 4)))
                for _ in range(rng.integers(1, 4))
            ]
            s = tuple(rng.choice(vocab, size=rng.integers(1, 8)))
            for h in headers:
                assert 0.0 <= sim_header(h, s, headers) <= 1.0


class TestSimCombined:
    def test_both_maximal(self):
        d = ("alpha", "beta", "gamma")
        h = ("alpha",)
        s = ("alpha", "beta", "gamma")
        assert sim_combined(d, h, s, [h]) == 1.0

    def test_worked_example(self):
        # 0.5 * 0.6667 + 0.5 * 0.25 = 0.4583...
        d = ("revenue", "increased", "this", "year")
        s = ("total", "revenue", "increased", "significantly", "this", "year")
        h = ("operating", "revenue")
        rival = ("total", "revenue", "x", "y")
        sim_s = sim_sentence(d, s)
        sim_h = sim_header(h, s, [h, rival])
        assert sim_s == pytest.approx(16 / 24)
        assert sim_h == pytest.approx(0.25)
        assert sim_combined(d, h, s, [h, rival]) == pytest.approx(
            0.5 * 16 / 24 + 0.5 * 0.25, abs=1e-15
        )

    def test_degenerate_weights(self):
        d = ("a", "b")
        s = ("a", "c")
        h = ("a",)
        assert sim_combined(d, h, s, [h], 1.0, 0.0) == sim_sentence(d, s)


class TestLabelInsights:
    def _sentence(self, *tokens):
        return TokenizedSentence(raw=" ".join(tokens), tokens=tokens, has_number=False)

    def test_exact_description_scores_one(self, car_sales_table):
        insights = [i for i in extract_all(car_sales_table) if "increasing" in i.description]
        ins = insights[0]
        d = tokenize(ins.description)
        labeled = label_insights([ins], [self._sentence(*d)])
        # repeated "year" token caps Sim_s below 1 for this template
        assert labeled[0].gold_score == pytest.approx(
            0.5 * sim_sentence(d, d) + 0.5, abs=1e-15
        )
        assert labeled[0].gold_rank == 1
        assert labeled[0].best_sentence_index == 0

    def test_empty_sentences_all_zero(self, car_sales_table):
        insights = extract_all(car_sales_table)
        labeled = label_insights(insights, [])
        assert all(lab.gold_score == 0.0 for lab in labeled)
        assert [lab.gold_rank for lab in labeled] == list(
            range(1, len(insights) + 1)
        )

    def test_tie_break_by_id(self, car_sales_table):
        insights = extract_all(car_sales_table)[:2]
        labeled = label_insights(insights, [])
        assert labeled[0].gold_rank < labeled[1].gold_rank

    def test_brute_force_oracle(self, car_sales_table):
        insights = extract_all(car_sales_table)
        sentences = [
            self._sentence("sales", "of", "a", "is", "increasing", "year", "over", "year"),
            self._sentence("sales", "of", "b", "in", "2017", "is", "outstanding"),
        ]
        headers = [header_tokens(i) for i in insights]
        labeled = label_insights(insights, sentences, headers)
        for ins, h, lab in zip(insights, headers, labeled):
            d = tokenize(ins.description)
            expected = max(
                sim_combined(d, h, s.tokens, headers) for s in sentences
            )
            assert lab.gold_score == pytest.approx(expected, abs=1e-15)
        # ranks must be the argsort of (-score, id)
        order = sorted(labeled, key=lambda l: (-l.gold_score, l.insight.id))
        assert [l.gold_rank for l in order] == list(range(1, len(labeled) + 1))

    def test_roundtrip(self, car_sales_table, tmp_path):
        insights = extract_all(car_sales_table)
        labeled = label_insights(
            insights,
            [self._sentence("sales", "of", "a", "is", "increasing", "year", "over", "year")],
        )
        path = tmp_path / "labels.jsonl"
        save_labeled(labeled, path)
        assert load_labeled(path) == labeled

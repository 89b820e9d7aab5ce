import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cefr_onto.corpus import (
    CorpusItem,
    LabeledCorpus,
    agreement_score,
    build_matrix,
    load_corpus,
    save_corpus,
    stratified_split,
    stratified_split_indices,
)
from cefr_onto.exceptions import (
    ClassTooSmallError,
    CorpusParseError,
    DegenerateInputError,
    MissingSecondLabelError,
    UnknownLabelError,
)
from cefr_onto.levels import LEVELS, decode, encode, to_name, to_ordinal
from cefr_onto.textmetrics import FeatureCatalog


def test_levels():
    assert to_ordinal("b2") == 3
    assert to_name(5) == "C2"
    assert list(decode(encode(list(LEVELS)))) == list(LEVELS)
    with pytest.raises(UnknownLabelError):
        to_ordinal("D1")
    with pytest.raises(UnknownLabelError):
        to_name(6)


class TestLoading:
    def test_csv(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text('text,label,label2\n"Hello, there.",a1,A2\nBye.,C2,\n', encoding="utf-8")
        c = load_corpus(p)
        assert c.labels == ["A1", "C2"]
        assert c.items[0] == CorpusItem("Hello, there.", "A1", "A2")
        assert c.items[1].label2 is None
        assert c.source_id == "c.csv"

    def test_jsonl(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"text": "Hi.", "label": "B1"}\n\n{"text": "Yo.", "label": 2}\n', encoding="utf-8")
        assert load_corpus(p).labels == ["B1", "B1"]

    def test_unknown_label_names_line(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("text,label\nHi.,A1\nHo.,Z9\n", encoding="utf-8")
        with pytest.raises(UnknownLabelError, match="line 3"):
            load_corpus(p)

    def test_missing_column(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("body,label\nHi.,A1\n", encoding="utf-8")
        with pytest.raises(CorpusParseError, match="line 1"):
            load_corpus(p)

    def test_bad_json(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"text": "Hi.", "label": "A1"}\n{oops\n', encoding="utf-8")
        with pytest.raises(CorpusParseError, match="line 2"):
            load_corpus(p)

    def test_empty_text(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("text,label\n  ,A1\n", encoding="utf-8")
        with pytest.raises(CorpusParseError):
            load_corpus(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus(tmp_path / "nope.csv")

    @pytest.mark.parametrize("suffix", [".csv", ".jsonl"])
    def test_round_trip(self, tmp_path, suffix):
        c = LabeledCorpus((CorpusItem('Say "hi", ok?\nNew line.', "A2", "B1"), CorpusItem("Ünïcode.", "C1")))
        p = tmp_path / f"c{suffix}"
        save_corpus(c, p)
        assert load_corpus(p).items == c.items


def _labels(counts):
    return [LEVELS[k] for k, n in enumerate(counts) for _ in range(n)]


class TestSplit:
    def test_sizes_and_disjointness(self):
        labels = _labels([10, 10, 10, 10, 10, 10])
        tr, va = stratified_split_indices(labels, 0.8, seed=1)
        assert len(tr) == 48 and len(va) == 12
        assert set(tr).isdisjoint(va)
        assert sorted(np.concatenate([tr, va]).tolist()) == list(range(60))

    def test_deterministic(self):
        labels = _labels([7, 9, 3, 0, 4, 5])
        a = stratified_split_indices(labels, seed=42)
        b = stratified_split_indices(labels, seed=42)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_class_of_one(self):
        with pytest.raises(ClassTooSmallError, match="A2"):
            stratified_split_indices(_labels([5, 1]))

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            stratified_split_indices(_labels([5, 5]), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=6, max_size=6).filter(lambda c: all(n != 1 for n in c) and sum(c) > 0),
           st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
    def test_per_class_counts(self, counts, frac, seed):
        labels = _labels(counts)
        tr, va = stratified_split_indices(labels, frac, seed)
        y = np.array([to_ordinal(v) for v in labels])
        for k, n in enumerate(counts):
            if n == 0:
                continue
            expected = min(max(round(frac * n), 1), n - 1)
            assert int(np.sum(y[tr] == k)) == expected
            assert int(np.sum(y[va] == k)) == n - expected

    def test_corpus_split(self):
        c = LabeledCorpus(tuple(CorpusItem(f"t{i}.", LEVELS[i % 2]) for i in range(10)), "x")
        tr, va = stratified_split(c, 0.6, seed=0)
        assert len(tr) == 6 and len(va) == 4
        assert tr.source_id == "x:train"


class TestAgreement:
    def test_score(self):
        c = LabeledCorpus((CorpusItem("a", "A1", "A1"), CorpusItem("b", "B1", "B2"),
                           CorpusItem("c", "C1", "C1"), CorpusItem("d", "C2", "C2")))
        assert agreement_score(c) == 0.75

    def test_missing_second(self):
        c = LabeledCorpus((CorpusItem("a", "A1", "A1"), CorpusItem("b", "B1")))
        with pytest.raises(MissingSecondLabelError):
            agreement_score(c)


class TestBuildMatrix:
    def test_shape(self):
        c = LabeledCorpus((CorpusItem("The cat sat.", "A1"), CorpusItem("He said that she left.", "B1")))
        fm = build_matrix(c, FeatureCatalog.of("flesch_kincaid", "indirect_speech"))
        assert fm.shape == (2, 2)
        assert fm.y.tolist() == [0, 2]
        assert fm.X[:, 1].tolist() == [0.0, 1.0]

    def test_degenerate_row_is_named(self):
        c = LabeledCorpus((CorpusItem("The cat sat.", "A1"), CorpusItem("?!", "B1")))
        with pytest.raises(DegenerateInputError, match="row 1"):
            build_matrix(c)

    def test_parallel(self):
        c = LabeledCorpus(tuple(CorpusItem(f"Text number {i} is here.", "A1") for i in range(8)))
        assert np.array_equal(build_matrix(c).X, build_matrix(c, n_jobs=3).X)


def test_jsonl_written_is_plain_json(tmp_path):
    p = tmp_path / "c.jsonl"
    save_corpus(LabeledCorpus((CorpusItem("a.", "A1"),)), p)
    assert json.loads(p.read_text()) == {"text": "a.", "label": "A1"}

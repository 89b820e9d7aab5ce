"""Labeled corpora: loading, saving, stratified splitting, agreement and
feature-matrix construction."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    ClassTooSmallError,
    CorpusParseError,
    DegenerateInputError,
    MissingSecondLabelError,
    UnknownLabelError,
)
from .levels import LEVELS, N_LEVELS, to_name, to_ordinal
from .textmetrics import DEFAULT_CATALOG, FeatureCatalog, extract_features

FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class CorpusItem:
    text: str
    label: str
    label2: str | None = None


@dataclass(frozen=True)
class LabeledCorpus:
    items: tuple
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("a labeled corpus needs at least one item")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def texts(self) -> list:
        return [it.text for it in self.items]

    @property
    def labels(self) -> list:
        return [it.label for it in self.items]

    def subset(self, indices, suffix="") -> "LabeledCorpus":
        return LabeledCorpus(tuple(self.items[i] for i in indices), self.source_id + suffix)


def _make_item(text, label, label2, line) -> CorpusItem:
    if not isinstance(text, str) or not text.strip():
        raise CorpusParseError("empty or missing text", line)
    try:
        label = to_name(label)
        label2 = None if label2 in (None, "") else to_name(label2)
    except UnknownLabelError as exc:
        raise UnknownLabelError(f"line {line}: {exc}") from None
    return CorpusItem(text, label, label2)


def _read_csv(path: Path) -> list:
    items = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = {"text", "label"} - set(header)
        if missing:
            raise CorpusParseError(f"missing required column(s) {sorted(missing)}; header is {header}", 1)
        try:
            for row in reader:
                line = reader.line_num
                if None in row:
                    raise CorpusParseError("more fields than header columns", line)
                items.append(_make_item(row["text"], row["label"], row.get("label2"), line))
        except csv.Error as exc:
            raise CorpusParseError(str(exc), reader.line_num) from None
    return items


def _read_jsonl(path: Path) -> list:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                raise CorpusParseError("expected an object with keys 'text' and 'label'", line_no)
            items.append(_make_item(obj["text"], obj["label"], obj.get("label2"), line_no))
    return items


def load_corpus(path, format: str | None = None) -> LabeledCorpus:
    """Read a CSV (header with ``text``, ``label``, optional ``label2``) or
    JSONL corpus. ``format`` defaults to the file extension."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    items = _read_csv(path) if format == "csv" else _read_jsonl(path)
    if not items:
        raise CorpusParseError("corpus contains no items")
    return LabeledCorpus(tuple(items), source_id=path.name)


def save_corpus(corpus: LabeledCorpus, path, format: str | None = None):
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    with_second = any(it.label2 is not None for it in corpus)
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["text", "label", "label2"] if with_second else ["text", "label"])
            for it in corpus:
                row = [it.text, it.label]
                if with_second:
                    row.append(it.label2 or "")
                writer.writerow(row)
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for it in corpus:
                obj = {"text": it.text, "label": it.label}
                if it.label2 is not None:
                    obj["label2"] = it.label2
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def stratified_split_indices(labels, train_fraction: float = 0.8, seed: int = 0):
    """Per-class seeded shuffle; each class contributes ``round(fraction * n_k)``
    items (clamped to leave one on each side) to the training part.

    Returns sorted ``(train_idx, validation_idx)`` arrays.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    y = np.array([to_ordinal(v) for v in labels])
    rng = np.random.default_rng(seed)
    train, valid = [], []
    for k in range(N_LEVELS):
        idx = np.flatnonzero(y == k)
        if len(idx) == 0:
            continue
        if len(idx) < 2:
            raise ClassTooSmallError(f"class {LEVELS[k]} has {len(idx)} item(s); a split needs at least 2")
        idx = rng.permutation(idx)
        n_train = min(max(int(round(train_fraction * len(idx))), 1), len(idx) - 1)
        train.append(idx[:n_train])
        valid.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(valid))


def stratified_split(corpus: LabeledCorpus, train_fraction: float = 0.8, seed: int = 0):
    train_idx, valid_idx = stratified_split_indices(corpus.labels, train_fraction, seed)
    return corpus.subset(train_idx, ":train"), corpus.subset(valid_idx, ":validation")


def agreement_score(corpus: LabeledCorpus) -> float:
    """Fraction of items on which both annotators gave the same level."""
    missing = [i for i, it in enumerate(corpus) if it.label2 is None]
    if missing:
        raise MissingSecondLabelError(f"{len(missing)} item(s) lack a second label, first at row {missing[0]}")
    return sum(it.label == it.label2 for it in corpus) / len(corpus)


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    labels: tuple
    catalog: FeatureCatalog = field(default=DEFAULT_CATALOG)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != len(self.labels) or self.X.shape[1] != len(self.catalog):
            raise ValueError(f"matrix shape {self.X.shape} does not fit {len(self.labels)} labels "
                             f"and {len(self.catalog)} descriptors")

    @property
    def y(self) -> np.ndarray:
        return np.array([to_ordinal(v) for v in self.labels], dtype=np.int64)

    @property
    def shape(self):
        return self.X.shape


def build_matrix(corpus: LabeledCorpus, catalog: FeatureCatalog | None = None, n_jobs: int | None = None) -> FeatureMatrix:
    catalog = DEFAULT_CATALOG if catalog is None else catalog

    def row(i, text):
        try:
            return extract_features(text, catalog)
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"row {i}: {exc}") from None

    if n_jobs in (None, 1):
        rows = [row(i, t) for i, t in enumerate(corpus.texts)]
    else:
        from joblib import Parallel, delayed
        rows = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(row)(i, t) for i, t in enumerate(corpus.texts))
    return FeatureMatrix(np.vstack(rows), tuple(corpus.labels), catalog)

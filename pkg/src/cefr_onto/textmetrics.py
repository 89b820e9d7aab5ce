"""Descriptor extraction: readability scores plus lexical, syntactic and
discourse features computed with deterministic lexicon heuristics.

Everything here is a pure function of its inputs. The sklearn-compatible
:class:`TextFeaturizer` wraps :func:`extract_features` for whole corpora.
"""

from __future__ import annotations

import functools
import json
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateInputError, MissingWordListError, UnknownDescriptorError

KINDS = ("readability", "lexical", "syntactic", "discourse")
VALUE_TYPES = ("numeric", "binary")

_VOWELS = frozenset("aeiouy")
# combining marks continue a word so decomposed accents stay attached
_TOKEN_RE = re.compile(r"(?:[^\W_]|['’]|[\u0300-\u036f])+")
_TERMINAL_RE = re.compile(r"[.!?]+[\"'’”)\]]*")
_OPENERS = "\"'‘“(["


# ---------------------------------------------------------------------------
# word lists
# ---------------------------------------------------------------------------

def load_wordlist(path) -> frozenset:
    """Read a one-word-per-line list. Blank lines and ``#`` comments are skipped."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingWordListError(f"word list not found: {path}") from exc
    words = set()
    for line in raw.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(unicodedata.normalize("NFC", line.lower()))
    return frozenset(words)


def _data_path(*parts) -> Path:
    return Path(str(resources.files("cefr_onto").joinpath("data", *parts)))


@functools.lru_cache(maxsize=None)
def lexicon(name: str) -> frozenset:
    """Bundled lexicon ``data/lexicons/<name>.txt``."""
    return load_wordlist(_data_path("lexicons", f"{name}.txt"))


@functools.lru_cache(maxsize=None)
def dale_chall_words() -> frozenset:
    return load_wordlist(_data_path("dale_chall_3000.txt"))


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    text: str  # NFC-normalised surface form
    start: int
    end: int
    is_capitalized: bool
    is_sentence_initial: bool

    @property
    def lower(self) -> str:
        return self.text.lower()


@dataclass(frozen=True)
class Document:
    """A text with sentence spans (character offsets) and per-sentence tokens."""

    text: str
    sentences: tuple
    tokens: tuple

    @classmethod
    def from_text(cls, text: str) -> "Document":
        spans = tuple(segment_sentences(text))
        tokens = tuple(tuple(tokenize(text[s:e], offset=s)) for s, e in spans)
        return cls(text=text, sentences=spans, tokens=tokens)

    @property
    def words(self) -> list:
        return [tok for sent in self.tokens for tok in sent]

    @property
    def n_sentences(self) -> int:
        """Sentences holding at least one token."""
        return sum(1 for sent in self.tokens if sent)

    @property
    def n_tokens(self) -> int:
        return sum(len(sent) for sent in self.tokens)


def _is_abbreviation(text: str, period_end: int) -> bool:
    start = period_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    chunk = re.sub(r"^[^\w.]+", "", text[start:period_end].lower())
    return chunk in lexicon("abbreviations")


def segment_sentences(text: str) -> list:
    """Split ``text`` into ``(start, end)`` character spans.

    A run of ``.``/``!``/``?`` (plus any closing quotes or brackets) ends a
    sentence when it is followed by whitespace and an uppercase letter
    (optionally behind an opening quote), or by the end of the text. A lone
    period closing a listed abbreviation never ends a sentence. Spans are
    trimmed of surrounding whitespace; trailing text without terminal
    punctuation forms the last span.
    """
    spans = []
    start = 0
    n = len(text)
    for m in _TERMINAL_RE.finditer(text):
        end = m.end()
        j = end
        while j < n and text[j].isspace():
            j += 1
        if j < n:
            if j == end:
                continue
            k = j + 1 if text[j] in _OPENERS and j + 1 < n else j
            if not text[k].isupper():
                continue
        punct = m.group().rstrip(_OPENERS + "’”)]")
        if punct == "." and _is_abbreviation(text, m.start() + 1):
            continue
        _append_span(spans, text, start, end)
        start = end
    _append_span(spans, text, start, n)
    return spans


def _append_span(spans, text, start, end):
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append((start, end))


def tokenize(sentence: str, offset: int = 0) -> list:
    """Maximal runs of letters, digits and apostrophes; outer apostrophes are dropped."""
    tokens = []
    for m in _TOKEN_RE.finditer(sentence):
        s, e = m.start(), m.end()
        while s < e and sentence[s] in "'’":
            s += 1
        while e > s and sentence[e - 1] in "'’":
            e -= 1
        if s == e:
            continue
        surface = unicodedata.normalize("NFC", sentence[s:e])
        tokens.append(Token(
            text=surface,
            start=offset + s,
            end=offset + e,
            is_capitalized=surface[0].isupper(),
            is_sentence_initial=not tokens,
        ))
    return tokens


# ---------------------------------------------------------------------------
# word-level heuristics
# ---------------------------------------------------------------------------

def count_syllables(word: str) -> int:
    """Vowel-group count with a silent-final-e correction, never below 1.

    A trailing ``e`` that forms its own vowel group is dropped, except in a
    consonant + ``le`` ending (``table`` keeps two syllables).
    """
    w = "".join(c for c in word.lower() if c.isalpha())
    if not w:
        return 1
    count = 0
    prev_vowel = False
    for c in w:
        is_vowel = c in _VOWELS
        if is_vowel and not prev_vowel:
            count += 1
        prev_vowel = is_vowel
    if w.endswith("e") and len(w) >= 2 and w[-2] not in _VOWELS:
        consonant_le = w.endswith("le") and len(w) >= 3 and w[-3] not in _VOWELS
        if not consonant_le:
            count -= 1
    return max(count, 1)


def is_proper_noun(token: Token) -> bool:
    return token.is_capitalized and not token.is_sentence_initial


def is_complex_word(token: Token) -> bool:
    return count_syllables(token.text) >= 3 and not is_proper_noun(token)


def _familiar_variants(word: str):
    yield word
    if word.endswith("'s") or word.endswith("’s"):
        yield word[:-2]
    if word.endswith("s"):
        yield word[:-1]
    if word.endswith("es"):
        yield word[:-2]
    if word.endswith("ed"):
        yield word[:-2]
        yield word[:-1]
    if word.endswith("ing"):
        yield word[:-3]
        yield word[:-3] + "e"


def is_difficult_word(word: str, familiar: frozenset | None = None) -> bool:
    """True when no -s/-es/-ed/-ing stripped variant is on the familiar list."""
    familiar = dale_chall_words() if familiar is None else familiar
    w = unicodedata.normalize("NFC", word.lower()).replace("’", "'")
    return not any(v in familiar for v in _familiar_variants(w))


# ---------------------------------------------------------------------------
# readability formulas
# ---------------------------------------------------------------------------

def _check_counts(words, sentences):
    if words < 1 or sentences < 1:
        raise DegenerateInputError(f"need words >= 1 and sentences >= 1, got {words} and {sentences}")


def flesch_kincaid(words: int, sentences: int, syllables: int) -> float:
    """Flesch-Kincaid grade level; negative for very simple text."""
    _check_counts(words, sentences)
    return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59


def gunning_fog(words: int, sentences: int, complex_words: int) -> float:
    _check_counts(words, sentences)
    return 0.4 * ((words / sentences) + 100.0 * (complex_words / words))


def dale_chall(words: int, sentences: int, difficult_words: int) -> float:
    """Raw Dale-Chall score with the +3.6365 adjustment above 5% difficult words."""
    _check_counts(words, sentences)
    pdw = 100.0 * difficult_words / words
    score = 0.1579 * pdw + 0.0496 * (words / sentences)
    if pdw > 5.0:
        score += 3.6365
    return score


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureDescriptor:
    id: str
    kind: str = "lexical"
    value_type: str = "numeric"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"descriptor {self.id!r}: kind must be one of {KINDS}")
        if self.value_type not in VALUE_TYPES:
            raise ValueError(f"descriptor {self.id!r}: value_type must be one of {VALUE_TYPES}")

    @property
    def is_binary(self) -> bool:
        return self.value_type == "binary"

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "value_type": self.value_type}


@dataclass(frozen=True)
class FeatureCatalog:
    """Ordered descriptor list; the order is the column order everywhere."""

    descriptors: tuple

    def __post_init__(self):
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        if not self.descriptors:
            raise ValueError("a feature catalog needs at least one descriptor")
        ids = [d.id for d in self.descriptors]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate descriptor ids in catalog: {ids}")

    def __len__(self):
        return len(self.descriptors)

    def __iter__(self):
        return iter(self.descriptors)

    def __getitem__(self, i):
        return self.descriptors[i]

    @property
    def ids(self) -> list:
        return [d.id for d in self.descriptors]

    def index(self, descriptor_id: str) -> int:
        for i, d in enumerate(self.descriptors):
            if d.id == descriptor_id:
                return i
        raise UnknownDescriptorError(f"descriptor {descriptor_id!r} is not in the catalog")

    def get(self, descriptor_id: str) -> FeatureDescriptor:
        return self.descriptors[self.index(descriptor_id)]

    def to_list(self) -> list:
        return [d.to_dict() for d in self.descriptors]

    @classmethod
    def from_list(cls, items) -> "FeatureCatalog":
        return cls(tuple(FeatureDescriptor(d["id"], d.get("kind", "lexical"), d.get("value_type", "numeric"))
                         for d in items))

    @classmethod
    def from_json(cls, path) -> "FeatureCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_list(json.load(fh))

    def save_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_list(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def default(cls) -> "FeatureCatalog":
        return DEFAULT_CATALOG

    @classmethod
    def of(cls, *ids) -> "FeatureCatalog":
        """Subset of the default catalog, in the given order."""
        return cls(tuple(DEFAULT_CATALOG.get(i) for i in ids))


DEFAULT_CATALOG = FeatureCatalog((
    FeatureDescriptor("flesch_kincaid", "readability"),
    FeatureDescriptor("gunning_fog", "readability"),
    FeatureDescriptor("dale_chall", "readability"),
    FeatureDescriptor("named_entity_count", "lexical"),
    FeatureDescriptor("avg_word_length", "lexical"),
    FeatureDescriptor("coordination_count", "syntactic"),
    FeatureDescriptor("subordination_count", "syntactic"),
    FeatureDescriptor("avg_sentence_length", "syntactic"),
    FeatureDescriptor("pronoun_density", "discourse"),
    FeatureDescriptor("indirect_speech", "discourse", "binary"),
))


# ---------------------------------------------------------------------------
# descriptor computation
# ---------------------------------------------------------------------------

def _has_indirect_speech(sentence: Sequence[Token]) -> bool:
    verbs = lexicon("reporting_verbs")
    seen_verb = False
    for tok in sentence:
        low = tok.lower
        if seen_verb and low == "that":
            return True
        if low in verbs:
            seen_verb = True
    return False


def linguistic_descriptors(doc: Document) -> dict:
    """Non-readability descriptors of ``doc`` keyed by descriptor id."""
    words = doc.words
    n = len(words)
    if n == 0:
        raise DegenerateInputError("document has no tokens")
    pronouns = lexicon("pronouns")
    coordinators = lexicon("coordinators")
    subordinators = lexicon("subordinators")
    lowered = [t.lower for t in words]
    return {
        # "I" is always capitalised, so it is never counted as a name.
        "named_entity_count": float(sum(is_proper_noun(t) and t.lower != "i" and not t.lower.startswith("i'")
                                        for t in words)),
        "avg_word_length": sum(sum(c.isalpha() for c in t.text) for t in words) / n,
        "coordination_count": float(sum(w in coordinators for w in lowered)),
        "subordination_count": float(sum(w in subordinators for w in lowered)),
        "avg_sentence_length": n / doc.n_sentences,
        "pronoun_density": sum(w in pronouns for w in lowered) / n,
        "indirect_speech": 1.0 if any(_has_indirect_speech(s) for s in doc.tokens) else 0.0,
    }


@dataclass(frozen=True)
class TextCounts:
    words: int
    sentences: int
    syllables: int
    complex_words: int
    difficult_words: int

    @classmethod
    def of(cls, doc: Document) -> "TextCounts":
        words = doc.words
        return cls(
            words=len(words),
            sentences=doc.n_sentences,
            syllables=sum(count_syllables(t.text) for t in words),
            complex_words=sum(is_complex_word(t) for t in words),
            difficult_words=sum(is_difficult_word(t.text) for t in words),
        )


def readability_descriptors(doc: Document) -> dict:
    c = TextCounts.of(doc)
    return {
        "flesch_kincaid": flesch_kincaid(c.words, c.sentences, c.syllables),
        "gunning_fog": gunning_fog(c.words, c.sentences, c.complex_words),
        "dale_chall": dale_chall(c.words, c.sentences, c.difficult_words),
    }


_READABILITY_IDS = frozenset({"flesch_kincaid", "gunning_fog", "dale_chall"})
_LINGUISTIC_IDS = frozenset(DEFAULT_CATALOG.ids) - _READABILITY_IDS

_GROUPS: dict = {}
for _id in _READABILITY_IDS:
    _GROUPS[_id] = readability_descriptors
for _id in _LINGUISTIC_IDS:
    _GROUPS[_id] = linguistic_descriptors


def available_descriptors() -> list:
    return list(DEFAULT_CATALOG.ids)


def extract_features(doc, catalog: FeatureCatalog | None = None) -> np.ndarray:
    """Descriptor vector for ``doc`` (a :class:`Document` or raw string), in catalog order."""
    catalog = DEFAULT_CATALOG if catalog is None else catalog
    if isinstance(doc, str):
        doc = Document.from_text(doc)
    if doc.n_tokens == 0:
        raise DegenerateInputError("document has no tokens")
    computed: dict = {}
    out = np.empty(len(catalog), dtype=np.float64)
    for i, desc in enumerate(catalog):
        group: Callable | None = _GROUPS.get(desc.id)
        if group is None:
            raise UnknownDescriptorError(f"no extractor for descriptor {desc.id!r}")
        if desc.id not in computed:
            computed.update(group(doc))
        out[i] = computed[desc.id]
    if not np.all(np.isfinite(out)):
        raise DegenerateInputError("non-finite descriptor value")
    return out


def extract_matrix(texts: Iterable, catalog: FeatureCatalog | None = None, n_jobs: int | None = None) -> np.ndarray:
    """Row-wise :func:`extract_features`; output order follows input order."""
    catalog = DEFAULT_CATALOG if catalog is None else catalog
    texts = list(texts)
    if n_jobs in (None, 1):
        rows = [extract_features(t, catalog) for t in texts]
    else:
        rows = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(extract_features)(t, catalog) for t in texts)
    if not rows:
        return np.empty((0, len(catalog)))
    return np.vstack(rows)


class TextFeaturizer(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping raw texts to descriptor vectors.

    Parameters
    ----------
    catalog : FeatureCatalog or None
        Descriptors to compute; ``None`` means the default ten.
    n_jobs : int or None
        Threads used for per-document extraction.
    """

    def __init__(self, catalog=None, n_jobs=None):
        self.catalog = catalog
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        self.catalog_ = DEFAULT_CATALOG if self.catalog is None else self.catalog
        self.n_features_out_ = len(self.catalog_)
        return self

    def transform(self, X):
        catalog = getattr(self, "catalog_", None) or (DEFAULT_CATALOG if self.catalog is None else self.catalog)
        return extract_matrix(X, catalog, n_jobs=self.n_jobs)

    def get_feature_names_out(self, input_features=None):
        catalog = DEFAULT_CATALOG if self.catalog is None else self.catalog
        return np.asarray(catalog.ids, dtype=object)

"""Synthetic CEFR-labelled corpus with controlled difficulty gradients.

Generator, for level ordinal ``k`` in 0..5 (A1..C2):

* each text has ``SENTENCES_PER_TEXT`` sentences;
* a sentence has ``max(3, round(N(5 + 3k, 1.5)))`` words;
* every word slot is drawn from ``RARE_WORDS`` with probability
  ``0.02 + 0.06k``, otherwise from ``EASY_WORDS``;
* with probability ``0.05 + 0.15k`` one interior slot is replaced by a
  subordinator from ``SUBORDINATORS``;
* the first word is capitalised and the sentence ends with a period.

Mean sentence length, rare-word rate and subordination rate therefore all
rise strictly with the level. Everything is drawn from one
``numpy.random.default_rng(seed)`` stream, so a seed fixes the corpus.
"""

from __future__ import annotations

import numpy as np

from .corpus import CorpusItem, LabeledCorpus
from .levels import LEVELS

SENTENCES_PER_TEXT = 6
DEFAULT_SEED = 20240501

# every entry is on the bundled familiar-word list
EASY_WORDS = (
    "dog", "cat", "house", "tree", "road", "water", "bread", "milk", "garden", "school",
    "book", "ball", "car", "boat", "bird", "fish", "table", "chair", "door", "window",
    "apple", "river", "hill", "farm", "horse", "cow", "town", "shop", "street", "friend",
    "mother", "father", "boy", "teacher", "child", "morning", "night", "summer", "winter", "rain",
    "run", "walk", "eat", "play", "sing", "jump", "read", "write", "sleep", "swim",
    "big", "small", "red", "blue", "green", "happy", "warm", "cold", "old", "new",
    "good", "little", "long", "fast", "slow", "soft", "hot", "clean", "kind", "funny",
)

# none of these is on the familiar list and each has three or more syllables
RARE_WORDS = (
    "ambiguity", "infrastructure", "hypothesis", "bureaucratic", "epistemology", "paradigm",
    "unprecedented", "juxtaposition", "ramification", "idiosyncratic", "quintessential",
    "acquiescence", "ubiquitous", "magnanimous", "perfunctory", "obfuscation", "vicissitude",
    "equanimity", "circumlocution", "verisimilitude", "indefatigable", "recalcitrant",
    "sycophantic", "perspicacious", "anachronistic", "disenfranchisement", "heterogeneous",
    "incontrovertible", "multifarious", "preponderance",
)

SUBORDINATORS = ("because", "although", "whereas", "unless", "since", "which")


def level_parameters(ordinal: int) -> dict:
    return {
        "mean_sentence_length": 5.0 + 3.0 * ordinal,
        "sentence_length_sd": 1.5,
        "rare_word_rate": 0.02 + 0.06 * ordinal,
        "subordination_rate": 0.05 + 0.15 * ordinal,
    }


def _sentence(rng: np.random.Generator, params: dict) -> str:
    n = max(3, int(round(rng.normal(params["mean_sentence_length"], params["sentence_length_sd"]))))
    words = []
    for _ in range(n):
        pool = RARE_WORDS if rng.random() < params["rare_word_rate"] else EASY_WORDS
        words.append(pool[rng.integers(len(pool))])
    if rng.random() < params["subordination_rate"]:
        words[int(rng.integers(1, n - 1))] = SUBORDINATORS[rng.integers(len(SUBORDINATORS))]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def generate_text(rng: np.random.Generator, ordinal: int, sentences: int = SENTENCES_PER_TEXT) -> str:
    params = level_parameters(ordinal)
    return " ".join(_sentence(rng, params) for _ in range(sentences))


def generate_fixture(per_level: int = 200, seed: int = DEFAULT_SEED) -> LabeledCorpus:
    """``per_level`` texts for each of the six levels, grouped by level."""
    rng = np.random.default_rng(seed)
    items = [CorpusItem(generate_text(rng, k), LEVELS[k]) for k in range(len(LEVELS)) for _ in range(per_level)]
    return LabeledCorpus(tuple(items), source_id=f"synthetic-fixture-seed{seed}")

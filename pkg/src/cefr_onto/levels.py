"""The six ordered CEFR levels and conversions between names and ordinals."""

from __future__ import annotations

import numpy as np

from .exceptions import UnknownLabelError

LEVELS = ("A1", "A2", "B1", "B2", "C1", "C2")
N_LEVELS = len(LEVELS)
_ORDINAL = {name: i for i, name in enumerate(LEVELS)}


def to_ordinal(label) -> int:
    """Map ``"B1"`` (any case, surrounding whitespace ignored) or ``2`` to ``2``."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        if 0 <= int(label) < N_LEVELS:
            return int(label)
        raise UnknownLabelError(f"unknown level ordinal {label!r}")
    if isinstance(label, str):
        key = label.strip().upper()
        if key in _ORDINAL:
            return _ORDINAL[key]
    raise UnknownLabelError(f"unknown level label {label!r}; expected one of {', '.join(LEVELS)}")


def to_name(label) -> str:
    return LEVELS[to_ordinal(label)]


def encode(labels) -> np.ndarray:
    """Vectorised :func:`to_ordinal`."""
    return np.fromiter((to_ordinal(v) for v in labels), dtype=np.int64)


def decode(ordinals) -> np.ndarray:
    return np.array([LEVELS[int(i)] for i in ordinals], dtype=object)

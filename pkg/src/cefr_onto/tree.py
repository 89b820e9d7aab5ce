"""Constrained CART classifier over the six CEFR levels.

Gini splitting on axis-aligned thresholds, with a hard depth limit and a
minimum number of samples in every branch a split creates. The functional
core (:func:`gini_impurity`, :func:`best_split`, :func:`grow_tree`) works on
plain arrays; :class:`DecisionTree` adds the catalog binding and JSON
round-trip, and :class:`ConstrainedTreeClassifier` is the sklearn face.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import DimensionMismatchError, EmptyNodeError
from .levels import LEVELS, N_LEVELS, decode, encode
from .textmetrics import DEFAULT_CATALOG, FeatureCatalog

THRESHOLD_DECIMALS = 6
_NEAR_TIE = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    max_depth: int = 5
    min_samples_branch: int = 50
    min_samples_leaf: int | None = None
    importance_threshold: float = 0.01

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_branch < 1:
            raise ValueError(f"min_samples_branch must be >= 1, got {self.min_samples_branch}")
        if self.min_samples_leaf is not None and self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not 0.0 <= self.importance_threshold < 1.0:
            raise ValueError(f"importance_threshold must lie in [0, 1), got {self.importance_threshold}")

    @property
    def leaf_minimum(self) -> int:
        """Samples every child of a split must hold."""
        return self.min_samples_branch if self.min_samples_leaf is None else self.min_samples_leaf

    def to_dict(self) -> dict:
        return asdict(self)


class Split(NamedTuple):
    feature: int
    threshold: float
    gain: float


@dataclass(frozen=True, eq=False)
class TreeNode:
    counts: tuple
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def majority(self) -> int:
        # np.argmax returns the first maximum, i.e. the lowest ordinal on ties
        return int(np.argmax(self.counts))

    @property
    def impurity(self) -> float:
        return gini_impurity(self.counts)

    def iter_nodes(self):
        """Pre-order traversal, left subtree first."""
        yield self
        if not self.is_leaf:
            yield from self.left.iter_nodes()
            yield from self.right.iter_nodes()

    def leaves(self) -> list:
        return [node for node in self.iter_nodes() if node.is_leaf]

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def same_structure(self, other: "TreeNode") -> bool:
        if self.is_leaf != other.is_leaf or tuple(self.counts) != tuple(other.counts):
            return False
        if self.is_leaf:
            return True
        return (self.feature == other.feature and self.threshold == other.threshold
                and self.left.same_structure(other.left) and self.right.same_structure(other.right))


def gini_impurity(class_counts) -> float:
    """``1 - sum(p_k ** 2)`` over the class proportions of a node."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyNodeError("gini impurity of an empty node")
    p = counts / total
    return float(1.0 - np.dot(p, p))


def split_threshold(below: float, above: float) -> float:
    """Midpoint of two consecutive distinct values, rounded to six decimals
    whenever the rounded value still separates them (``below <= t < above``)."""
    mid = (below + above) / 2.0
    if not below <= mid < above:
        mid = below
    rounded = round(mid, THRESHOLD_DECIMALS)
    return rounded if below <= rounded < above else mid


def best_split(X, y, rows=None, min_samples_leaf: int = 1, n_classes: int = N_LEVELS) -> Split | None:
    """Best Gini split of ``rows`` (all rows by default), or ``None``.

    Candidates are thresholds between consecutive distinct sorted values of
    each feature whose children both hold at least ``min_samples_leaf``
    rows. The winner maximises the impurity decrease; ties go to the lowest
    feature index, then the lowest threshold. Near-ties are settled in exact
    integer arithmetic so the choice does not depend on rounding.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rows = np.arange(len(y)) if rows is None else np.asarray(rows, dtype=np.int64)
    n = len(rows)
    if n < 2 or n < 2 * min_samples_leaf:
        return None
    yr = y[rows]
    total = np.bincount(yr, minlength=n_classes).astype(np.int64)
    sum_sq_parent = int(total @ total)
    if sum_sq_parent == n * n:
        return None
    one_hot = np.zeros((n, n_classes), dtype=np.int64)

    best_key = None  # exact (numerator, denominator) of sum l^2/n_L + sum r^2/n_R
    best = None
    for j in range(X.shape[1]):
        col = X[rows, j]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        one_hot[:] = 0
        one_hot[np.arange(n), yr[order]] = 1
        left = np.cumsum(one_hot, axis=0)[:-1]
        pos = np.flatnonzero(vals[:-1] != vals[1:])
        n_left = pos + 1
        keep = (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        pos, n_left = pos[keep], n_left[keep]
        if len(pos) == 0:
            continue
        lc = left[pos]
        rc = total - lc
        n_right = n - n_left
        sl = np.einsum("ij,ij->i", lc, lc)
        sr = np.einsum("ij,ij->i", rc, rc)
        score = sl / n_left + sr / n_right
        top = score.max()
        for k in np.flatnonzero(score >= top - _NEAR_TIE * max(1.0, abs(top))):
            nl, nr = int(n_left[k]), int(n_right[k])
            key = (nr * int(sl[k]) + nl * int(sr[k]), nl * nr)
            if best_key is None or key[0] * best_key[1] > best_key[0] * key[1]:
                best_key = key
                i = int(pos[k])
                best = (j, split_threshold(float(vals[i]), float(vals[i + 1])))
    if best is None:
        return None
    num, den = best_key
    gain = Fraction(num * n - sum_sq_parent * den, den * n * n)
    if gain <= 0:
        return None
    return Split(best[0], best[1], float(gain))


def grow_tree(X, y, config: TrainConfig = TrainConfig(), n_classes: int = N_LEVELS) -> TreeNode:
    """Greedy recursive construction under the depth and branch-size limits."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot fit a tree on an empty matrix")
    leaf_min = config.leaf_minimum

    def grow(rows, depth):
        counts = tuple(int(c) for c in np.bincount(y[rows], minlength=n_classes))
        n = len(rows)
        if depth >= config.max_depth or n < 2 * leaf_min or max(counts) == n:
            return TreeNode(counts)
        split = best_split(X, y, rows, leaf_min, n_classes)
        if split is None:
            return TreeNode(counts)
        goes_left = X[rows, split.feature] <= split.threshold
        return TreeNode(
            counts,
            feature=split.feature,
            threshold=split.threshold,
            left=grow(rows[goes_left], depth + 1),
            right=grow(rows[~goes_left], depth + 1),
        )

    return grow(np.arange(len(y)), 0)


def route(root: TreeNode, x) -> TreeNode:
    node = root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


@dataclass(frozen=True)
class ImportanceReport:
    """Normalised Gini importance per descriptor, in catalog order."""

    ids: tuple
    importances: tuple
    raw: tuple
    threshold: float
    no_splits: bool

    @property
    def ranked(self) -> list:
        """``(id, importance)`` pairs sorted descending; catalog order breaks ties."""
        order = sorted(range(len(self.ids)), key=lambda i: (-self.importances[i], i))
        return [(self.ids[i], self.importances[i]) for i in order]

    @property
    def flagged(self) -> frozenset:
        """Descriptors below the threshold, excluded from box definitions."""
        return frozenset(d for d, v in zip(self.ids, self.importances) if v < self.threshold)

    @property
    def kept(self) -> list:
        return [d for d in self.ids if d not in self.flagged]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "no_splits": self.no_splits,
            "importances": [{"id": d, "importance": v, "flagged": d in self.flagged} for d, v in self.ranked],
        }

    def to_csv_rows(self) -> list:
        return [["descriptor", "importance", "flagged"]] + [
            [d, repr(float(v)), "1" if d in self.flagged else "0"] for d, v in self.ranked
        ]


def feature_importance(root: TreeNode, catalog: FeatureCatalog, threshold: float = 0.01) -> ImportanceReport:
    raw = np.zeros(len(catalog))
    total = root.n
    for node in root.iter_nodes():
        if node.is_leaf:
            continue
        n, nl, nr = node.n, node.left.n, node.right.n
        decrease = node.impurity - (nl / n) * node.left.impurity - (nr / n) * node.right.impurity
        raw[node.feature] += (n / total) * decrease
    s = raw.sum()
    no_splits = root.is_leaf
    norm = raw / s if s > 0 else raw.copy()
    return ImportanceReport(tuple(catalog.ids), tuple(float(v) for v in norm), tuple(float(v) for v in raw),
                            float(threshold), no_splits)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """A fitted tree bound to its feature catalog and training config."""

    root: TreeNode
    catalog: FeatureCatalog = field(default=DEFAULT_CATALOG)
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        for node in self.root.iter_nodes():
            if not node.is_leaf and not 0 <= node.feature < len(self.catalog):
                raise ValueError(f"split on feature {node.feature} outside a catalog of {len(self.catalog)}")

    @classmethod
    def fit(cls, X, y, config: TrainConfig = TrainConfig(), catalog: FeatureCatalog | None = None) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        catalog = DEFAULT_CATALOG if catalog is None else catalog
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("cannot fit a tree on an empty matrix")
        if X.shape[1] != len(catalog):
            raise DimensionMismatchError(f"matrix has {X.shape[1]} columns, catalog has {len(catalog)} descriptors")
        return cls(grow_tree(X, encode(y), config), catalog, config)

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.root.iter_nodes())

    @property
    def n_leaves(self) -> int:
        return len(self.root.leaves())

    @property
    def depth(self) -> int:
        return self.root.depth()

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or len(x) != len(self.catalog):
            raise DimensionMismatchError(f"expected a vector of length {len(self.catalog)}, got shape {x.shape}")
        return x

    def predict_one(self, x) -> str:
        return LEVELS[route(self.root, self._check(x)).majority]

    def leaf_index(self, x) -> int:
        """Position of the reached leaf in left-first traversal order."""
        leaf = route(self.root, self._check(x))
        return next(i for i, node in enumerate(self.root.leaves()) if node is leaf)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self.predict_one(row) for row in X], dtype=object)

    def importance(self, threshold: float | None = None) -> ImportanceReport:
        t = self.config.importance_threshold if threshold is None else threshold
        return feature_importance(self.root, self.catalog, t)

    # -- serialization -------------------------------------------------------

    def _node_to_dict(self, node: TreeNode) -> dict:
        if node.is_leaf:
            return {"kind": "leaf", "counts": dict(zip(LEVELS, node.counts)), "majority": LEVELS[node.majority]}
        return {
            "kind": "split",
            "feature_id": self.catalog[node.feature].id,
            "threshold": node.threshold,
            "children": [self._node_to_dict(node.left), self._node_to_dict(node.right)],
        }

    def to_dict(self) -> dict:
        return {
            "catalog": self.catalog.to_list(),
            "config": self.config.to_dict(),
            "root": self._node_to_dict(self.root),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        catalog = FeatureCatalog.from_list(data["catalog"])
        config = TrainConfig(**data.get("config", {}))

        def build(rec):
            if rec["kind"] == "leaf":
                counts = rec["counts"]
                return TreeNode(tuple(int(counts.get(name, 0)) for name in LEVELS))
            if rec["kind"] != "split":
                raise ValueError(f"unknown node kind {rec['kind']!r}")
            left, right = (build(c) for c in rec["children"])
            counts = tuple(a + b for a, b in zip(left.counts, right.counts))
            return TreeNode(counts, catalog.index(rec["feature_id"]), float(rec["threshold"]), left, right)

        return cls(build(data["root"]), catalog, config)

    @classmethod
    def load(cls, path) -> "DecisionTree":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()


class ConstrainedTreeClassifier(ClassifierMixin, BaseEstimator):
    """Gini decision tree with a depth cap and a minimum branch size.

    Parameters
    ----------
    max_depth : int, default=5
    min_samples_branch : int, default=50
        Samples each child of a split must contain.
    min_samples_leaf : int or None, default=None
        Overrides ``min_samples_branch`` as the per-child minimum when set.
    importance_threshold : float, default=0.01
        Normalised importance below which a descriptor is flagged.
    catalog : FeatureCatalog or None
        Names the columns of ``X``; defaults to the ten built-in descriptors
        when ``X`` has ten columns, otherwise to generic ``f0..f{m-1}`` ids.

    ``y`` holds CEFR level names (``"A1"`` .. ``"C2"``) or ordinals 0..5;
    predictions are level names.
    """

    def __init__(self, max_depth=5, min_samples_branch=50, min_samples_leaf=None,
                 importance_threshold=0.01, catalog=None):
        self.max_depth = max_depth
        self.min_samples_branch = min_samples_branch
        self.min_samples_leaf = min_samples_leaf
        self.importance_threshold = importance_threshold
        self.catalog = catalog

    def _config(self) -> TrainConfig:
        return TrainConfig(self.max_depth, self.min_samples_branch, self.min_samples_leaf, self.importance_threshold)

    def _resolve_catalog(self, m) -> FeatureCatalog:
        if self.catalog is not None:
            return self.catalog
        if m == len(DEFAULT_CATALOG):
            return DEFAULT_CATALOG
        from .textmetrics import FeatureDescriptor
        return FeatureCatalog(tuple(FeatureDescriptor(f"f{j}") for j in range(m)))

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=False)
        catalog = self._resolve_catalog(X.shape[1])
        self.tree_ = DecisionTree.fit(X, y, self._config(), catalog)
        self.classes_ = np.array(LEVELS, dtype=object)
        self.n_features_in_ = X.shape[1]
        self.importance_ = self.tree_.importance()
        self.feature_importances_ = np.array(self.importance_.importances)
        return self

    def _validate(self, X) -> np.ndarray:
        check_is_fitted(self, "tree_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(f"X has {X.shape[1]} features, the tree was fitted on {self.n_features_in_}")
        return X

    def predict(self, X):
        X = self._validate(X)
        return decode([route(self.tree_.root, row).majority for row in X])

    def predict_proba(self, X):
        X = self._validate(X)
        counts = np.array([route(self.tree_.root, row).counts for row in X], dtype=np.float64)
        return counts / counts.sum(axis=1, keepdims=True)

    def apply(self, X):
        X = self._validate(X)
        return np.array([self.tree_.leaf_index(row) for row in X], dtype=np.int64)

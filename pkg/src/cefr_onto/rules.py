"""Quantitative class definitions compiled from a fitted tree.

Each leaf yields a :class:`PathRule`: the box cut out by the splits on its
root-to-leaf path. Per level, a definition is either the disjunction of the
level's leaf boxes (``exact`` mode, faithful to the tree) or one bounding
conjunction of per-descriptor ranges (``box`` mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import DimensionMismatchError, NoPathsForLabelError
from .levels import LEVELS, to_name, to_ordinal
from .textmetrics import FeatureCatalog
from .tree import DecisionTree, ImportanceReport

MODES = ("exact", "box")
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class IntervalConstraint:
    """A range on one descriptor; ``None`` marks an unbounded side.

    Splits produce the half-open form ``(t_low, t_high]``.
    """

    descriptor: str
    lower: float | None = None
    lower_inclusive: bool = False
    upper: float | None = None
    upper_inclusive: bool = True

    def __post_init__(self):
        if self.lower is None and self.lower_inclusive:
            object.__setattr__(self, "lower_inclusive", False)
        if self.upper is None and self.upper_inclusive:
            object.__setattr__(self, "upper_inclusive", False)
        if self.lower is not None and self.upper is not None:
            if self.lower > self.upper or (
                    self.lower == self.upper and not (self.lower_inclusive and self.upper_inclusive)):
                raise ValueError(f"empty interval for {self.descriptor}: {self}")

    @property
    def is_unbounded(self) -> bool:
        return self.lower is None and self.upper is None

    @property
    def is_bounded(self) -> bool:
        return self.lower is not None and self.upper is not None

    @property
    def width(self) -> float:
        return self.upper - self.lower if self.is_bounded else math.inf

    def contains(self, value: float) -> bool:
        if self.lower is not None:
            if value < self.lower or (value == self.lower and not self.lower_inclusive):
                return False
        if self.upper is not None:
            if value > self.upper or (value == self.upper and not self.upper_inclusive):
                return False
        return True

    def distance(self, value: float) -> float:
        """Distance from ``value`` to the nearest boundary (0 inside)."""
        if self.contains(value):
            return 0.0
        d = 0.0
        if self.lower is not None:
            d = max(d, self.lower - value)
        if self.upper is not None:
            d = max(d, value - self.upper)
        return d

    def covers(self, other: "IntervalConstraint") -> bool:
        """True when every point of ``other`` lies in this interval."""
        if self.lower is not None:
            if other.lower is None or other.lower < self.lower:
                return False
            if other.lower == self.lower and other.lower_inclusive and not self.lower_inclusive:
                return False
        if self.upper is not None:
            if other.upper is None or other.upper > self.upper:
                return False
            if other.upper == self.upper and other.upper_inclusive and not self.upper_inclusive:
                return False
        return True

    def intersect(self, other: "IntervalConstraint") -> "IntervalConstraint | None":
        """Tightest common interval, or ``None`` when the two are disjoint."""
        lo, lo_inc = _tighter(self.lower, self.lower_inclusive, other.lower, other.lower_inclusive, max)
        hi, hi_inc = _tighter(self.upper, self.upper_inclusive, other.upper, other.upper_inclusive, min)
        if lo is not None and hi is not None and (lo > hi or (lo == hi and not (lo_inc and hi_inc))):
            return None
        return IntervalConstraint(self.descriptor, lo, lo_inc, hi, hi_inc)

    def hull(self, other: "IntervalConstraint") -> "IntervalConstraint":
        """Smallest interval containing both."""
        lo, lo_inc = _looser(self.lower, self.lower_inclusive, other.lower, other.lower_inclusive, min)
        hi, hi_inc = _looser(self.upper, self.upper_inclusive, other.upper, other.upper_inclusive, max)
        return IntervalConstraint(self.descriptor, lo, lo_inc, hi, hi_inc)

    def minus(self, other: "IntervalConstraint") -> list:
        """Parts of this interval outside ``other`` (zero, one or two intervals)."""
        parts = []
        if other.lower is not None:
            below = IntervalConstraint(self.descriptor, None, False, other.lower, not other.lower_inclusive)
            part = self.intersect(below)
            if part is not None:
                parts.append(part)
        if other.upper is not None:
            above = IntervalConstraint(self.descriptor, other.upper, not other.upper_inclusive, None, False)
            part = self.intersect(above)
            if part is not None:
                parts.append(part)
        return parts

    def to_dict(self) -> dict:
        return {
            "descriptor": self.descriptor,
            "lower": UNBOUNDED if self.lower is None else self.lower,
            "lower_inclusive": self.lower_inclusive,
            "upper": UNBOUNDED if self.upper is None else self.upper,
            "upper_inclusive": self.upper_inclusive,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntervalConstraint":
        lo = None if data["lower"] == UNBOUNDED else float(data["lower"])
        hi = None if data["upper"] == UNBOUNDED else float(data["upper"])
        return cls(data["descriptor"], lo, bool(data["lower_inclusive"]), hi, bool(data["upper_inclusive"]))

    def __str__(self):
        lo = "-inf" if self.lower is None else repr(self.lower)
        hi = "+inf" if self.upper is None else repr(self.upper)
        return f"{self.descriptor} in {'[' if self.lower_inclusive else '('}{lo}, {hi}{']' if self.upper_inclusive else ')'}"


def _tighter(a, a_inc, b, b_inc, pick):
    if a is None:
        return b, b_inc
    if b is None:
        return a, a_inc
    if a == b:
        return a, a_inc and b_inc
    return (a, a_inc) if pick(a, b) == a else (b, b_inc)


def _looser(a, a_inc, b, b_inc, pick):
    if a is None or b is None:
        return None, False
    if a == b:
        return a, a_inc or b_inc
    return (a, a_inc) if pick(a, b) == a else (b, b_inc)


def _ordered(constraints, catalog: FeatureCatalog) -> tuple:
    return tuple(sorted(constraints, key=lambda c: catalog.index(c.descriptor)))


def _matches(constraints, x, catalog: FeatureCatalog) -> bool:
    return all(c.contains(x[catalog.index(c.descriptor)]) for c in constraints)


def _merge(constraints) -> dict | None:
    """Intersect constraints per descriptor; ``None`` if any becomes empty."""
    merged: dict = {}
    for c in constraints:
        prev = merged.get(c.descriptor)
        cur = c if prev is None else prev.intersect(c)
        if cur is None:
            return None
        merged[c.descriptor] = cur
    return merged


@dataclass(frozen=True)
class PathRule:
    constraints: tuple
    label: str
    support: int
    purity: float
    leaf_index: int = 0

    def matches(self, x, catalog: FeatureCatalog) -> bool:
        return _matches(self.constraints, x, catalog)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "support": self.support,
            "purity": self.purity,
            "leaf_index": self.leaf_index,
            "constraints": [c.to_dict() for c in self.constraints],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PathRule":
        return cls(tuple(IntervalConstraint.from_dict(c) for c in data["constraints"]), data["label"],
                   int(data["support"]), float(data["purity"]), int(data.get("leaf_index", 0)))

    def same_body(self, other: "PathRule") -> bool:
        return self.constraints == other.constraints


@dataclass(frozen=True)
class ClassDefinition:
    """``paths`` holds the body in exact mode, ``constraints`` in box mode."""

    label: str
    mode: str
    constraints: tuple = ()
    paths: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def boxes(self) -> list:
        """Constraint tuples whose union is the definition."""
        return [p.constraints for p in self.paths] if self.mode == "exact" else [self.constraints]

    @property
    def descriptors(self) -> list:
        seen = []
        for box in self.boxes:
            for c in box:
                if c.descriptor not in seen:
                    seen.append(c.descriptor)
        return seen

    def matches(self, x, catalog: FeatureCatalog) -> bool:
        return any(_matches(box, x, catalog) for box in self.boxes)

    def structurally_equal(self, other: "ClassDefinition") -> bool:
        """Same label, mode and bodies (paths compared by constraints only)."""
        if (self.label, self.mode) != (other.label, other.mode):
            return False
        if self.mode == "box":
            return self.constraints == other.constraints
        return len(self.paths) == len(other.paths) and all(a.same_body(b) for a, b in zip(self.paths, other.paths))

    def to_dict(self) -> dict:
        out = {"label": self.label, "mode": self.mode}
        if self.mode == "box":
            out["constraints"] = [c.to_dict() for c in self.constraints]
        else:
            out["paths"] = [p.to_dict() for p in self.paths]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ClassDefinition":
        return cls(
            data["label"], data["mode"],
            tuple(IntervalConstraint.from_dict(c) for c in data.get("constraints", ())),
            tuple(PathRule.from_dict(p) for p in data.get("paths", ())),
        )


@dataclass(frozen=True)
class DefinitionSet:
    definitions: tuple
    catalog: FeatureCatalog
    mode: str = "box"
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "definitions", tuple(sorted(self.definitions, key=lambda d: to_ordinal(d.label))))
        labels = [d.label for d in self.definitions]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in definition set: {labels}")

    def __len__(self):
        return len(self.definitions)

    def __iter__(self):
        return iter(self.definitions)

    @property
    def labels(self) -> list:
        return [d.label for d in self.definitions]

    def structurally_equal(self, other: "DefinitionSet") -> bool:
        return (self.mode == other.mode and self.labels == other.labels
                and all(a.structurally_equal(b) for a, b in zip(self.definitions, other.definitions)))

    def get(self, label) -> ClassDefinition:
        name = to_name(label)
        for d in self.definitions:
            if d.label == name:
                return d
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "catalog": self.catalog.to_list(),
            "provenance": self.provenance,
            "definitions": [d.to_dict() for d in self.definitions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DefinitionSet":
        return cls(tuple(ClassDefinition.from_dict(d) for d in data["definitions"]),
                   FeatureCatalog.from_list(data["catalog"]), data.get("mode", "box"), data.get("provenance", {}))


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def _split_constraint(descriptor, threshold, went_left) -> IntervalConstraint:
    if went_left:
        return IntervalConstraint(descriptor, upper=threshold, upper_inclusive=True)
    return IntervalConstraint(descriptor, lower=threshold, lower_inclusive=False)


def extract_paths(tree: DecisionTree) -> list:
    """One rule per leaf, in left-first order, with same-descriptor bounds merged."""
    catalog = tree.catalog
    rules = []

    def walk(node, trail):
        if node.is_leaf:
            merged = _merge(trail)
            # children of a split are never empty, so a path cannot be contradictory
            assert merged is not None
            rules.append(PathRule(
                _ordered(merged.values(), catalog),
                LEVELS[node.majority],
                node.n,
                max(node.counts) / node.n,
                len(rules),
            ))
            return
        d = catalog[node.feature].id
        walk(node.left, trail + [_split_constraint(d, node.threshold, True)])
        walk(node.right, trail + [_split_constraint(d, node.threshold, False)])

    walk(tree.root, [])
    return rules


def class_ranges(paths, label, catalog: FeatureCatalog | None = None) -> list:
    """Bounding interval, per descriptor, of the union of ``label``'s leaf boxes.

    A descriptor left free by any of the label's paths is unbounded in the
    union and is therefore omitted.
    """
    name = to_name(label)
    own = [p for p in paths if p.label == name]
    if not own:
        raise NoPathsForLabelError(f"no path predicts {name}")
    order = []
    for p in own:
        for c in p.constraints:
            if c.descriptor not in order:
                order.append(c.descriptor)
    out = []
    for d in order:
        hull = None
        for p in own:
            c = next((c for c in p.constraints if c.descriptor == d), IntervalConstraint(d))
            hull = c if hull is None else hull.hull(c)
        if not hull.is_unbounded:
            out.append(hull)
    return list(_ordered(out, catalog)) if catalog is not None else out


def build_definitions(tree: DecisionTree, importance: ImportanceReport | None = None, mode: str = "box") -> DefinitionSet:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    importance = tree.importance() if importance is None else importance
    paths = extract_paths(tree)
    labels = sorted({p.label for p in paths}, key=to_ordinal)
    defs = []
    for label in labels:
        if mode == "exact":
            defs.append(ClassDefinition(label, "exact", paths=tuple(p for p in paths if p.label == label)))
        else:
            ranges = [c for c in class_ranges(paths, label, tree.catalog) if c.descriptor not in importance.flagged]
            defs.append(ClassDefinition(label, "box", constraints=tuple(ranges)))
    provenance = {"tree_sha256": tree.digest(), "config": tree.config.to_dict(),
                  "excluded_descriptors": sorted(importance.flagged) if mode == "box" else []}
    return DefinitionSet(tuple(defs), tree.catalog, mode, provenance)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchDiagnostics:
    mode: str
    candidates: tuple
    matched_paths: tuple = ()
    fallback: bool = False
    distance: float | None = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "candidates": list(self.candidates), "matched_paths": list(self.matched_paths),
                "fallback": self.fallback, "distance": self.distance}


def box_volume_key(constraints, n_dims: int) -> tuple:
    """Sort key for box size: infinite dimensions first, then finite volume."""
    finite = [c.width for c in constraints if c.is_bounded]
    return (n_dims - len(finite), math.prod(finite))


def _linf_distance(constraints, x, catalog) -> float:
    return max((c.distance(x[catalog.index(c.descriptor)]) for c in constraints), default=0.0)


def classify_by_rules(defs: DefinitionSet, fv) -> tuple:
    """Level whose definition ``fv`` satisfies, plus match diagnostics.

    Box mode resolves multiple matches to the smallest box (lowest ordinal on
    ties) and no match to the nearest box by L-infinity boundary distance.
    """
    catalog = defs.catalog
    x = np.asarray(fv, dtype=np.float64)
    if x.ndim != 1 or len(x) != len(catalog):
        raise DimensionMismatchError(f"expected a vector of length {len(catalog)}, got shape {x.shape}")

    if defs.mode == "exact":
        hits = [(d.label, p) for d in defs for p in d.paths if p.matches(x, catalog)]
        if hits:
            labels = tuple(dict.fromkeys(h[0] for h in hits))
            return hits[0][0], MatchDiagnostics("exact", labels, tuple(p.leaf_index for _, p in hits))
        scored = [(_linf_distance(p.constraints, x, catalog), to_ordinal(d.label), d.label, p)
                  for d in defs for p in d.paths]
        dist, _, label, p = min(scored, key=lambda s: s[:2])
        return label, MatchDiagnostics("exact", (), (p.leaf_index,), True, dist)

    matching = [d for d in defs if d.matches(x, catalog)]
    if len(matching) == 1:
        return matching[0].label, MatchDiagnostics("box", (matching[0].label,))
    if matching:
        best = min(matching, key=lambda d: (*box_volume_key(d.constraints, len(catalog)), to_ordinal(d.label)))
        return best.label, MatchDiagnostics("box", tuple(d.label for d in matching))
    scored = [(_linf_distance(d.constraints, x, catalog), to_ordinal(d.label), d.label) for d in defs]
    dist, _, label = min(scored)
    return label, MatchDiagnostics("box", (), fallback=True, distance=dist)


# ---------------------------------------------------------------------------
# consistency
# ---------------------------------------------------------------------------

def _box_intersection(a, b) -> dict | None:
    return _merge(list(a) + list(b))


def _box_covers(box: dict, region: dict) -> bool:
    return all(iv.covers(region.get(d, IntervalConstraint(d))) for d, iv in box.items())


def _uncovered_region(region: dict, boxes: list) -> dict | None:
    """A sub-region of ``region`` outside every box, or ``None`` if covered."""
    live = [b for b in boxes if _merge(list(region.values()) + list(b.values())) is not None]
    if not live:
        return region
    if any(_box_covers(b, region) for b in live):
        return None
    box = live[0]
    for d, iv in box.items():
        current = region.get(d, IntervalConstraint(d))
        if iv.covers(current):
            continue
        pieces = [current.intersect(iv)] + current.minus(iv)
        for piece in pieces:
            hole = _uncovered_region({**region, d: piece}, live)
            if hole is not None:
                return hole
        return None
    return None


@dataclass
class ConsistencyReport:
    mode: str
    overlaps: list = field(default_factory=list)
    empty: list = field(default_factory=list)
    partition_disjoint: bool | None = None
    partition_covers: bool | None = None
    uncovered_witness: list | None = None
    data_ranges: dict | None = None

    @property
    def partition_holds(self) -> bool | None:
        if self.partition_disjoint is None:
            return None
        return self.partition_disjoint and self.partition_covers

    @property
    def findings(self) -> list:
        lines = []
        for o in self.overlaps:
            region = ", ".join(str(c) for c in o["region"]) or "everywhere"
            lines.append(f"overlap {o['labels'][0]} / {o['labels'][1]}: {region}")
        for e in self.empty:
            lines.append(f"empty definition {e['label']}: {e['reason']}")
        if self.partition_disjoint is False:
            lines.append("leaf boxes are not pairwise disjoint")
        if self.partition_covers is False:
            lines.append("leaf boxes do not cover the feature space")
        return lines

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "overlaps": [{"labels": list(o["labels"]), "region": [c.to_dict() for c in o["region"]]}
                         for o in self.overlaps],
            "empty": self.empty,
            "partition_disjoint": self.partition_disjoint,
            "partition_covers": self.partition_covers,
            "uncovered_witness": self.uncovered_witness,
            "data_ranges": self.data_ranges,
            "findings": self.findings,
        }


def data_ranges(X, labels, catalog: FeatureCatalog) -> dict:
    """Per level and descriptor, ``[min, max]`` of the observed values."""
    X = np.asarray(X, dtype=np.float64)
    names = np.array([to_name(v) for v in labels])
    out = {}
    for level in LEVELS:
        rows = X[names == level]
        if len(rows):
            out[level] = {d: [float(rows[:, j].min()), float(rows[:, j].max())] for j, d in enumerate(catalog.ids)}
    return out


def check_consistency(defs: DefinitionSet, X=None, labels=None) -> ConsistencyReport:
    """Overlaps between levels, contradictory definitions and, in exact
    mode, whether the leaf boxes partition the feature space."""
    report = ConsistencyReport(defs.mode)
    labelled_boxes = []
    for d in defs:
        for i, box in enumerate(d.boxes):
            merged = _merge(box)
            if merged is None:
                what = "contradictory bounds" if d.mode == "box" else f"path {i} has contradictory bounds"
                report.empty.append({"label": d.label, "reason": what})
            else:
                labelled_boxes.append((d.label, merged))
        if not d.boxes:
            report.empty.append({"label": d.label, "reason": "no paths"})

    for i, (la, a) in enumerate(labelled_boxes):
        for lb, b in labelled_boxes[i + 1:]:
            if la == lb:
                continue
            inter = _box_intersection(a.values(), b.values())
            if inter is not None:
                report.overlaps.append({"labels": (la, lb), "region": list(_ordered(inter.values(), defs.catalog))})

    if defs.mode == "exact":
        boxes = [b for _, b in labelled_boxes]
        report.partition_disjoint = all(
            _box_intersection(a.values(), b.values()) is None
            for i, a in enumerate(boxes) for b in boxes[i + 1:]
        )
        hole = _uncovered_region({}, boxes)
        report.partition_covers = hole is None
        if hole is not None:
            report.uncovered_witness = [c.to_dict() for c in hole.values()]

    if X is not None and labels is not None:
        report.data_ranges = data_ranges(X, labels, defs.catalog)
    return report


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------

class DefinitionClassifier(ClassifierMixin, BaseEstimator):
    """Fits a constrained tree, compiles it into class definitions and
    classifies by definition matching rather than by tree descent.

    Parameters
    ----------
    mode : {"box", "exact"}, default="box"
    max_depth, min_samples_branch, min_samples_leaf, importance_threshold
        Forwarded to the tree.
    catalog : FeatureCatalog or None
    """

    def __init__(self, mode="box", max_depth=5, min_samples_branch=50, min_samples_leaf=None,
                 importance_threshold=0.01, catalog=None):
        self.mode = mode
        self.max_depth = max_depth
        self.min_samples_branch = min_samples_branch
        self.min_samples_leaf = min_samples_leaf
        self.importance_threshold = importance_threshold
        self.catalog = catalog

    def fit(self, X, y):
        from .tree import ConstrainedTreeClassifier

        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=False)
        tree_clf = ConstrainedTreeClassifier(self.max_depth, self.min_samples_branch, self.min_samples_leaf,
                                             self.importance_threshold, self.catalog).fit(X, y)
        self.tree_ = tree_clf.tree_
        self.definitions_ = build_definitions(self.tree_, tree_clf.importance_, self.mode)
        self.classes_ = np.array(LEVELS, dtype=object)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "definitions_")
        X = check_array(X, dtype=np.float64)
        return np.array([classify_by_rules(self.definitions_, row)[0] for row in X], dtype=object)

    def diagnose(self, X) -> list:
        check_is_fitted(self, "definitions_")
        X = check_array(X, dtype=np.float64)
        return [classify_by_rules(self.definitions_, row)[1] for row in X]


import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cefr_onto.exceptions import DimensionMismatchError, EmptyNodeError
from cefr_onto.textmetrics import FeatureCatalog
from cefr_onto.tree import (
    ConstrainedTreeClassifier,
    DecisionTree,
    TrainConfig,
    best_split,
    gini_impurity,
    grow_tree,
    split_threshold,
)

from oracles import brute_force_split, documented_threshold, gini_exact


class TestGini:
    def test_pure(self):
        assert gini_impurity([5, 0, 0, 0, 0, 0]) == 0.0

    def test_uniform(self):
        assert gini_impurity([1] * 6) == pytest.approx(5 / 6, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyNodeError):
            gini_impurity([0] * 6)

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=60))
    def test_matches_exact(self, labels):
        counts = np.bincount(labels, minlength=6)
        assert gini_impurity(counts) == pytest.approx(float(gini_exact(labels)), abs=1e-12)


class TestThreshold:
    @pytest.mark.parametrize("a, b, t", [(5.0, 6.0, 5.5), (1.0, 1.0000001, 1.0), (0.1, 0.2, 0.15)])
    def test_values(self, a, b, t):
        assert split_threshold(a, b) == pytest.approx(t, abs=1e-12)

    @given(st.floats(-1e6, 1e6), st.floats(1e-12, 1e3))
    def test_separates(self, a, gap):
        b = a + gap
        if not a < b:
            return
        t = split_threshold(a, b)
        assert a <= t < b
        assert t == documented_threshold(a, b)


class TestBestSplit:
    def test_separable(self):
        X = np.array([[1.0], [2.0], [3.0], [8.0], [9.0], [10.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        s = best_split(X, y)
        assert s.feature == 0 and s.threshold == 5.5 and s.gain == pytest.approx(0.5)

    def test_pure_node(self):
        assert best_split(np.arange(6.0).reshape(-1, 1), np.zeros(6, dtype=int)) is None

    def test_constant_feature(self):
        assert best_split(np.ones((6, 1)), np.array([0, 1, 0, 1, 0, 1])) is None

    def test_min_leaf_blocks(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 1, 1, 1])
        assert best_split(X, y).threshold == 1.5
        assert best_split(X, y, min_samples_leaf=2).threshold == 2.5
        assert best_split(X, y, min_samples_leaf=3) is None

    def test_tie_prefers_lowest_feature(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        y = np.array([0, 0, 1, 1])
        assert best_split(X, y).feature == 0

    @settings(max_examples=150, deadline=None)
    @given(st.integers(2, 24).flatmap(lambda n: st.tuples(
        st.lists(st.lists(st.integers(0, 6).map(float), min_size=3, max_size=3), min_size=n, max_size=n),
        st.lists(st.integers(0, 5), min_size=n, max_size=n),
        st.integers(1, 4),
    )))
    def test_matches_brute_force(self, data):
        X, y, min_leaf = data
        got = best_split(np.array(X), np.array(y), min_samples_leaf=min_leaf)
        want = brute_force_split(X, y, min_leaf)
        if want is None:
            assert got is None
        else:
            assert (got.feature, got.threshold) == (want[0], want[1])
            assert got.gain == pytest.approx(float(want[2]), abs=1e-12)


def _toy(n_per=60, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(k, 0.3, size=(n_per, 2)) for k in range(3)])
    y = np.repeat(["A1", "B1", "C2"], n_per)
    return X, y


class TestGrow:
    def test_depth_and_branch_limits(self):
        X, y = _toy()
        cfg = TrainConfig(max_depth=2, min_samples_branch=20)
        tree = DecisionTree.fit(X, y, cfg, FeatureCatalog.of("flesch_kincaid", "gunning_fog"))
        assert tree.depth <= 2
        for node in tree.root.iter_nodes():
            if not node.is_leaf:
                assert node.left.n >= 20 and node.right.n >= 20

    def test_min_samples_leaf_overrides(self):
        assert TrainConfig(min_samples_branch=50, min_samples_leaf=5).leaf_minimum == 5

    def test_single_leaf_when_too_small(self):
        X, y = _toy(n_per=10)
        tree = DecisionTree.fit(X, y, TrainConfig(), FeatureCatalog.of("flesch_kincaid", "gunning_fog"))
        assert tree.n_leaves == 1
        assert tree.importance().no_splits

    def test_counts_are_consistent(self):
        X, y = _toy()
        root = grow_tree(X, np.repeat([0, 2, 5], 60), TrainConfig(min_samples_branch=10))
        for node in root.iter_nodes():
            if not node.is_leaf:
                assert tuple(a + b for a, b in zip(node.left.counts, node.right.counts)) == node.counts

    def test_majority_tie_goes_low(self):
        root = grow_tree(np.zeros((4, 1)), np.array([3, 3, 1, 1]), TrainConfig(min_samples_branch=1))
        assert root.is_leaf and root.majority == 1

    def test_bad_config(self):
        with pytest.raises(ValueError):
            TrainConfig(max_depth=0)


class TestDecisionTree:
    def setup_method(self):
        X, y = _toy()
        self.X = X
        self.tree = DecisionTree.fit(X, y, TrainConfig(max_depth=3, min_samples_branch=15),
                                     FeatureCatalog.of("flesch_kincaid", "gunning_fog"))

    def test_json_round_trip(self, tmp_path):
        p = tmp_path / "tree.json"
        self.tree.save(p)
        again = DecisionTree.load(p)
        assert again.root.same_structure(self.tree.root)
        assert again.digest() == self.tree.digest()
        assert list(again.predict(self.X)) == list(self.tree.predict(self.X))

    def test_json_shape(self):
        root = json.loads(self.tree.to_json())["root"]
        assert root["kind"] == "split"
        assert set(root) == {"kind", "feature_id", "threshold", "children"}

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            self.tree.predict_one([1.0, 2.0, 3.0])

    def test_importance_sums_to_one(self):
        rep = self.tree.importance()
        assert sum(rep.importances) == pytest.approx(1.0)
        assert rep.ranked[0][1] == max(rep.importances)

    def test_leaf_index(self):
        idx = [self.tree.leaf_index(x) for x in self.X]
        assert 0 <= min(idx) and max(idx) < self.tree.n_leaves


class TestEstimator:
    def test_get_params_and_clone(self):
        est = ConstrainedTreeClassifier(max_depth=3, min_samples_branch=10)
        params = clone(est).get_params()
        assert params["max_depth"] == 3 and params["min_samples_branch"] == 10

    def test_fit_predict(self):
        X, y = _toy()
        est = ConstrainedTreeClassifier(min_samples_branch=10).fit(X, y)
        assert est.score(X, y) > 0.9
        proba = est.predict_proba(X)
        assert proba.shape == (len(X), 6)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert list(est.classes_[proba.argmax(axis=1)]) == list(est.predict(X))
        assert est.feature_importances_.shape == (2,)

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ConstrainedTreeClassifier().predict([[0.0]])

    def test_wrong_width(self):
        X, y = _toy()
        est = ConstrainedTreeClassifier(min_samples_branch=10).fit(X, y)
        with pytest.raises(DimensionMismatchError):
            est.predict(np.zeros((2, 3)))

    def test_matches_sklearn_on_separable_data(self):
        # same partition as a reference CART when the optimum is unique
        from sklearn.tree import DecisionTreeClassifier

        X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0], [20.0], [21.0], [22.0]])
        y = np.array(["A1"] * 3 + ["B2"] * 3 + ["C2"] * 3)
        ours = ConstrainedTreeClassifier(min_samples_branch=1).fit(X, y)
        ref = DecisionTreeClassifier(random_state=0).fit(X, y)
        grid = np.linspace(-1, 23, 97).reshape(-1, 1)
        assert list(ours.predict(grid)) == list(ref.predict(grid))


def test_gain_is_exact_fraction_for_small_case():
    X = [[0.0], [1.0], [2.0]]
    y = [0, 0, 1]
    assert brute_force_split(X, y)[2] == Fraction(4, 9)
    assert best_split(np.array(X), np.array(y)).gain == pytest.approx(4 / 9)

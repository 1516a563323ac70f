import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crtml.cohort import Cohort
from crtml.errors import ContractError
from crtml.protocol import Protocol
from crtml.tree import (TreeConfig, TreeNode, best_split, entropy, evaluate_tree, extract_rules,
                        feature_importance, fit_tree, predict_rows, predict_tree, pruning_sweep, rules_to_text,
                        train_accuracy)


def test_entropy_examples():
    assert entropy((5, 5)) == 1.0
    assert entropy((10, 0)) == 0.0
    assert entropy((9, 3)) == pytest.approx(0.8113, abs=1e-4)
    with pytest.raises(ContractError):
        entropy((0, 0))


def _brute_split(X, y, min_leaf):
    """Enumerate every midpoint of every feature; return the first best."""
    n = len(y)
    parent = entropy(np.bincount(y, minlength=2))
    best = None
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals, vals[1:]):
            t = (lo + hi) / 2
            left = y[X[:, f] <= t]
            right = y[X[:, f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            child = sum(len(s) / n * entropy(np.bincount(s, minlength=2)) for s in (left, right))
            gain = parent - child
            if best is None or gain > best[2] + 1e-9:
                best = (f, t, gain)
    return best if best is not None and best[2] > 1e-12 else None


def test_best_split_example():
    f, t, g = best_split([[1.0], [2.0], [8.0], [9.0]], [0, 0, 1, 1])
    assert (f, t) == (0, 5.0) and g == pytest.approx(1.0)
    assert best_split([[1.0], [2.0]], [1, 1]) is None
    assert best_split([[1.0], [2.0], [3.0], [4.0]], [0, 0, 1, 1], TreeConfig(min_samples_leaf=3)) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(4, 30), st.integers(1, 4), st.integers(1, 5))
def test_best_split_matches_enumeration(seed, n, p, min_leaf):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, p)).astype(float)
    y = rng.integers(0, 2, size=n)
    got = best_split(X, y, TreeConfig(min_samples_leaf=min_leaf))
    want = _brute_split(X, y, min_leaf)
    if want is None:
        assert got is None
    else:
        assert got[0] == want[0] and got[1] == pytest.approx(want[1])
        assert got[2] == pytest.approx(want[2], abs=1e-12)


def test_tie_prefers_lowest_feature():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [8.0, 8.0], [9.0, 9.0]])
    assert best_split(X, [0, 0, 1, 1])[0] == 0


def test_fit_separable_1d():
    tree = fit_tree((np.array([[1.0], [2.0], [8.0], [9.0]]), np.array([0, 0, 1, 1])))
    assert tree.depth() == 1
    assert train_accuracy(tree, [[1.0], [2.0], [8.0], [9.0]], [0, 0, 1, 1]) == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_full_growth_fits_training_set(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 4))
    y = rng.integers(0, 2, size=60)
    tree = fit_tree((X, y))
    assert train_accuracy(tree, X, y) == 1.0
    np.testing.assert_array_equal(predict_rows(tree, X), y)


def test_leaf_size_n_gives_majority():
    X = np.arange(10.0)[:, None]
    y = np.array([1] * 6 + [0] * 4)
    tree = fit_tree((X, y), TreeConfig(min_samples_leaf=10))
    assert tree.is_leaf and tree.label == 1


@pytest.mark.parametrize("m", [1, 3, 7, 15])
def test_leaf_floor_respected(m, rng):
    X = rng.normal(size=(120, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=120) > 0).astype(int)
    tree = fit_tree((X, y), TreeConfig(min_samples_leaf=m))
    assert all(leaf.n_samples >= m for leaf in tree.leaves())
    assert sum(leaf.n_samples for leaf in tree.leaves()) == 120


def test_max_depth():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 3))
    y = rng.integers(0, 2, size=80)
    assert fit_tree((X, y), TreeConfig(max_depth=2)).depth() <= 2


def _stump():
    root = TreeNode(4, (2, 2), feature_index=3, threshold=5.0, n_features=4, gain=1.0)
    root.left, root.right = TreeNode(2, (2, 0)), TreeNode(2, (0, 2))
    return root


def test_predict_examples():
    assert predict_tree(TreeNode(3, (1, 2), n_features=2), [0.0, 0.0]) == 1
    assert predict_tree(_stump(), [0.0, 0.0, 0.0, 4.0]) == 0
    assert predict_tree(_stump(), [0.0, 0.0, 0.0, 6.0]) == 1
    with pytest.raises(ContractError):
        predict_tree(_stump(), [1.0])


def test_rules():
    assert extract_rules(TreeNode(2, (0, 2)))[0].conditions == ()
    rules = extract_rules(_stump())
    assert [(r.conditions, r.label) for r in rules] == [(((3, "<=", 5.0),), 0), (((3, ">", 5.0),), 1)]
    text = rules_to_text(rules)
    assert "x3 <= 5 then 0" in text and "x3 > 5 then 1" in text


def test_rules_agree_with_tree(rng):
    X = rng.normal(size=(150, 5))
    y = (X[:, 1] - X[:, 3] > 0).astype(int)
    tree = fit_tree((X, y), TreeConfig(min_samples_leaf=4))
    rules = extract_rules(tree)
    assert len(rules) == len(tree.leaves())
    for row in rng.normal(size=(300, 5)):
        hits = [r for r in rules if r.matches(row)]
        assert len(hits) == 1 and hits[0].label == predict_tree(tree, row)


def test_importance():
    imp = feature_importance(_stump())
    np.testing.assert_array_equal(imp, [0, 0, 0, 1])
    np.testing.assert_array_equal(feature_importance(TreeNode(3, (1, 2)), 3), [0, 0, 0])


def test_importance_by_hand():
    # root splits x0 (left pure), the right child (2 vs 1) splits on x1
    X = np.array([[0, 0], [0, 0], [0, 0], [1, 0], [1, 1], [1, 1]], dtype=float)
    y = np.array([0, 0, 0, 1, 0, 0])
    tree = fit_tree((X, y))
    h21 = entropy((2, 1))
    g_root = entropy((5, 1)) - 0.5 * h21
    g_child = h21
    assert tree.feature_index == 0 and tree.gain == pytest.approx(g_root)
    assert tree.right.feature_index == 1 and tree.right.gain == pytest.approx(g_child)
    w = np.array([g_root, 0.5 * g_child])
    np.testing.assert_allclose(feature_importance(tree), w / w.sum())


def test_serialization_roundtrip(rng):
    X = rng.normal(size=(40, 3))
    tree = fit_tree((X, (X[:, 0] > 0).astype(int)))
    back = TreeNode.from_dict(tree.to_dict())
    np.testing.assert_array_equal(predict_rows(back, X), predict_rows(tree, X))


def test_sweep_shapes(separable_build):
    _, cohort, _ = separable_build
    curve = pruning_sweep(cohort, [1, 20], repeats=2)
    assert [m for m, _ in curve.points] == [1, 20]
    assert curve.points[0][1].accuracy >= 0.95
    assert curve.selected == 20
    assert len(curve.to_rows()) == 2
    with pytest.raises(ContractError):
        pruning_sweep(cohort, [5, 1])


def test_sweep_single_leaf_majority(default_build):
    _, cohort, _ = default_build
    curve = pruning_sweep(cohort, [cohort.n_rows], repeats=1)
    _, avg = curve.points[0]
    counts = avg.counts
    assert avg.accuracy == pytest.approx(max(counts.tp + counts.fn, counts.tn + counts.fp) / counts.total)


def test_evaluate_tree_deterministic(separable_build):
    _, cohort, _ = separable_build
    a = evaluate_tree(cohort, TreeConfig(min_samples_leaf=20), Protocol(2, 0.8, 5))
    b = evaluate_tree(cohort, TreeConfig(min_samples_leaf=20), Protocol(2, 0.8, 5))
    assert a == b

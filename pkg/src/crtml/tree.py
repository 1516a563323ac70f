"""Entropy decision trees with a minimum-samples-per-leaf constraint."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ContractError
from .protocol import Protocol, repeated_holdout

GAIN_EPS = 1e-12
DEFAULT_LEAF_SIZES = (1, 2, 5, 10, 15, 20, 25, 30, 40, 50)


@dataclass(frozen=True)
class TreeConfig:
    min_samples_leaf: int = 1
    max_depth: int = None
    criterion: str = "entropy"

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise ContractError("min_samples_leaf must be >= 1")
        if self.criterion != "entropy":
            raise ContractError("only the entropy criterion is supported")
        if self.max_depth is not None and self.max_depth < 0:
            raise ContractError("max_depth must be >= 0")


@dataclass
class TreeNode:
    n_samples: int
    class_counts: tuple  # (n_class0, n_class1)
    feature_index: int = None
    threshold: float = None
    left: "TreeNode" = None
    right: "TreeNode" = None
    gain: float = 0.0
    n_features: int = None  # set on the root only

    @property
    def is_leaf(self):
        return self.feature_index is None

    @property
    def label(self):
        # majority class, ties to 0
        return int(self.class_counts[1] > self.class_counts[0])

    def leaves(self):
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def depth(self):
        return 0 if self.is_leaf else 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self):
        node = {"n_samples": self.n_samples, "class_counts": list(self.class_counts)}
        if self.n_features is not None:
            node["n_features"] = self.n_features
        if self.is_leaf:
            node["class"] = self.label
        else:
            node.update(feature_index=self.feature_index, threshold=self.threshold, gain=self.gain,
                        left=self.left.to_dict(), right=self.right.to_dict())
        return node

    @classmethod
    def from_dict(cls, data):
        node = cls(int(data["n_samples"]), tuple(data["class_counts"]), n_features=data.get("n_features"))
        if "feature_index" in data:
            node.feature_index = int(data["feature_index"])
            node.threshold = float(data["threshold"])
            node.gain = float(data.get("gain", 0.0))
            node.left = cls.from_dict(data["left"])
            node.right = cls.from_dict(data["right"])
        return node


def entropy(class_counts):
    """Shannon entropy in bits of a count vector."""
    counts = [int(c) for c in class_counts]
    total = sum(counts)
    if total <= 0 or min(counts) < 0:
        raise ContractError("entropy needs non-negative counts with a positive total")
    return -sum((c / total) * math.log2(c / total) for c in counts if c)


def _xlog2x_table(n):
    c = np.arange(n + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        table = c * np.log2(c)
    table[0] = 0.0
    return table


def _midpoint(lo, hi):
    mid = lo + (hi - lo) / 2.0
    return lo if mid >= hi else mid


def _split_search(X, y, min_leaf, table):
    n = X.shape[0]
    if n < 2 * min_leaf or y.min() == y.max():
        return None
    order = np.argsort(X, axis=0, kind="stable").astype(np.intp)
    f, pos, gain = _backend.kernels.best_split_scan(X, y, order, table, min_leaf)
    if f < 0 or not gain > GAIN_EPS:
        return None
    threshold = _midpoint(X[order[pos, f], f], X[order[pos + 1, f], f])
    return int(f), float(threshold), float(gain)


def _prepare(rows, labels):
    X = np.ascontiguousarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise ContractError("rows must be a 2-D matrix")
    y = np.ascontiguousarray(labels, dtype=np.intp)
    if y.shape != (X.shape[0],):
        raise ContractError("one label per row required")
    return X, y


def best_split(rows, labels, config=TreeConfig()):
    """Best information-gain split as ``(feature_index, threshold, gain)`` or None.

    Candidate thresholds are midpoints between consecutive distinct values;
    rows ``<= threshold`` go left. Ties prefer the lowest feature index, then
    the lowest threshold.
    """
    X, y = _prepare(rows, labels)
    if X.shape[0] == 0:
        return None
    return _split_search(X, y, config.min_samples_leaf, _xlog2x_table(X.shape[0]))


def fit_tree(train, config=TreeConfig()):
    """Greedy recursive growth on a :class:`~crtml.cohort.Cohort` (or ``(X, y)`` pair)."""
    X, y = _prepare(*(train if isinstance(train, tuple) else (train.features, train.labels)))
    if X.shape[0] == 0:
        raise ContractError("cannot fit a tree on an empty cohort")
    table = _xlog2x_table(X.shape[0])

    def grow(idx, depth):
        yy = y[idx]
        n1 = int(yy.sum())
        node = TreeNode(len(idx), (len(idx) - n1, n1))
        if config.max_depth is not None and depth >= config.max_depth:
            return node
        found = _split_search(X[idx], yy, config.min_samples_leaf, table)
        if found is None:
            return node
        f, thr, gain = found
        go_left = X[idx, f] <= thr
        node.feature_index, node.threshold, node.gain = f, thr, gain
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    root = grow(np.arange(X.shape[0]), 0)
    root.n_features = X.shape[1]
    return root


def predict_tree(tree, row):
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or (tree.n_features is not None and row.shape[0] != tree.n_features):
        raise ContractError(f"row has {row.shape} entries, tree expects {tree.n_features}")
    node = tree
    while not node.is_leaf:
        node = node.left if row[node.feature_index] <= node.threshold else node.right
    return node.label


def predict_rows(tree, X):
    return np.array([predict_tree(tree, r) for r in np.asarray(X, dtype=np.float64)], dtype=np.int64)


@dataclass(frozen=True)
class Rule:
    conditions: tuple  # (feature_index, "<=" | ">", threshold)
    label: int
    n_samples: int
    class_counts: tuple

    def matches(self, row):
        return all(row[f] <= t if op == "<=" else row[f] > t for f, op, t in self.conditions)

    def format(self, feature_names=None):
        def name(f):
            return feature_names[f] if feature_names else f"x{f}"

        body = " and ".join(f"{name(f)} {op} {t:.6g}" for f, op, t in self.conditions)
        head = f"if {body} then" if body else "always"
        return f"{head} {self.label}  [n={self.n_samples}, counts={self.class_counts[0]}/{self.class_counts[1]}]"


def extract_rules(tree):
    """One conjunctive rule per leaf, in left-to-right leaf order."""
    rules = []

    def walk(node, path):
        if node.is_leaf:
            rules.append(Rule(tuple(path), node.label, node.n_samples, tuple(node.class_counts)))
            return
        walk(node.left, path + [(node.feature_index, "<=", node.threshold)])
        walk(node.right, path + [(node.feature_index, ">", node.threshold)])

    walk(tree, [])
    return rules


def rules_to_text(rules, feature_names=None):
    return "\n".join(r.format(feature_names) for r in rules) + "\n"


def feature_importance(tree, n_features=None):
    """Sample-weighted information gain per feature, normalised to sum to 1.

    A single-leaf tree scores all zeros.
    """
    n_features = n_features or tree.n_features
    if n_features is None:
        raise ContractError("n_features unknown for this tree")
    scores = np.zeros(n_features)
    stack = [tree]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            scores[node.feature_index] += node.n_samples / tree.n_samples * node.gain
            stack.extend((node.left, node.right))
    total = scores.sum()
    return scores / total if total > 0 else scores


@dataclass
class SweepCurve:
    points: list  # (min_samples_leaf, averaged EvalResult)
    runs: dict = field(default_factory=dict)  # leaf size -> per-repetition results
    floor: float = 0.85
    selected: int = None

    def to_rows(self):
        return [{"min_samples_leaf": m, "accuracy": r.accuracy, "sensitivity": r.sensitivity,
                 "specificity": r.specificity, "selected": m == self.selected} for m, r in self.points]


def evaluate_tree(cohort, config, protocol):
    """Fit/evaluate ``config`` under the repeated-holdout protocol."""
    def fit_predict(train, test, rep):
        return predict_rows(fit_tree(train, config), test.features)

    return repeated_holdout(cohort, protocol, fit_predict, tag="tree-split")


def pruning_sweep(cohort, leaf_sizes=DEFAULT_LEAF_SIZES, repeats=5, split_fraction=0.80, seed=0,
                  floor=0.85, normalization="min_max"):
    """Averaged test performance per minimum leaf size.

    Every leaf size sees the same train/test splits. The largest leaf size whose
    averaged accuracy reaches ``floor`` is flagged as selected.
    """
    leaf_sizes = [int(m) for m in leaf_sizes]
    if not leaf_sizes or any(b <= a for a, b in zip(leaf_sizes, leaf_sizes[1:])):
        raise ContractError("leaf_sizes must be non-empty and strictly increasing")
    protocol = Protocol(repeats, split_fraction, seed, normalization)
    curve = SweepCurve([], floor=floor)
    for m in leaf_sizes:
        runs, avg = evaluate_tree(cohort, TreeConfig(min_samples_leaf=m), protocol)
        curve.points.append((m, avg))
        curve.runs[m] = runs
        if avg.accuracy >= floor:
            curve.selected = m
    return curve


def train_accuracy(tree, X, y):
    return float(np.mean(predict_rows(tree, X) == np.asarray(y)))

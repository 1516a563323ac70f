"""K-means and agglomerative clustering scored against binary labels."""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ContractError
from .metrics import evaluate

METRICS = ("euclidean", "manhattan", "cosine")
LINKAGES = {"average": 0, "single": 1, "complete": 2}


def _check_metric(metric):
    if metric not in METRICS:
        raise ContractError(f"unknown distance metric {metric!r}")


def _unit_rows(X):
    norms = np.sqrt(np.sum(X * X, axis=-1, keepdims=True))
    zero = norms[..., 0] == 0.0
    return X / np.where(norms == 0.0, 1.0, norms), zero


def distance(a, b, metric="euclidean"):
    """Distance between two vectors.

    Cosine distance is ``1 - cos(a, b)``, evaluated as half the squared distance
    between unit vectors so it is exactly 0 for ``a == b`` and never negative.
    It is 1 when either vector is zero.
    """
    _check_metric(metric)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric == "euclidean":
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if metric == "manhattan":
        return float(np.sum(np.abs(a - b)))
    (ua, ub), zero = _unit_rows(np.stack([a, b]))
    if zero.any():
        return 1.0
    return float(0.5 * np.sum((ua - ub) ** 2))


def pairwise_distances(X, metric="euclidean"):
    """Full ``n x n`` distance matrix, filled one row at a time."""
    _check_metric(metric)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    D = np.empty((n, n))
    if metric == "cosine":
        U, zero = _unit_rows(X)
        for i in range(n):
            D[i] = 0.5 * np.sum((U - U[i]) ** 2, axis=1)
        D[zero, :] = 1.0
        D[:, zero] = 1.0
        return D
    for i in range(n):
        diff = X - X[i]
        D[i] = np.sqrt(np.sum(diff * diff, axis=1)) if metric == "euclidean" else np.sum(np.abs(diff), axis=1)
    return D


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    inertia: float
    iterations: int
    inertia_history: list = field(default_factory=list)


def _assign(X, C):
    d2 = np.sum((X[:, None, :] - C[None, :, :]) ** 2, axis=2)
    assignment = np.argmin(d2, axis=1)
    closest = d2[np.arange(X.shape[0]), assignment]
    return assignment, closest


def _lloyd(X, init_rows, max_iter, tol):
    C = X[init_rows].copy()
    k = C.shape[0]
    history = []
    iterations = 0
    for _ in range(max_iter):
        assignment, closest = _assign(X, C)
        history.append(float(closest.sum()))
        new_C = C.copy()
        taken = closest.copy()
        for c in range(k):
            members = assignment == c
            if members.any():
                new_C[c] = X[members].mean(axis=0)
            else:
                # empty cluster: re-seed at the point farthest from its centroid
                far = int(np.argmax(taken))
                new_C[c] = X[far]
                taken[far] = -1.0
        shift = float(np.max(np.sqrt(np.sum((new_C - C) ** 2, axis=1))))
        C = new_C
        iterations += 1
        if shift < tol:
            break
    assignment, closest = _assign(X, C)
    history.append(float(closest.sum()))
    return KMeansResult(C, assignment, history[-1], iterations, history)


def kmeans(data, k, seed, max_iter=300, tol=1e-6, n_restarts=10):
    """Lloyd's algorithm (Euclidean) from ``n_restarts`` seeded random-row starts.

    Each start samples ``k`` distinct rows uniformly; the lowest-inertia run is
    returned, earliest start winning ties.
    """
    X = np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"k must lie in [1, {n}], got {k}")
    if n_restarts < 1 or max_iter < 1:
        raise ContractError("n_restarts and max_iter must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        rows = rng.choice(n, size=k, replace=False)
        run = _lloyd(X, rows, max_iter, tol)
        if best is None or run.inertia < best.inertia:
            best = run
    return best


@dataclass
class Dendrogram:
    """Merge history in the usual convention: leaves are ``0..n-1`` and the
    cluster formed by merge ``t`` gets id ``n + t``."""

    n: int
    merges: list  # (node_a, node_b, distance, merged_size)
    metric: str = "euclidean"
    linkage: str = "average"

    def to_dict(self):
        return {"n": self.n, "metric": self.metric, "linkage": self.linkage,
                "merges": [[int(a), int(b), float(d), int(s)] for a, b, d, s in self.merges]}

    @classmethod
    def from_dict(cls, data):
        merges = [(int(a), int(b), float(d), int(s)) for a, b, d, s in data["merges"]]
        return cls(int(data["n"]), merges, data.get("metric", "euclidean"), data.get("linkage", "average"))

    def children(self):
        return {self.n + t: (a, b) for t, (a, b, _, _) in enumerate(self.merges)}

    def leaf_order(self, root=None):
        """Left-to-right leaf order for drawing."""
        kids = self.children()
        stack = [root if root is not None else 2 * self.n - 2]
        order = []
        while stack:
            node = stack.pop()
            if node < self.n:
                order.append(node)
            else:
                a, b = kids[node]
                stack.extend((b, a))
        return order


def agglomerative(data, metric="euclidean", linkage="average"):
    """Bottom-up clustering; ties go to the pair with the smallest leaf indices."""
    if linkage not in LINKAGES:
        raise ContractError(f"unknown linkage {linkage!r}")
    X = np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ContractError("agglomerative clustering needs at least 2 rows")
    D = np.ascontiguousarray(pairwise_distances(X, metric))
    raw = _backend.kernels.linkage_merges(D, LINKAGES[linkage])
    node_of_slot = list(range(n))
    merges = []
    for t, (a, b, d, size) in enumerate(raw):
        a, b = int(a), int(b)
        merges.append((node_of_slot[a], node_of_slot[b], float(d), int(size)))
        node_of_slot[a] = n + t
    return Dendrogram(n, merges, metric, linkage)


def _groups_after(d, n_merges):
    parent = list(range(d.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    members = {i: [i] for i in range(d.n)}
    root_of = {i: i for i in range(d.n)}
    for t in range(n_merges):
        a, b, _, _ = d.merges[t]
        ra, rb = find(root_of[a]), find(root_of[b])
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
        members[lo] = members[lo] + members.pop(hi)
        root_of[d.n + t] = lo
    return root_of, members


def cut_dendrogram(d, k):
    """Flat assignment into ``k`` groups, labelled by smallest contained leaf."""
    if not 1 <= k <= d.n:
        raise ContractError(f"k must lie in [1, {d.n}], got {k}")
    _, members = _groups_after(d, d.n - k)
    assignment = np.empty(d.n, dtype=np.int64)
    for label, root in enumerate(sorted(members)):
        assignment[members[root]] = label
    return assignment


@dataclass
class ClusterEval:
    mapping: dict
    eval: object


def cluster_eval(assignment, labels):
    """Score a 2-cluster assignment under the better cluster-to-class bijection."""
    a = np.asarray(assignment)
    y = np.asarray(labels)
    if a.shape != y.shape:
        raise ContractError("assignment and labels differ in length")
    if not np.isin(a, (0, 1)).all():
        raise ContractError("cluster_eval handles exactly two clusters labelled 0/1")
    straight = float(np.mean(a == y))
    flipped = float(np.mean((1 - a) == y))
    if flipped > straight:
        return ClusterEval({0: 1, 1: 0}, evaluate(1 - a, y))
    return ClusterEval({0: 0, 1: 1}, evaluate(a, y))


@dataclass
class TruncatedDendrogram:
    """The last ``leaves - 1`` merges; each shown leaf stands for a collapsed subtree."""

    merges: list  # (node_a, node_b, distance, size), node ids as in the full dendrogram
    leaves: list  # shown leaf node ids, drawing order
    leaf_sizes: dict  # node id -> number of samples combined
    leaf_members: dict  # node id -> original row indices


def truncate_dendrogram(d, max_leaves):
    if max_leaves < 2:
        raise ContractError("max_leaves must be >= 2")
    p = min(max_leaves, d.n)
    cut = d.n - p
    root_of, members = _groups_after(d, cut)
    # shown leaves: children of kept merges that were formed before the cut
    shown = {}
    for a, b, _, _ in d.merges[cut:]:
        for node in (a, b):
            if node < d.n + cut:
                shown[node] = sorted(members[root_of[node]])
    kids = d.children()
    order = []
    stack = [2 * d.n - 2]
    while stack:
        node = stack.pop()
        if node in shown:
            order.append(node)
        else:
            a, b = kids[node]
            stack.extend((b, a))
    return TruncatedDendrogram(
        merges=list(d.merges[cut:]),
        leaves=order,
        leaf_sizes={node: len(shown[node]) for node in order},
        leaf_members={node: shown[node] for node in order},
    )

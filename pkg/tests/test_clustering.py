import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crtml.clustering import (Dendrogram, agglomerative, cluster_eval, cut_dendrogram, distance, kmeans,
                              pairwise_distances, truncate_dendrogram)
from crtml.errors import ContractError


def test_distance_examples():
    a = np.array([1.5, -2.0])
    for m in ("euclidean", "manhattan", "cosine"):
        assert distance(a, a, m) == 0.0
    assert distance([0, 0], [3, 4]) == 5.0
    assert distance([0, 0], [3, 4], "manhattan") == 7.0
    assert distance([1, 0], [0, 1], "cosine") == pytest.approx(1.0)
    assert distance([0, 0], [0, 1], "cosine") == 1.0
    with pytest.raises(ContractError):
        distance([1], [2], "chebyshev")


def test_pairwise_matches_scalar(rng):
    X = rng.normal(size=(7, 3))
    for m in ("euclidean", "manhattan", "cosine"):
        D = pairwise_distances(X, m)
        for i, j in itertools.product(range(7), repeat=2):
            assert D[i, j] == pytest.approx(distance(X[i], X[j], m), abs=1e-12)


def _best_partition_sse(x):
    best = np.inf
    for mask in itertools.product((0, 1), repeat=len(x)):
        mask = np.array(mask)
        if 0 < mask.sum() < len(x):
            sse = sum(((x[mask == c] - x[mask == c].mean()) ** 2).sum() for c in (0, 1))
            best = min(best, sse)
    return best


def test_kmeans_four_points():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    r = kmeans(X, 2, seed=0)
    assert r.inertia == pytest.approx(1.0) == pytest.approx(_best_partition_sse(X[:, 0]))
    assert r.assignment[0] == r.assignment[1] != r.assignment[2] == r.assignment[3]


def test_kmeans_degenerate_k(rng):
    X = rng.normal(size=(6, 2))
    one = kmeans(X, 1, seed=1)
    np.testing.assert_allclose(one.centroids[0], X.mean(axis=0))
    assert one.inertia == pytest.approx(((X - X.mean(axis=0)) ** 2).sum())
    assert kmeans(X, 6, seed=1).inertia == pytest.approx(0.0)
    with pytest.raises(ContractError):
        kmeans(X, 7, seed=1)


def test_kmeans_deterministic(rng):
    X = rng.normal(size=(50, 4))
    a, b = kmeans(X, 3, seed=7), kmeans(X, 3, seed=7)
    np.testing.assert_array_equal(a.assignment, b.assignment)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_kmeans_inertia_non_increasing(seed, k):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    h = kmeans(X, k, seed=seed, n_restarts=1).inertia_history
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))


def test_agglomerative_small():
    d = agglomerative([[0.0], [1.0], [10.0]])
    assert d.merges[0][:3] == (0, 1, 1.0)
    assert d.merges[1][2] == pytest.approx(9.5)
    two = agglomerative([[0.0, 0.0], [3.0, 4.0]])
    assert two.merges == [(0, 1, 5.0, 2)]
    dup = agglomerative([[5.0], [0.0], [5.0]])
    assert dup.merges[0][:3] == (0, 2, 0.0)
    with pytest.raises(ContractError):
        agglomerative([[1.0]])


def _naive_average_linkage(X):
    """Brute-force oracle: recompute average inter-cluster distances from scratch."""
    D = pairwise_distances(X)
    clusters = {i: [i] for i in range(len(X))}
    heights = []
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            dist = D[np.ix_(clusters[a], clusters[b])].mean()
            if best is None or dist < best[0] - 1e-12:
                best = (dist, a, b)
        dist, a, b = best
        heights.append(dist)
        clusters[a] = clusters[a] + clusters.pop(b)
    return heights


@pytest.mark.parametrize("seed", range(5))
def test_average_linkage_matches_oracle(seed):
    X = np.random.default_rng(seed).normal(size=(12, 2))
    heights = [m[2] for m in agglomerative(X).merges]
    np.testing.assert_allclose(heights, _naive_average_linkage(X), rtol=1e-10)


@pytest.mark.parametrize("linkage", ["average", "single", "complete"])
def test_merges_monotone(linkage, rng):
    X = rng.normal(size=(30, 3))
    d = agglomerative(X, "euclidean", linkage)
    assert len(d.merges) == 29
    h = [m[2] for m in d.merges]
    assert all(b >= a for a, b in zip(h, h[1:]))
    assert d.merges[-1][3] == 30


def test_single_and_complete_against_scipy_style_oracle():
    X = np.array([[0.0], [2.0], [5.0], [9.0]])
    single = [m[2] for m in agglomerative(X, linkage="single").merges]
    complete = [m[2] for m in agglomerative(X, linkage="complete").merges]
    assert single == [2.0, 3.0, 4.0]
    assert complete == [2.0, 4.0, 9.0]


def test_cut_dendrogram():
    d = agglomerative([[0.0], [1.0], [10.0]])
    np.testing.assert_array_equal(cut_dendrogram(d, 1), [0, 0, 0])
    np.testing.assert_array_equal(cut_dendrogram(d, 3), [0, 1, 2])
    np.testing.assert_array_equal(cut_dendrogram(d, 2), [0, 0, 1])
    with pytest.raises(ContractError):
        cut_dendrogram(d, 0)


def test_cluster_eval():
    y = np.array([0, 1, 1, 0, 1])
    assert cluster_eval(y, y).eval.accuracy == 1.0
    flipped = cluster_eval(1 - y, y)
    assert flipped.eval.accuracy == 1.0 and flipped.mapping == {0: 1, 1: 0}
    assert cluster_eval([0, 0, 1, 1], [0, 1, 0, 1]).eval.accuracy == 0.5
    with pytest.raises(ContractError):
        cluster_eval([0, 2], [0, 1])


def test_truncation():
    d = agglomerative([[0.0], [1.0], [10.0], [11.0]])
    same = truncate_dendrogram(d, 4)
    assert same.merges == d.merges and sorted(same.leaves) == [0, 1, 2, 3]
    t = truncate_dendrogram(d, 2)
    assert len(t.merges) == 1
    assert [t.leaf_sizes[n] for n in t.leaves] == [2, 2]


def test_truncation_sizes_conserved(rng):
    X = rng.normal(size=(40, 2))
    d = agglomerative(X)
    for p in (2, 5, 17, 40):
        t = truncate_dendrogram(d, p)
        assert len(t.leaves) == p
        assert sum(t.leaf_sizes.values()) == 40
        assert sorted(i for m in t.leaf_members.values() for i in m) == list(range(40))


def test_dendrogram_roundtrip(rng):
    d = agglomerative(rng.normal(size=(9, 2)), "manhattan", "complete")
    back = Dendrogram.from_dict(d.to_dict())
    assert back == d
    assert sorted(d.leaf_order()) == list(range(9))

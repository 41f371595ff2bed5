import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics import calinski_harabasz_score, silhouette_score

from corrmanifold import clustering as cl
from corrmanifold.errors import BadK, SingletonClusterConvention, UnsupportedGeometry
from corrmanifold.estimators import cov_to_corr
from corrmanifold.geometry import distance_matrix, to_coords
from corrmanifold.simulate import ar1_matrix, wishart
from oracles import adjusted_rand, random_corr


@pytest.fixture
def rng():
    return np.random.default_rng(17)


@pytest.fixture(scope="module")
def families():
    rng = np.random.default_rng(2)
    p = 20
    a = cov_to_corr(wishart(np.eye(p), 2 * p, 30, rng))
    b = cov_to_corr(wishart(ar1_matrix(p, 0.9), 2 * p, 30, rng))
    return np.concatenate([a, b]), np.repeat([0, 1], 30)


@pytest.mark.parametrize("method", ["kmeans", "kmedoids", "spectral"])
def test_two_families_recovered(families, method):
    S, truth = families
    res = cl.cluster(method, S, 2, "ecm", seed=0)
    assert adjusted_rand(truth, res.labels) == 1.0
    assert res.labels.shape == (60,) and set(res.labels) == {0, 1}


@pytest.mark.parametrize("method", ["kmeans", "kmedoids"])
def test_k_equals_m(rng, method):
    S = np.stack([random_corr(3, rng) for _ in range(6)])
    res = cl.cluster(method, S, 6, seed=1)
    assert sorted(res.labels) == list(range(6))
    assert res.inertia == pytest.approx(0.0, abs=1e-20)


def test_medoids_are_members_and_swap_monotone(rng):
    S = np.stack([random_corr(4, rng) for _ in range(20)])
    D = distance_matrix(S)
    res = cl.pam(D, 3)
    assert len(set(res.medoids)) == 3 and all(0 <= i < 20 for i in res.medoids)
    assert all(res.labels[i] == j for j, i in enumerate(res.medoids))
    h = np.asarray(res.history)
    assert np.all(np.diff(h) <= 1e-12)
    assert res.inertia == pytest.approx(D[:, res.medoids].min(axis=1).sum())


def test_kmeans_fixed_point_and_monotone(rng):
    X = rng.standard_normal((50, 3))
    res = cl.kmeans(X, 4, seed=5)
    assert np.all(np.diff(res.history) <= 1e-9)
    d2 = ((X[:, None] - res.centers[None]) ** 2).sum(-1)
    assert np.array_equal(np.argmin(d2, axis=1), res.labels)
    for j in range(4):
        assert np.allclose(res.centers[j], X[res.labels == j].mean(axis=0))


def test_kmeans_deterministic_and_workers(rng):
    X = rng.standard_normal((40, 2))
    a = cl.kmeans(X, 3, seed=9)
    b = cl.kmeans(X, 3, seed=9)
    c = cl.kmeans(X, 3, seed=9, workers=3)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.labels, c.labels)
    assert a.inertia == c.inertia


def test_bad_k_and_geometry(rng):
    S = np.stack([random_corr(3, rng) for _ in range(5)])
    for k in (1, 6, 2.5):
        with pytest.raises(BadK):
            cl.cluster("kmeans", S, k)
    with pytest.raises(UnsupportedGeometry):
        cl.cluster("kmeans", S, 2, geometry="airm")
    assert cl.cluster("kmedoids", S, 2, geometry="airm").k == 2


def test_spectral_inertia_is_within_dispersion(families):
    S, _ = families
    D = distance_matrix(S)
    res = cl.cluster("spectral", S, 2, distances=D)
    X = to_coords(S, "ecm")
    manual = sum(((X[res.labels == j] - X[res.labels == j].mean(0)) ** 2).sum() for j in (0, 1))
    assert res.inertia == pytest.approx(manual, rel=1e-10)


def test_silhouette_separated_limit(rng):
    # every between-cluster distance is 100x the largest within-cluster one
    X = np.concatenate([rng.standard_normal((10, 2)), rng.standard_normal((10, 2))])
    labels = np.repeat([0, 1], 10)
    D = squareform(pdist(X))
    same = labels[:, None] == labels[None, :]
    D[~same] = 100 * D[same].max()
    assert cl.silhouette(D, labels) >= 0.99


def test_silhouette_null(rng):
    S = np.stack([random_corr(5, rng) for _ in range(60)])
    D = distance_matrix(S)
    vals = [cl.silhouette(D, rng.integers(0, 2, 60)) for _ in range(50)]
    assert abs(np.mean(vals)) < 0.1


def test_silhouette_matches_sklearn_and_singleton(rng):
    X = rng.standard_normal((15, 3))
    labels = np.array([0] * 7 + [1] * 7 + [2])
    D = squareform(pdist(X))
    with pytest.warns(SingletonClusterConvention):
        s = cl.silhouette(D, labels)
    assert s == pytest.approx(silhouette_score(D, labels, metric="precomputed"), abs=1e-12)
    assert -1 <= s <= 1


@given(st.integers(0, 2**31), st.integers(2, 5))
@settings(max_examples=25, deadline=None)
def test_ch_matches_sklearn(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 4))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, 30 - k)])
    assert cl.calinski_harabasz(X, labels) == pytest.approx(calinski_harabasz_score(X, labels), rel=1e-10)


def test_ch_selects_true_k():
    rng = np.random.default_rng(8)
    p = 8
    gens = [np.eye(p), ar1_matrix(p, 0.9), ar1_matrix(p, -0.7)]
    S = np.concatenate([cov_to_corr(wishart(V, 10 * p, 20, rng)) for V in gens])
    scores = {}
    for k in range(2, 7):
        res = cl.cluster("kmeans", S, k, seed=0)
        scores[k] = cl.validity("ch", S, res.labels)
    assert max(scores, key=scores.get) == 3


def test_validity_dispatch(families):
    S, truth = families
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert cl.validity("silhouette", S, truth, "lec") > 0
    assert cl.validity("ch", S, truth) > 0

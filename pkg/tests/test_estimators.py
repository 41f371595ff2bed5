import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.covariance import ledoit_wolf

from corrmanifold import estimators as est
from corrmanifold.errors import DegenerateInput, SingularResult
from corrmanifold.geometry import is_correlation
from corrmanifold.simulate import ar1_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_ridge_on_identity_covariance():
    # columns built so that the sample covariance is exactly I (divisor T - 1)
    T = 4
    H = np.array([[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, -3]], dtype=float)
    H = H - H.mean(axis=0)
    q, _ = np.linalg.qr(H)
    x = q[:, :3] * np.sqrt(T - 1)
    S = est.estimate_covariance(x, "scm").matrix
    assert np.allclose(S, np.eye(3), atol=1e-12)
    R = est.estimate_covariance(x, "ridge", tau=1.0).matrix
    assert np.allclose(R, 2 * np.eye(3), atol=1e-12)


def test_ledoit_wolf_matches_sklearn(rng):
    x = rng.standard_normal((40, 15)) @ rng.standard_normal((15, 15))
    xc = x - x.mean(axis=0)
    _, ref = ledoit_wolf(xc, assume_centered=True)
    assert est.ledoit_wolf_shrinkage(xc) == pytest.approx(ref, rel=1e-10)


def test_oas_matches_published_formula(rng):
    x = rng.standard_normal((25, 30))
    xc = x - x.mean(axis=0)
    T, p = xc.shape
    S = xc.T @ xc / T
    trS2, tr2S = np.trace(S @ S), np.trace(S) ** 2
    rho = ((1 - 2 / p) * trS2 + tr2S) / ((T + 1 - 2 / p) * (trS2 - tr2S / p))
    assert est.oas_shrinkage(xc) == pytest.approx(min(rho, 1.0), rel=1e-12)


@pytest.mark.parametrize("kind", ["lw", "oas"])
def test_shrinkage_consistent_for_large_T(rng, kind):
    x = rng.standard_normal((4000, 10))
    e = est.estimate_covariance(x, kind)
    assert np.linalg.norm(e.matrix - np.eye(10)) < 0.1
    # the identity is the shrinkage target itself, so the intensity tends to 1;
    # away from the target it must vanish as T grows
    L = np.linalg.cholesky(ar1_matrix(10, 0.5))
    assert est.estimate_covariance(x @ L.T, kind).shrinkage < 0.05


def test_scm_singular_when_T_small(rng):
    with pytest.raises(SingularResult):
        est.estimate_covariance(rng.standard_normal((50, 300)), "scm")


@pytest.mark.parametrize("kind", ["lw", "oas", "ridge"])
def test_shrinkage_positive_definite_when_T_below_n(rng, kind):
    x = rng.standard_normal((8, 40))
    C = est.estimate_correlation(x, kind)
    assert is_correlation(C)


def test_cov_to_corr_examples(rng):
    assert np.array_equal(est.cov_to_corr(np.diag([2.0, 5.0, 0.1])), np.eye(3))
    C = est.cov_to_corr(np.array([[4.0, 2.0], [2.0, 4.0]]))
    assert C[0, 1] == 0.5


@given(st.integers(0, 2**31), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_cov_to_corr_scale_invariance(seed, n):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    S = G @ G.T + 0.1 * np.eye(n)
    D = np.diag(rng.uniform(0.1, 10, n))
    C1, C2 = est.cov_to_corr(S), est.cov_to_corr(D @ S @ D)
    assert np.allclose(C1, C2, atol=1e-12)
    assert np.all(np.diag(C1) == 1.0)


def test_white_noise_near_identity(rng):
    x = rng.standard_normal((1000, 10))
    for kind in ("lw", "oas", "ridge", "scm"):
        C = est.estimate_correlation(x, kind)
        assert np.max(np.abs(C - np.eye(10))) < 0.2


def test_duplicated_columns_scm_singular(rng):
    x = rng.standard_normal((100, 3))
    x = np.column_stack([x, x[:, 0]])
    with pytest.raises(SingularResult):
        est.estimate_correlation(x, "scm")


def test_ar1_recovery(rng):
    V = ar1_matrix(5, 0.9)
    x = rng.standard_normal((5000, 5)) @ np.linalg.cholesky(V).T
    C = est.estimate_correlation(x, "oas")
    assert abs(C[0, 1] - 0.9) < 0.05


def test_error_decreases_with_T(rng):
    n = 6
    V = ar1_matrix(n, 0.5)
    L = np.linalg.cholesky(V)
    for kind in ("lw", "oas", "ridge"):
        errs = []
        for T in (n, 3 * n * n, 10 * n * n):
            e = np.mean([np.linalg.norm(est.estimate_correlation(
                rng.standard_normal((T, n)) @ L.T, kind, tau=0.1) - V) for _ in range(20)])
            errs.append(e)
        assert errs[0] > errs[1] > errs[2]


def test_constant_column_rejected(rng):
    x = rng.standard_normal((20, 3))
    x[:, 1] = 4.0
    with pytest.raises(DegenerateInput):
        est.estimate_covariance(x)


def test_first_pc_reduce(rng):
    z = rng.standard_normal((200, 2))
    x = np.column_stack([z[:, 0], 2 * z[:, 0], z[:, 1], -z[:, 1] + 0.01 * rng.standard_normal(200)])
    out, order = est.first_pc_reduce(x, ["a", "a", "b", "b"])
    assert order == ["a", "b"] and out.shape == (200, 2)
    assert abs(np.corrcoef(out[:, 0], z[:, 0])[0, 1]) > 0.999

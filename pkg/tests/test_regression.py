import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import normal_equations
from softal.regression import (Committee, LinearModel, RankDeficientError, bootstrap_committee,
                               fit_ols, loss, predict)


def test_exact_interpolation():
    m = fit_ols([[0.0], [1.0]], [1.0, 3.0])
    np.testing.assert_allclose(m.beta, [1.0, 2.0], atol=1e-14)


def test_constant_response(rng):
    X = rng.normal(size=(30, 4))
    m = fit_ols(X, np.full(30, 2.5))
    np.testing.assert_allclose(m.beta, [2.5, 0, 0, 0, 0], atol=1e-12)


def test_matches_normal_equations(rng):
    X = rng.normal(size=(50, 4))
    y = X @ rng.normal(size=4) + 0.3 + rng.normal(size=50)
    np.testing.assert_allclose(fit_ols(X, y).beta, normal_equations(X, y), atol=1e-8)


def test_ridge_leaves_intercept_unpenalized(rng):
    X = rng.normal(size=(40, 3))
    y = 100.0 + X @ [1.0, -2.0, 0.5] + 0.1 * rng.normal(size=40)
    m = fit_ols(X, y, ridge=10.0)
    # closed form with penalty matrix diag(0, r, r, r)
    A = np.column_stack([np.ones(40), X])
    P = np.diag([0.0, 10.0, 10.0, 10.0])
    np.testing.assert_allclose(m.beta, np.linalg.solve(A.T @ A + P, A.T @ y), atol=1e-9)


def test_residuals_orthogonal_to_design(rng):
    X = rng.normal(size=(60, 5))
    y = rng.normal(size=60)
    m = fit_ols(X, y)
    r = y - m.predict(X)
    A = np.column_stack([np.ones(60), X])
    assert np.max(np.abs(A.T @ r)) < 1e-8


def test_rank_deficient_raises():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]])
    with pytest.raises(RankDeficientError) as e:
        fit_ols(X, [1.0, 2.0, 3.0, 4.0])
    assert e.value.condition > 1e10
    with pytest.raises(RankDeficientError):
        fit_ols([[1.0, 2.0]], [1.0])
    fit_ols(X, [1.0, 2.0, 3.0, 4.0], ridge=1e-6)  # ridge rescues it


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        fit_ols([[0.0], [np.inf]], [1.0, 2.0])


def test_predict_examples(rng):
    assert predict(LinearModel([1.0, 2.0]), [3.0]) == 7.0
    assert predict(LinearModel(np.zeros(4)), rng.normal(size=3)) == 0.0
    with pytest.raises(ValueError):
        predict(LinearModel([1.0, 2.0]), [1.0, 2.0])


def test_loss_examples(rng):
    assert loss(fit_ols([[0.0], [1.0]], [1.0, 3.0]), [[0.0], [1.0]], [1.0, 3.0]) < 1e-28
    assert loss(LinearModel([0.0, 0.0]), [[1.0], [2.0]], [3.0, -3.0]) == 9.0
    X = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    m = LinearModel(rng.normal(size=4))
    r = y - (m.beta[0] + X @ m.beta[1:])
    assert abs(loss(m, X, y) - np.dot(r, r) / 25) < 1e-12
    perm = rng.permutation(25)
    assert abs(loss(m, X[perm], y[perm]) - loss(m, X, y)) < 1e-12


def test_coefficient_row():
    header, row = LinearModel([0.5, 1.0, -2.0]).to_row()
    assert header == ["intercept", "b1", "b2"]
    assert row == [0.5, 1.0, -2.0]


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(14, 200), d=st.integers(1, 12))
def test_ols_oracle_property(seed, n, d):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, d))
    y = r.normal(size=n)
    np.testing.assert_allclose(fit_ols(X, y).beta, normal_equations(X, y), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_adding_fitted_point_changes_nothing(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(20, 3))
    y = r.normal(size=20)
    m = fit_ols(X, y)
    x_new = r.normal(size=3)
    m2 = fit_ols(np.vstack([X, x_new]), np.append(y, predict(m, x_new)))
    np.testing.assert_allclose(m2.beta, m.beta, atol=1e-8)


def test_committee_noiseless_members_identical(rng):
    X = rng.normal(size=(30, 3))
    y = 1.0 + X @ [2.0, -1.0, 0.5]
    c = bootstrap_committee(X, y, K=10, rng=np.random.default_rng(0))
    assert c.size == 10
    np.testing.assert_allclose(c.betas, np.tile([1.0, 2.0, -1.0, 0.5], (10, 1)), atol=1e-9)


def test_committee_determinism(rng):
    X = rng.normal(size=(15, 2))
    y = rng.normal(size=15)
    a = bootstrap_committee(X, y, 10, rng=np.random.default_rng(7))
    b = bootstrap_committee(X, y, 10, rng=np.random.default_rng(7))
    assert a.betas.tobytes() == b.betas.tobytes()


def test_committee_rank_deficient_resample_uses_fallback():
    # 4 points in 3-d: most bootstrap resamples repeat a row and lose rank
    X = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    y = np.array([1.0, 2.0, 3.0, 4.0])
    c = bootstrap_committee(X, y, K=20, rng=np.random.default_rng(1))
    assert c.size == 20 and np.all(np.isfinite(c.betas))


def test_committee_errors():
    with pytest.raises(ValueError):
        bootstrap_committee([[1.0]], [1.0], 10)
    with pytest.raises(ValueError):
        bootstrap_committee([[1.0], [2.0]], [1.0, 2.0], 1)
    with pytest.raises(ValueError):
        Committee((LinearModel([0, 1]), LinearModel([0, 1, 2])))


def test_committee_variance_near_ols_formula():
    r = np.random.default_rng(3)
    n, d, sigma = 200, 3, 0.5
    X = r.normal(size=(n, d))
    y = X @ [1.0, -1.0, 2.0] + sigma * r.normal(size=n)
    c = bootstrap_committee(X, y, K=50, rng=r)
    Xt = r.normal(size=(100, d))
    A = np.column_stack([np.ones(n), X])
    At = np.column_stack([np.ones(100), Xt])
    oracle = sigma ** 2 * np.einsum("ij,jk,ik->i", At, np.linalg.inv(A.T @ A), At)
    boot = c.predict(Xt).var(axis=0)
    ratio = boot / oracle
    assert np.mean((ratio > 1 / 3) & (ratio < 3)) >= 0.9

import numpy as np
import pytest

from qvs import (CoefficientVector, RegressionData, SingularGramError,
                 fit_path, kkt_residual, lasso_at, standardize)

from conftest import cd_lasso, make_data, make_orthonormal_data


def soft_threshold(c, lam):
    return np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)


# --- fit_path against closed-form oracles

def test_orthonormal_knots_and_order():
    # for orthonormal columns the path is coordinate-wise soft
    # thresholding: knots are the sorted |X'y| and entries follow them
    data = make_orthonormal_data(60, seed=10)
    path = fit_path(data)
    c = data.X.T @ data.y
    order = np.argsort(-np.abs(c))
    assert path.m == 59
    np.testing.assert_allclose(path.knots, np.sort(np.abs(c))[::-1][:59],
                               atol=1e-8)
    np.testing.assert_array_equal(path.entering, order[:59])
    # snapshots match the soft-threshold formula
    for k in (0, 5, 30, 58):
        expected = soft_threshold(c, path.knots[k])
        np.testing.assert_allclose(path.coefs[k], expected, atol=1e-10)


def test_zero_response_empty_path():
    rng = np.random.default_rng(11)
    X = standardize(rng.standard_normal((20, 8)))
    data = RegressionData(X, np.zeros(20))
    path = fit_path(data)
    assert path.m == 0
    assert path.complete
    assert path.lambda_next == 0.0
    np.testing.assert_array_equal(path.coef_next, np.zeros(8))


def test_single_column_scalar_soft_threshold():
    rng = np.random.default_rng(12)
    X = standardize(rng.standard_normal((15, 1)))
    y = rng.standard_normal(15)
    data = RegressionData(X, y)
    path = fit_path(data)
    c = float(X[:, 0] @ y)
    assert path.m == 1
    assert path.knots[0] == pytest.approx(abs(c), abs=1e-12)
    lam = 0.4 * abs(c)
    coef = lasso_at(data, lam)
    assert coef.beta[0] == pytest.approx(np.sign(c) * (abs(c) - lam), abs=1e-10)


def test_path_structure_invariants():
    data, _ = make_data(50, 30, seed=13, s=4, beta_value=1.0, rho=0.3)
    path = fit_path(data)
    assert 0 < path.m <= min(50 - 1, 30)
    assert np.all(np.diff(path.knots) <= 1e-12)
    assert path.active_sets[0] == ()
    for k in range(path.m - 1):
        expected = set(path.active_sets[k]) | {int(path.entering[k])}
        dropped = {e.var for e in path.events
                   if e.kind == "drop" and path.knots[k] >= e.lam > path.knots[k + 1]}
        assert set(path.active_sets[k + 1]) == expected - dropped
        assert int(path.entering[k]) not in path.active_sets[k]


def test_kkt_at_every_knot():
    for seed in range(4):
        data, _ = make_data(60, 90, seed=seed, s=5, beta_value=0.8, rho=0.5)
        path = fit_path(data)
        for k in range(path.m):
            res = kkt_residual(
                data, CoefficientVector(path.coefs[k], path.knots[k]))
            assert res <= 1e-6


def test_piecewise_linearity_between_knots():
    data, _ = make_data(40, 20, seed=14, s=3, beta_value=1.2)
    path = fit_path(data)
    for k in range(path.m - 1):
        hi, lo = path.knots[k], path.knots[k + 1]
        # no drop event inside this interval means linear interpolation
        # of the two snapshots stays on the path
        if any(e.kind == "drop" and lo < e.lam < hi for e in path.events):
            continue
        for t in (0.25, 0.5, 0.75):
            lam = lo + t * (hi - lo)
            beta = path.coefs[k + 1] + (lam - lo) / (hi - lo) * (
                path.coefs[k] - path.coefs[k + 1])
            assert kkt_residual(data, CoefficientVector(beta, lam)) <= 1e-5


def test_events_match_sklearn_lars():
    from sklearn.linear_model import lars_path

    for seed in range(3):
        data, _ = make_data(40, 25, seed=seed, s=3, beta_value=2.0, rho=0.4)
        path = fit_path(data)
        alphas, _, _ = lars_path(data.X, data.y, method="lasso", alpha_min=0.0)
        mine = np.sort(np.array([e.lam for e in path.events]))[::-1]
        theirs = alphas * data.n
        np.testing.assert_allclose(mine, theirs[:len(mine)], atol=1e-8)
        assert any(e.kind == "drop" for e in path.events) or \
            len(path.events) == path.m


def test_max_steps_truncation_records_lookahead():
    data, _ = make_data(30, 40, seed=15, s=2, beta_value=1.0)
    path = fit_path(data, max_steps=5)
    assert path.m == 5
    assert not path.complete
    assert 0 < path.lambda_next <= path.knots[-1]
    res = kkt_residual(data, CoefficientVector(path.coef_next,
                                               path.lambda_next))
    assert res <= 1e-8
    with pytest.raises(ValueError, match="max_steps"):
        fit_path(data, max_steps=min(29, 40) + 1)
    with pytest.raises(ValueError, match="max_steps"):
        fit_path(data, max_steps=0)


def test_singular_gram_raises_with_step():
    rng = np.random.default_rng(22)
    base = standardize(rng.standard_normal((12, 2)))
    u1, u2 = np.linalg.qr(base)[0].T
    x3 = (u1 + u2) / np.linalg.norm(u1 + u2)
    X = np.column_stack([u1, u2, x3])
    y = 3.0 * u1 + 2.9 * u2
    data = RegressionData(X, y)
    with pytest.raises(SingularGramError, match="step"):
        fit_path(data)


# --- lasso_at

def test_lasso_at_above_lambda_max():
    data, _ = make_data(30, 10, seed=16)
    lam_max = np.max(np.abs(data.X.T @ data.y))
    coef = lasso_at(data, lam_max * 1.01)
    np.testing.assert_array_equal(coef.beta, np.zeros(10))
    assert coef.support == ()


def test_lasso_at_zero_is_least_squares():
    data, _ = make_data(50, 8, seed=17, s=2, beta_value=1.0)
    coef = lasso_at(data, 0.0)
    resid = data.y - data.X @ coef.beta
    assert np.max(np.abs(data.X.T @ resid)) <= 1e-8


def test_lasso_at_orthonormal_soft_threshold():
    data = make_orthonormal_data(40, seed=18)
    c = data.X.T @ data.y
    for lam in (0.1, 0.7, 1.5):
        coef = lasso_at(data, lam)
        np.testing.assert_allclose(coef.beta, soft_threshold(c, lam),
                                   atol=1e-10)


def test_lasso_at_validation_and_restrict():
    data, _ = make_data(30, 12, seed=19, s=2, beta_value=1.5)
    with pytest.raises(ValueError, match="nonnegative"):
        lasso_at(data, -0.5)
    empty = lasso_at(data, 1.0, restrict=())
    np.testing.assert_array_equal(empty.beta, np.zeros(12))
    cols = [2, 5, 7]
    lam = 0.3 * np.max(np.abs(data.X.T @ data.y))
    coef = lasso_at(data, lam, restrict=cols)
    off = np.setdiff1d(np.arange(12), cols)
    np.testing.assert_array_equal(coef.beta[off], np.zeros(len(off)))
    oracle = cd_lasso(data.X[:, cols], data.y, lam)
    np.testing.assert_allclose(coef.beta[cols], oracle, atol=1e-6)
    with pytest.raises(ValueError, match="out of range"):
        lasso_at(data, lam, restrict=[11, 12])


def test_lasso_at_matches_coordinate_descent():
    # independent cyclic coordinate-descent oracle on random instances
    for seed in range(3):
        data, _ = make_data(50, 100, seed=seed + 40, s=5, beta_value=0.8,
                            rho=0.5)
        lam_max = np.max(np.abs(data.X.T @ data.y))
        for frac in (0.6, 0.25, 0.08):
            lam = frac * lam_max
            mine = lasso_at(data, lam).beta
            oracle = cd_lasso(data.X, data.y, lam)
            assert np.max(np.abs(mine - oracle)) <= 1e-4


# --- kkt_residual

def test_kkt_zero_solution_above_lambda_max():
    data, _ = make_data(25, 6, seed=20)
    lam_max = np.max(np.abs(data.X.T @ data.y))
    assert kkt_residual(data, CoefficientVector(np.zeros(6), lam_max)) == 0.0
    assert kkt_residual(data, CoefficientVector(np.zeros(6),
                                                lam_max * 2)) == 0.0


def test_kkt_detects_perturbation():
    data, _ = make_data(40, 15, seed=21, s=3, beta_value=1.0)
    path = fit_path(data)
    k = path.m // 2
    beta = path.coefs[k].copy()
    j = int(np.flatnonzero(beta)[0])
    beta[j] += 0.1
    res = kkt_residual(data, CoefficientVector(beta, path.knots[k]))
    assert res > 1e-3

import numpy as np
import pytest

from qvs import RegressionData, standardize


def make_data(n, p, seed, s=0, beta_value=0.0, rho=0.0, sigma=1.0):
    """Random standardized instance with optional AR(1) columns and signal.

    The response is generated from the raw Gaussian design (coefficients
    on the raw scale); the returned data holds standardized columns.
    """
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, p))
    if rho:
        z = np.empty_like(raw)
        z[:, 0] = raw[:, 0]
        for j in range(1, p):
            z[:, j] = rho * z[:, j - 1] + np.sqrt(1 - rho * rho) * raw[:, j]
        raw = z
    beta = np.zeros(p)
    if s:
        beta[rng.choice(p, size=s, replace=False)] = beta_value
    y = raw @ beta + sigma * rng.standard_normal(n)
    return RegressionData(standardize(raw), y, sigma2=sigma * sigma), beta


def make_orthonormal_data(n, seed):
    """Square orthonormal design (Haar) with standard normal response."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    y = rng.standard_normal(n)
    return RegressionData(Q, y, sigma2=1.0)


def cd_lasso(X, y, lam, tol=1e-12):
    """Coordinate-descent oracle for the lasso at one penalty (sklearn)."""
    from sklearn.linear_model import Lasso

    n = X.shape[0]
    if lam == 0:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return coef
    model = Lasso(alpha=lam / n, fit_intercept=False, tol=tol,
                  max_iter=1_000_000)
    model.fit(X, y)
    return model.coef_


@pytest.fixture
def tiny_signal_data():
    return make_data(40, 25, seed=7, s=3, beta_value=1.5)[0]

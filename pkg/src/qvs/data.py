"""Regression data container and column standardization."""

import numpy as np


class ConstantColumnError(ValueError):
    """Raised when a design column has zero variance and cannot be scaled."""


def standardize(X):
    """Center each column to mean 0 and scale it to unit Euclidean norm.

    Parameters
    ----------
    X : (n, p) array
        Raw design matrix. Every column must have nonzero variance.

    Returns
    -------
    (n, p) array with centered, unit-norm columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("design matrix must be two-dimensional")
    centered = X - X.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    bad = np.nonzero(norms <= 1e-14 * max(1.0, float(np.abs(X).max(initial=0.0))))[0]
    if bad.size:
        raise ConstantColumnError(f"constant column at index {int(bad[0])}")
    return centered / norms


class RegressionData:
    """Design matrix, response, and (optionally known) noise variance.

    Columns of ``X`` are assumed to be on the standardized scale (unit
    Euclidean norm; centered when built through :meth:`from_raw`).  All
    statistics downstream are defined on this scale.
    """

    def __init__(self, X, y, sigma2=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        n, p = X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ValueError(
                f"response length {y.shape[0]} does not match {n} design rows")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("design and response must be finite")
        norms = np.linalg.norm(X, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            j = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(
                f"column {j} has norm {norms[j]:.6g}; standardize the design "
                "first (see RegressionData.from_raw)")
        if sigma2 is not None:
            sigma2 = float(sigma2)
            if sigma2 <= 0:
                raise ValueError("sigma2 must be positive")
        self.X = X
        self.y = y
        self.sigma2 = sigma2
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @classmethod
    def from_raw(cls, X_raw, y, sigma2=None):
        """Standardize a raw design and wrap it with the response."""
        return cls(standardize(X_raw), y, sigma2=sigma2)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def estimate_sigma2(self):
        """Noise variance: the known value, else full least squares.

        When ``sigma2`` was not supplied, requires n > p + 1 and returns
        RSS / (n - p) from the least-squares fit on all columns.
        """
        if self.sigma2 is not None:
            return self.sigma2
        n, p = self.X.shape
        if n <= p + 1:
            raise ValueError(
                "sigma2 is unknown and cannot be estimated with n <= p + 1; "
                "pass a known noise variance")
        coef, *_ = np.linalg.lstsq(self.X, self.y, rcond=None)
        rss = float(np.sum((self.y - self.X @ coef) ** 2))
        return rss / (n - p)

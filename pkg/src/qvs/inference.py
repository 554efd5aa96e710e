"""Covariance test statistics along the path and the derived Q statistics.

The covariance statistic at entry knot k compares the fit of the full
path solution at the next knot against a lasso solve restricted to the
columns active just before knot k, scaled by the noise variance.  The Q
statistic at k is the exponentiated negative tail sum of the covariance
statistics from k to the end of the path; under the global null it
behaves like a uniform order statistic.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import RegressionData
from .path import SolutionPath, _Homotopy, lasso_at

__all__ = [
    "CovTestSeries",
    "QSeries",
    "covariance_test",
    "covtest_orthogonal",
    "q_statistics",
]


@dataclass(frozen=True)
class CovTestSeries:
    """Per-knot covariance statistics.

    ``lambda_tail`` records the penalty used one step past the last knot
    (0.0 for complete paths, the lookahead knot for truncated ones).
    """

    T: np.ndarray
    sigma2_used: float
    lambda_tail: float = 0.0
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float))

    def __len__(self):
        return len(self.T)


@dataclass(frozen=True)
class QSeries:
    """Q statistics in [0, 1], one per entry knot.

    When every covariance statistic is nonnegative the sequence is
    nondecreasing by construction; otherwise raw values are kept and the
    offending positions are reported in ``negative_T``.
    """

    q: np.ndarray
    negative_T: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))

    @property
    def has_negative(self):
        return len(self.negative_T) > 0

    def __len__(self):
        return len(self.q)


def _restricted_fit(data, path, k, lam_target):
    """Restricted lasso solution on the columns active before knot k.

    Continues the segment just above knot k down to ``lam_target``; when
    a restricted-path event intervenes, resumes the homotopy from the
    knot instead of extrapolating.  Returns the inner product
    <y, X_A beta_tilde>.
    """
    A = list(path.active_sets[k])
    if not A:
        return 0.0
    Xty_A = data.X[:, A].T @ data.y
    beta_k = path.coefs[k][A]
    signs = np.sign(beta_k)
    if np.all(signs != 0.0):
        cand = beta_k + (path.knots[k] - lam_target) * path.seg_dirs[k]
        if np.all(cand * signs >= 0.0):
            return float(Xty_A @ cand)
        eng = _Homotopy(data.X[:, A], data.y)
        eng.warm_start(beta_k, range(len(A)), path.knots[k])
        for _ in range(50 * len(A) + 1000):
            ev = eng.next_event()
            if ev is None or ev[0] <= lam_target:
                break
            lam, kind, idx, sgn = ev
            if kind == "drop":
                eng.drop(idx, lam)
            else:
                eng.add(idx, sgn, lam)
        else:
            raise RuntimeError("restricted path event budget exceeded")
        out = np.zeros(len(A))
        out[eng.active] = eng.beta_at(lam_target)
        return float(Xty_A @ out)
    # a coefficient sits exactly at zero on the knot: solve cold
    coef = lasso_at(data, lam_target, restrict=A)
    return float(data.y @ (data.X[:, A] @ coef.beta[A]))


def covariance_test(path: SolutionPath, data: RegressionData,
                    sigma2: float | None = None) -> CovTestSeries:
    """Covariance test statistic at every entry knot of ``path``.

    Parameters
    ----------
    path : SolutionPath
        Path fitted on ``data``.
    data : RegressionData
    sigma2 : float, optional
        Noise variance; defaults to the value carried by ``data`` (or its
        least-squares estimate when unknown and n > p + 1).
    """
    if sigma2 is None:
        sigma2 = data.estimate_sigma2()
    sigma2 = float(sigma2)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if path.n_features != data.p:
        raise ValueError(
            f"path has {path.n_features} features but data has {data.p}")
    m = path.m
    if m == 0:
        return CovTestSeries(T=np.zeros(0), sigma2_used=sigma2,
                             lambda_tail=path.lambda_next,
                             truncated=not path.complete)
    Xty = data.X.T @ data.y
    T = np.empty(m)
    for k in range(m):
        if k + 1 < m:
            lam_next = path.knots[k + 1]
            beta_full = path.coefs[k + 1]
        else:
            lam_next = path.lambda_next
            beta_full = path.coef_next
        full_term = float(Xty @ beta_full)
        restricted_term = _restricted_fit(data, path, k, lam_next)
        T[k] = (full_term - restricted_term) / sigma2
    return CovTestSeries(T=T, sigma2_used=sigma2,
                         lambda_tail=path.lambda_next,
                         truncated=not path.complete)


def covtest_orthogonal(knots, sigma2: float,
                       lambda_next: float = 0.0) -> CovTestSeries:
    """Closed-form covariance statistics for an orthogonal design.

    ``T_k = lam_k * (lam_k - lam_{k+1}) / sigma2`` with the penalty past
    the last knot taken as ``lambda_next`` (default 0).
    """
    sigma2 = float(sigma2)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    lam = np.asarray(knots, dtype=float)
    ext = np.append(lam, float(lambda_next))
    if np.any(np.diff(ext) > 0):
        i = int(np.nonzero(np.diff(ext) > 0)[0][0])
        raise ValueError(f"knots increase between positions {i} and {i + 1}")
    T = lam * (lam - ext[1:]) / sigma2
    return CovTestSeries(T=T, sigma2_used=sigma2,
                         lambda_tail=float(lambda_next))


def q_statistics(T) -> QSeries:
    """Q statistics from a covariance series: q_k = exp(-sum_{j>=k} T_j).

    Tail sums run through a single reverse cumulative sum in extended
    precision; results are clamped to [0, 1].  Negative inputs are legal
    (general-position paths) and flagged on the result, in which case the
    raw values are kept without monotone adjustment.
    """
    values = T.T if isinstance(T, CovTestSeries) else np.asarray(T, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("covariance series is empty")
    tails = np.cumsum(values[::-1].astype(np.longdouble))[::-1]
    q = np.clip(np.exp(-tails).astype(float), 0.0, 1.0)
    negative = tuple(int(i) for i in np.nonzero(values < 0)[0])
    if not negative:
        q = np.maximum.accumulate(q)
    return QSeries(q=q, negative_T=negative)

"""Scikit-learn estimator wrapping the selection pipeline."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from .calibration import METHOD_UNIFORM, calibrate
from .data import RegressionData, standardize
from .inference import QSeries, covariance_test, q_statistics
from .path import fit_path
from .selectors import qvs_select


class QVSSelector(SelectorMixin, BaseEstimator):
    """Variable selector using the calibrated Q-statistic cut-off.

    Fits the lasso path on the standardized design, computes covariance
    and Q statistics, and keeps the variables at the first ``k_hat_``
    entry events.  ``transform`` then restricts a matrix to the selected
    columns.

    Parameters
    ----------
    sigma2 : float or "auto"
        Noise variance.  "auto" uses the least-squares estimate, which
        requires n > p + 1; pass a value in high dimensions.
    c_m : float, optional
        Bounding constant.  When omitted it is calibrated by Monte Carlo
        with ``calibration_reps`` draws of ``calibration_method``.
    calibration_method : str
        "uniform-oracle" (fast, default) or "null-path".
    cache_dir : str, optional
        Directory for the calibration cache.
    seed : int
        Seed for the calibration draws.
    """

    def __init__(self, sigma2="auto", c_m=None,
                 calibration_method=METHOD_UNIFORM, calibration_reps=1000,
                 cache_dir=None, seed=0):
        self.sigma2 = sigma2
        self.c_m = c_m
        self.calibration_method = calibration_method
        self.calibration_reps = calibration_reps
        self.cache_dir = cache_dir
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        sigma2 = None if self.sigma2 == "auto" else float(self.sigma2)
        data = RegressionData(standardize(X), y, sigma2=sigma2)
        self.n_features_in_ = data.p
        path = fit_path(data)
        if self.c_m is not None:
            c_m = float(self.c_m)
        else:
            record = calibrate(data.n, data.p, design="identity",
                               reps=self.calibration_reps,
                               method=self.calibration_method,
                               seed=self.seed, cache_dir=self.cache_dir)
            c_m = record.c_m
        if path.m:
            q = q_statistics(covariance_test(path, data))
        else:
            q = QSeries(q=np.zeros(0))
        sel = qvs_select(q, c_m, path=path)
        self.path_ = path
        self.qseries_ = q
        self.c_m_ = c_m
        self.k_hat_ = sel.k_hat
        self.selected_ = sel.selected
        mask = np.zeros(data.p, dtype=bool)
        mask[list(sel.selected)] = True
        self._support_mask = mask
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "_support_mask")
        return self._support_mask

    def _more_tags(self):
        return {"requires_y": True}

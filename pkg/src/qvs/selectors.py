"""Cut-off rules on the solution path.

``qvs_select`` implements the calibrated cut-off

    k_hat = max(0, floor(m * max_{k <= m/2} {k/m - q_k - c_m sqrt(q_k (1-q_k))}))

and the remaining selectors are the comparison rules: Bonferroni and
BH-style thresholds on the Q statistics, BIC over the path knots, and
lasso with K-fold cross-validation.
"""

from dataclasses import dataclass

import numpy as np

from .data import RegressionData
from .inference import QSeries
from .path import SolutionPath, fit_path, _grid_coefs

__all__ = [
    "SelectionResult",
    "qvs_select",
    "q_bon",
    "q_fdr",
    "bic_select",
    "cv_select",
]


@dataclass(frozen=True)
class SelectionResult:
    """A cut-off position and the variables at the first k_hat entries."""

    method: str
    k_hat: int
    selected: tuple
    objective_trace: np.ndarray | None = None


def _selected_at(path, k_hat):
    """Variables at the first k_hat entry events (first entry wins on
    the rare re-entry after a drop)."""
    if path is None or k_hat == 0:
        return ()
    out = []
    for j in path.entering[:k_hat]:
        if j not in out:
            out.append(int(j))
    return tuple(out)


def _q_values(q):
    values = q.q if isinstance(q, QSeries) else np.asarray(q, dtype=float)
    if np.any((values < 0.0) | (values > 1.0)):
        raise ValueError("q statistics must lie in [0, 1]")
    return values


def qvs_select(q, c_m: float, path: SolutionPath | None = None) -> SelectionResult:
    """Calibrated cut-off on the Q statistic process.

    Only the first floor(m/2) positions enter the maximization; the
    per-position objective values are returned as the trace.  ``c_m`` is
    the calibrated bounding value; at moderate path lengths the empirical
    quantile it comes from can be zero or slightly negative, so any
    finite value is accepted.
    """
    if not np.isfinite(c_m):
        raise ValueError("c_m must be finite")
    values = _q_values(q)
    m = len(values)
    half = m // 2
    if half < 1:
        return SelectionResult("qvs", 0, _selected_at(path, 0),
                               objective_trace=np.zeros(0))
    k = np.arange(1, half + 1)
    qq = values[:half]
    trace = k / m - qq - c_m * np.sqrt(qq * (1.0 - qq))
    k_hat = max(0, int(np.floor(m * float(trace.max()))))
    return SelectionResult("qvs", k_hat, _selected_at(path, k_hat),
                           objective_trace=trace)


def q_bon(q, level: float = 0.05, path: SolutionPath | None = None) -> SelectionResult:
    """Largest k with q_k <= level / m (Bonferroni threshold)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    values = _q_values(q)
    m = len(values)
    hits = np.nonzero(values <= level / m)[0] if m else np.zeros(0, dtype=int)
    k_hat = int(hits.max()) + 1 if hits.size else 0
    return SelectionResult("q-bon", k_hat, _selected_at(path, k_hat))


def q_fdr(q, level: float = 0.05, path: SolutionPath | None = None) -> SelectionResult:
    """Largest k with q_k <= level * k / m (BH-style threshold)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    values = _q_values(q)
    m = len(values)
    if m:
        thresholds = level * np.arange(1, m + 1) / m
        hits = np.nonzero(values <= thresholds)[0]
    else:
        hits = np.zeros(0, dtype=int)
    k_hat = int(hits.max()) + 1 if hits.size else 0
    return SelectionResult("q-fdr", k_hat, _selected_at(path, k_hat))


def bic_select(path: SolutionPath, data: RegressionData) -> SelectionResult:
    """Knot minimizing n log(RSS/n) + df log n along the path.

    The model with k entries is the path solution evaluated at the next
    knot (where all k entered variables are in force) with df the size of
    the active set after entry k; k = 0 is the null model.  Ties break
    toward smaller k.
    """
    n = data.n
    y = data.y
    m = path.m
    trace = np.empty(m + 1)
    with np.errstate(divide="ignore"):
        trace[0] = n * np.log((y @ y) / n)
        for k in range(1, m + 1):
            if k < m:
                beta = path.coefs[k]
                df = len(path.active_sets[k])
            else:
                beta = path.coef_next
                df = len(path.active_sets[m - 1]) + 1
            rss = float(np.sum((y - data.X @ beta) ** 2))
            trace[k] = n * np.log(rss / n) + df * np.log(n)
    k_hat = int(np.argmin(trace))
    return SelectionResult("bic", k_hat, _selected_at(path, k_hat),
                           objective_trace=trace)


def cv_select(data: RegressionData, folds: int = 10, rng=None) -> SelectionResult:
    """Lasso with K-fold cross-validation over the path-knot grid.

    Folds are a random partition of the rows; each training part is
    restandardized before fitting, and held-out error uses the training
    centering plus a mean intercept.  The penalty minimizing mean
    held-out squared error is refit on the full data; selected variables
    are its support ordered by path entry.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > data.n:
        raise ValueError(f"folds={folds} exceeds n={data.n}")
    if rng is None:
        rng = np.random.default_rng()
    full_path = fit_path(data)
    grid = np.asarray(full_path.knots, dtype=float)
    if grid.size == 0:
        return SelectionResult("lcv", 0, ())

    perm = rng.permutation(data.n)
    parts = np.array_split(perm, folds)
    errs = np.zeros((folds, grid.size))
    for f, test_idx in enumerate(parts):
        train_mask = np.ones(data.n, dtype=bool)
        train_mask[test_idx] = False
        X_tr_raw = data.X[train_mask]
        y_tr = data.y[train_mask]
        center = X_tr_raw.mean(axis=0)
        scale = np.linalg.norm(X_tr_raw - center, axis=0)
        if np.any(scale <= 0):
            raise ValueError("constant column inside a training fold")
        X_tr = (X_tr_raw - center) / scale
        coefs = _grid_coefs(X_tr, y_tr, grid)
        X_te = (data.X[test_idx] - center) / scale
        pred = X_te @ coefs.T + y_tr.mean()
        errs[f] = np.mean((data.y[test_idx][:, None] - pred) ** 2, axis=0)
    mean_err = errs.mean(axis=0)
    lam_best = float(grid[int(np.argmin(mean_err))])

    beta = np.zeros(data.p)
    cols = _grid_coefs(data.X, data.y, np.asarray([lam_best]))[0]
    beta[:] = cols
    support = set(np.nonzero(beta)[0].tolist())
    ordered = [int(j) for j in full_path.entering if int(j) in support]
    # variables active at lam_best but absent from the truncated entry
    # list (possible only past the path cap) keep index order at the end
    ordered += sorted(support.difference(ordered))
    return SelectionResult("lcv", len(support), tuple(ordered),
                           objective_trace=mean_err)

"""Lasso solution path by piecewise-linear homotopy in the penalty.

The path is computed with the least-angle strategy including drop events:
between consecutive events the active coefficients are affine in the
penalty ``lam``, and the next event (a variable entering the active set or
an active coefficient crossing zero) is located in closed form.  Entry
events define the knots ``lam_1 >= lam_2 >= ...`` that downstream
statistics are indexed by; drop events are recorded in the event stream
but do not advance the knot counter.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .data import RegressionData

__all__ = [
    "PathEvent",
    "SolutionPath",
    "CoefficientVector",
    "SingularGramError",
    "fit_path",
    "lasso_at",
    "kkt_residual",
]

# Relative guard used when locating the next event strictly below the
# current penalty; prevents re-detecting the event we are standing on.
_EVENT_GUARD = 1e-10


def _event_budget(n, p):
    # generous bound on total entry + drop events of one walk
    return 50 * min(n, p) + 1000


class SingularGramError(np.linalg.LinAlgError):
    """Active Gram matrix is numerically singular."""


@dataclass(frozen=True)
class PathEvent:
    """One change of the active set: ``kind`` is ``"entry"`` or ``"drop"``."""

    kind: str
    var: int
    lam: float


@dataclass(frozen=True)
class CoefficientVector:
    """A lasso solution at one penalty value."""

    beta: np.ndarray
    lam: float
    support: tuple = field(init=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(
            self, "support", tuple(int(j) for j in np.nonzero(beta)[0]))


@dataclass(frozen=True)
class SolutionPath:
    """Knots, events, active sets, and coefficient snapshots of one path.

    Attributes
    ----------
    knots : (m,) array
        Entry knots, nonincreasing.
    entering : (m,) int array
        Variable entering at each knot.
    active_sets : tuple of tuples
        Active indices immediately before each knot, in entry order.
    coefs : (m, p) array
        Full coefficient vector at each knot.
    seg_dirs : tuple of arrays
        Per-knot direction of the segment just above the knot, aligned
        with ``active_sets[k]``: on that segment
        ``beta_A(lam) = coefs[k][A] + (knots[k] - lam) * seg_dirs[k]``.
    events : tuple of PathEvent
        Full event stream, drops included.
    lambda_next : float
        Penalty one event past the last knot: 0.0 when the path ran to
        completion, otherwise the next knot computed before truncation.
    coef_next : (p,) array
        Full-path solution at ``lambda_next``.
    complete : bool
        Whether the path reached penalty 0 (no truncation).
    """

    knots: np.ndarray
    entering: np.ndarray
    active_sets: tuple
    coefs: np.ndarray
    seg_dirs: tuple
    events: tuple
    lambda_next: float
    coef_next: np.ndarray
    complete: bool

    @property
    def m(self):
        return len(self.knots)

    @property
    def n_features(self):
        return self.coefs.shape[1] if self.coefs.ndim == 2 else len(self.coef_next)


class _Homotopy:
    """Mutable engine that walks the path one event at a time.

    Works in the index space of the matrix it is given.  ``lam`` is the
    penalty of the most recent event (+inf before the first).
    """

    def __init__(self, X, y):
        self.X = X
        self.y = y
        self.Xty = X.T @ y
        n, p = X.shape
        kmax = min(n, p)
        self._R = np.zeros((kmax, kmax))
        self.active = []
        self.sign = []
        self.lam = np.inf
        self._dir = None

    def warm_start(self, beta_active, active, lam):
        """Resume from a known solution with all-active, signed coefficients."""
        self.active = list(active)
        self.sign = [float(np.sign(b)) for b in beta_active]
        Xa = self.X[:, self.active]
        G = Xa.T @ Xa
        try:
            self._R[:len(active), :len(active)] = np.linalg.cholesky(G).T
        except np.linalg.LinAlgError as e:
            raise SingularGramError("active gram matrix numerically singular") from e
        self.lam = lam
        self._dir = None

    @property
    def k(self):
        return len(self.active)

    def _chol_add(self, j):
        k = self.k
        xj = self.X[:, j]
        x2 = xj @ xj
        if k:
            g = self.X[:, self.active].T @ xj
            w = solve_triangular(self._R[:k, :k].T, g, lower=True)
            d2 = x2 - w @ w
        else:
            w = None
            d2 = x2
        if d2 <= 1e-12 * max(x2, 1.0):
            raise SingularGramError(
                f"active gram matrix numerically singular at size {k + 1}")
        if k:
            self._R[:k, k] = w
        self._R[k, k] = np.sqrt(d2)

    def _solve_gram(self, rhs):
        k = self.k
        z = solve_triangular(self._R[:k, :k].T, rhs, lower=True)
        return solve_triangular(self._R[:k, :k], z, lower=False)

    def add(self, j, sgn, lam):
        self._chol_add(j)
        self.active.append(j)
        self.sign.append(float(sgn))
        self.lam = lam
        self._dir = None

    def drop(self, pos, lam):
        del self.active[pos]
        del self.sign[pos]
        k = self.k
        if k:
            # rebuild the factor; drops are rare and this also resets
            # accumulated update error
            Xa = self.X[:, self.active]
            try:
                self._R[:k, :k] = np.linalg.cholesky(Xa.T @ Xa).T
            except np.linalg.LinAlgError as e:
                raise SingularGramError(
                    "active gram matrix numerically singular") from e
        self.lam = lam
        self._dir = None

    def direction(self):
        """Affine coefficients of the current segment: beta(lam) = b0 - lam*b1."""
        if self._dir is None:
            if self.k == 0:
                z = np.zeros(0)
                self._dir = (z, z)
            else:
                Xa = self.X[:, self.active]
                b0 = self._solve_gram(Xa.T @ self.y)
                b1 = self._solve_gram(np.asarray(self.sign))
                self._dir = (b0, b1)
        return self._dir

    def next_event(self):
        """Locate the next event strictly below ``self.lam``.

        Returns (lam, kind, j_or_pos, sign) or None when the segment
        extends to penalty 0.
        """
        b0, b1 = self.direction()
        p = self.X.shape[1]
        if self.k:
            Xa = self.X[:, self.active]
            uv = self.X.T @ np.column_stack((Xa @ b0, Xa @ b1))
            a = self.Xty - uv[:, 0]
            d = uv[:, 1]
        else:
            a = self.Xty.copy()
            d = np.zeros(p)
        inactive = np.ones(p, dtype=bool)
        inactive[self.active] = False

        hi = self.lam * (1.0 - _EVENT_GUARD) if np.isfinite(self.lam) else np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            cand_pos = a / (1.0 - d)      # correlation meets +lam
            cand_neg = -a / (1.0 + d)     # correlation meets -lam
        best = np.full(p, -np.inf)
        best_sign = np.zeros(p)
        for cand, sgn in ((cand_pos, 1.0), (cand_neg, -1.0)):
            ok = inactive & np.isfinite(cand) & (cand > 0.0) & (cand < hi)
            upd = ok & (cand > best)
            best[upd] = cand[upd]
            best_sign[upd] = sgn
        j_entry = int(np.argmax(best))
        lam_entry = best[j_entry]

        lam_drop = -np.inf
        pos_drop = -1
        if self.k:
            with np.errstate(divide="ignore", invalid="ignore"):
                cross = b0 / b1
            ok = np.isfinite(cross) & (cross > 0.0) & (cross < hi)
            if ok.any():
                masked = np.where(ok, cross, -np.inf)
                pos_drop = int(np.argmax(masked))
                lam_drop = masked[pos_drop]

        if lam_entry <= 0.0 and lam_drop <= 0.0:
            return None
        if lam_drop > lam_entry:
            return (float(lam_drop), "drop", pos_drop, 0.0)
        return (float(lam_entry), "entry", j_entry, float(best_sign[j_entry]))

    def beta_at(self, lam):
        """Coefficients on the current segment (active entries only)."""
        b0, b1 = self.direction()
        return b0 - lam * b1


def fit_path(data: RegressionData, max_steps: int | None = None) -> SolutionPath:
    """Compute the lasso solution path of ``data``.

    Parameters
    ----------
    data : RegressionData
    max_steps : int, optional
        Cap on the number of entry events; defaults to min(n - 1, p),
        which is also the allowed maximum.

    Returns
    -------
    SolutionPath

    Raises
    ------
    SingularGramError
        If the active Gram matrix becomes numerically singular; the
        message names the failing step.
    """
    n, p = data.X.shape
    cap = min(n - 1, p)
    if max_steps is None:
        max_steps = cap
    if not 1 <= max_steps <= cap:
        raise ValueError(f"max_steps must be in [1, {cap}], got {max_steps}")

    eng = _Homotopy(data.X, data.y)
    knots, entering, active_sets, coefs, seg_dirs, events = [], [], [], [], [], []
    lambda_next = 0.0
    coef_next = np.zeros(p)
    complete = True

    for _ in range(_event_budget(n, p)):
        try:
            ev = eng.next_event()
        except SingularGramError as e:
            raise SingularGramError(f"at path step {len(knots) + 1}: {e}") from e
        if ev is None:
            coef_next = np.zeros(p)
            coef_next[eng.active] = eng.beta_at(0.0)
            lambda_next = 0.0
            complete = True
            break
        lam, kind, idx, sgn = ev
        if kind == "drop":
            j = eng.active[idx]
            events.append(PathEvent("drop", j, lam))
            try:
                eng.drop(idx, lam)
            except SingularGramError as e:
                raise SingularGramError(
                    f"at path step {len(knots) + 1}: {e}") from e
            continue
        beta = np.zeros(p)
        beta[eng.active] = eng.beta_at(lam)
        if len(knots) >= max_steps:
            lambda_next = lam
            coef_next = beta
            complete = False
            break
        knots.append(lam)
        entering.append(idx)
        active_sets.append(tuple(eng.active))
        coefs.append(beta)
        _, b1 = eng.direction()
        seg_dirs.append(b1.copy())
        events.append(PathEvent("entry", idx, lam))
        try:
            eng.add(idx, sgn, lam)
        except SingularGramError as e:
            raise SingularGramError(f"at path step {len(knots)}: {e}") from e
    else:
        raise RuntimeError("path event budget exceeded; data is likely "
                           "numerically degenerate")

    m = len(knots)
    return SolutionPath(
        knots=np.asarray(knots),
        entering=np.asarray(entering, dtype=int),
        active_sets=tuple(active_sets),
        coefs=np.asarray(coefs).reshape(m, p),
        seg_dirs=tuple(seg_dirs),
        events=tuple(events),
        lambda_next=float(lambda_next),
        coef_next=coef_next,
        complete=complete,
    )


def _grid_coefs(X, y, lambdas):
    """Lasso solutions on X at each penalty in ``lambdas`` (one homotopy walk).

    ``lambdas`` may be in any order; rows of the result align with it.
    Penalties below a truncated path's end reuse its last segment.
    """
    p = X.shape[1]
    order = np.argsort(lambdas)[::-1]
    out = np.zeros((len(lambdas), p))
    eng = _Homotopy(X, y)
    ev = eng.next_event()
    pending = list(order)
    # above the first knot the solution is identically zero
    while pending and ev is not None and lambdas[pending[0]] >= ev[0]:
        pending.pop(0)
    for _ in range(_event_budget(*X.shape)):
        if not pending:
            break
        lo = 0.0 if ev is None else ev[0]
        while pending and lambdas[pending[0]] >= lo:
            i = pending.pop(0)
            out[i, eng.active] = eng.beta_at(lambdas[i])
        if not pending or ev is None:
            break
        lam, kind, idx, sgn = ev
        if kind == "drop":
            eng.drop(idx, lam)
        else:
            eng.add(idx, sgn, lam)
        ev = eng.next_event()
    else:
        raise RuntimeError("path event budget exceeded; data is likely "
                           "numerically degenerate")
    return out


def lasso_at(data: RegressionData, lam: float, restrict=None) -> CoefficientVector:
    """Solve the lasso at one penalty, optionally on a column subset.

    The restricted solution is embedded back into a length-p vector with
    zeros off the restriction.  An empty restriction yields the zero
    vector.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    p = data.p
    if restrict is None:
        cols = np.arange(p)
    else:
        cols = np.asarray(sorted(set(int(j) for j in restrict)), dtype=int)
        if cols.size and (cols[0] < 0 or cols[-1] >= p):
            raise ValueError("restriction indices out of range")
    beta = np.zeros(p)
    if cols.size:
        sub = _grid_coefs(data.X[:, cols], data.y, np.asarray([lam]))
        beta[cols] = sub[0]
    return CoefficientVector(beta=beta, lam=lam)


def kkt_residual(data: RegressionData, coef: CoefficientVector) -> float:
    """Worst violation of the lasso subgradient conditions for ``coef``.

    For active j this is ``|x_j'(y - X beta) - lam * sign(beta_j)|``; for
    inactive j it is ``max(0, |x_j'(y - X beta)| - lam)``.
    """
    if coef.lam < 0:
        raise ValueError("lambda must be nonnegative")
    beta = coef.beta
    c = data.X.T @ (data.y - data.X @ beta)
    act = beta != 0
    res = 0.0
    if act.any():
        res = float(np.abs(c[act] - coef.lam * np.sign(beta[act])).max())
    if (~act).any():
        res = max(res, float(np.abs(c[~act]).max()) - coef.lam)
    return max(res, 0.0)

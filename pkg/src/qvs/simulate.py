"""Seeded scenario engine: generate instances, score selectors, aggregate.

A scenario fixes the problem shape, sparsity, effect size, design
covariance and noise level; each replication draws an instance from its
own counter-based stream, runs the configured selectors, and is scored
against the path ground truth (the entry positions of the truly relevant
variables).  Aggregation is order-independent, so reports are identical
across thread counts.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import rand
from .calibration import CalibrationRecord
from .data import RegressionData, standardize
from .designs import format_cov, gaussian_design, gen_design
from .inference import QSeries, covariance_test, q_statistics
from .path import fit_path
from .selectors import (SelectionResult, bic_select, cv_select, q_bon,
                        q_fdr, qvs_select)

__all__ = [
    "ScenarioConfig",
    "GroundTruth",
    "Metrics",
    "ScenarioReport",
    "gen_design",
    "gen_truth",
    "gen_response",
    "ground_truth_markers",
    "score",
    "run_scenario",
    "PRESETS",
]

METHODS = ("qvs", "q-bon", "q-fdr", "bic", "lcv")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting."""

    n: int
    p: int
    s: int
    beta_value: float
    cov: str = "identity"
    sigma: float = 1.0
    reps: int = 100
    seed: int = 0
    methods: tuple = ("qvs",)
    level: float = 0.05
    calib_reps: int = 1000
    calib_method: str = "null-path"

    def __post_init__(self):
        object.__setattr__(self, "cov", format_cov(self.cov))
        object.__setattr__(self, "methods",
                           tuple(str(m).lower() for m in self.methods))
        if self.s > self.p:
            raise ValueError("s cannot exceed p")
        if self.reps < 1:
            raise ValueError("need at least one replication")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")


@dataclass(frozen=True)
class GroundTruth:
    """Path markers: relevant set, last all-relevant prefix (m0), and the
    position of the last relevant entry (m1)."""

    relevant: tuple
    m0: int
    m1: int


@dataclass(frozen=True)
class Metrics:
    tpp: float
    fdp: float
    specificity: float
    g_measure: float


@dataclass(frozen=True)
class ScenarioReport:
    """Aggregated scenario results plus the per-replication raw values."""

    config: ScenarioConfig
    c_m: float
    methods: tuple
    k_hat_mean: dict
    k_hat_se: dict
    tpp_mean: dict
    tpp_se: dict
    fdp_mean: dict
    fdp_se: dict
    g_mean: dict
    g_se: dict
    freq_ge_m0: dict
    freq_le_m1: dict
    m0_mean: float
    m1_mean: float
    m_mean: float
    raw: dict = field(repr=False)


def gen_truth(p, s, beta_value, rng):
    """Coefficient vector with s nonzero entries at random positions."""
    if s > p:
        raise ValueError("s cannot exceed p")
    beta = np.zeros(p)
    if s:
        idx = rng.choice(p, size=s, replace=False)
        beta[idx] = beta_value
        relevant = tuple(sorted(int(j) for j in idx))
    else:
        relevant = ()
    return beta, relevant


def gen_response(X, beta, sigma, rng):
    """y = X beta + sigma * z with standard normal z."""
    X = np.asarray(X)
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.shape[0]:
        raise ValueError(f"beta length {beta.shape[0]} does not match "
                         f"{X.shape[1]} columns")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return X @ beta + sigma * rng.standard_normal(X.shape[0])


def ground_truth_markers(path, relevant) -> GroundTruth:
    """m0 = leading run of relevant entries; m1 = last relevant entry.

    ``path`` may also be a plain sequence of entered variable indices.
    """
    rel = set(int(j) for j in relevant)
    entering = getattr(path, "entering", path)
    flags = [int(j) in rel for j in entering]
    m0 = 0
    for f in flags:
        if not f:
            break
        m0 += 1
    m1 = 0
    for i, f in enumerate(flags):
        if f:
            m1 = i + 1
    return GroundTruth(relevant=tuple(sorted(rel)), m0=m0, m1=m1)


def score(selection: SelectionResult, truth: GroundTruth, path) -> Metrics:
    """TPP / FDP / specificity / g-measure against the path ground truth.

    Denominators follow the on-path convention: TPP counts relevant
    variables that entered the path, specificity counts noise entries.
    Empty denominators give TPP 0, FDP 0, specificity 1.  ``path`` may be
    a SolutionPath or a plain sequence of entered variable indices.
    """
    rel = set(truth.relevant)
    entered = [int(j) for j in getattr(path, "entering", path)]
    rel_on_path = sum(1 for j in entered if j in rel)
    noise_on_path = len(entered) - rel_on_path
    selected = set(selection.selected)
    tp = len(selected & rel)
    fp = len(selected) - tp
    tpp = tp / rel_on_path if rel_on_path else 0.0
    fdp = fp / len(selected) if selected else 0.0
    specificity = ((noise_on_path - fp) / noise_on_path
                   if noise_on_path else 1.0)
    return Metrics(tpp=tpp, fdp=fdp, specificity=specificity,
                   g_measure=float(np.sqrt(specificity * tpp)))


def _empty_q():
    return QSeries(q=np.zeros(0))


def _run_selector(method, q, path, data, config, c_m, cv_rng):
    if method == "qvs":
        return qvs_select(q, c_m, path=path)
    if method == "q-bon":
        return q_bon(q, config.level, path=path)
    if method == "q-fdr":
        return q_fdr(q, config.level, path=path)
    if method == "bic":
        return bic_select(path, data)
    if method == "lcv":
        return cv_select(data, folds=10, rng=cv_rng)
    raise ValueError(f"unknown method {method!r}")


def _one_replication(config, c_m, rep):
    rng = rand.substream(config.seed, rand.SCENARIO, rep)
    # the response uses the raw Gaussian design (coefficients live on that
    # scale); the path then runs on standardized predictors
    X_raw = gaussian_design(config.n, config.p, config.cov, rng)
    beta, relevant = gen_truth(config.p, config.s, config.beta_value, rng)
    y = gen_response(X_raw, beta, config.sigma, rng)
    sigma2 = max(config.sigma ** 2, 1e-12)
    data = RegressionData(standardize(X_raw), y, sigma2=sigma2)
    path = fit_path(data)
    if path.m:
        q = q_statistics(covariance_test(path, data, sigma2=sigma2))
    else:
        q = _empty_q()
    truth = ground_truth_markers(path, relevant)
    row = {"m0": truth.m0, "m1": truth.m1, "m": path.m}
    for method in config.methods:
        cv_rng = rand.substream(config.seed, rand.CROSSVAL, rep)
        sel = _run_selector(method, q, path, data, config, c_m, cv_rng)
        met = score(sel, truth, path)
        row[method] = (sel.k_hat, met.tpp, met.fdp, met.g_measure)
    return row


def _se(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def run_scenario(config: ScenarioConfig, calibration: CalibrationRecord,
                 threads: int = 1) -> ScenarioReport:
    """Run all replications of a scenario and aggregate per-method stats.

    ``calibration`` must match the scenario shape (same n and p).
    """
    if (calibration.n, calibration.p) != (config.n, config.p):
        raise ValueError(
            f"calibration is for shape ({calibration.n}, {calibration.p}) "
            f"but the scenario has ({config.n}, {config.p})")
    c_m = calibration.c_m
    if threads > 1:
        rows = Parallel(n_jobs=threads)(
            delayed(_one_replication)(config, c_m, r)
            for r in range(config.reps))
    else:
        rows = [_one_replication(config, c_m, r) for r in range(config.reps)]

    m0 = np.array([r["m0"] for r in rows], dtype=float)
    m1 = np.array([r["m1"] for r in rows], dtype=float)
    mm = np.array([r["m"] for r in rows], dtype=float)
    raw = {"m0": m0, "m1": m1, "m": mm}
    agg = {name: {} for name in ("k_hat_mean", "k_hat_se", "tpp_mean",
                                 "tpp_se", "fdp_mean", "fdp_se", "g_mean",
                                 "g_se", "freq_ge_m0", "freq_le_m1")}
    for method in config.methods:
        vals = np.array([r[method] for r in rows], dtype=float)
        k_hat, tpp, fdp, g = vals.T
        raw[method] = vals
        agg["k_hat_mean"][method] = float(k_hat.mean())
        agg["k_hat_se"][method] = _se(k_hat)
        agg["tpp_mean"][method] = float(tpp.mean())
        agg["tpp_se"][method] = _se(tpp)
        agg["fdp_mean"][method] = float(fdp.mean())
        agg["fdp_se"][method] = _se(fdp)
        agg["g_mean"][method] = float(g.mean())
        agg["g_se"][method] = _se(g)
        agg["freq_ge_m0"][method] = float(np.mean(k_hat >= m0))
        agg["freq_le_m1"][method] = float(np.mean(k_hat <= m1))
    return ScenarioReport(config=config, c_m=c_m, methods=config.methods,
                          m0_mean=float(m0.mean()), m1_mean=float(m1.mean()),
                          m_mean=float(mm.mean()), raw=raw, **agg)


def _table1_preset(p, s):
    return ScenarioConfig(n=200, p=p, s=s, beta_value=0.3, cov="identity",
                          sigma=1.0, reps=100, seed=1, methods=("qvs",),
                          calib_reps=1000)


PRESETS = {
    "table1_row1": _table1_preset(2000, 10),
    "table1_row2": _table1_preset(2000, 20),
    "table1_row3": _table1_preset(2000, 30),
    "table1_row4": _table1_preset(2000, 40),
    "table1_row5": _table1_preset(10000, 10),
    "table1_row6": _table1_preset(10000, 20),
    "table1_row7": _table1_preset(10000, 30),
    "table1_row8": _table1_preset(10000, 40),
    # reduced-dimension variant of the first row for quick runs
    "smoke": ScenarioConfig(n=200, p=400, s=10, beta_value=0.3,
                            cov="ar1(0.5)", sigma=1.0, reps=100, seed=1,
                            methods=("qvs",), calib_reps=300),
    # strong signals, fully separated path
    "perfect_sep": ScenarioConfig(n=200, p=400, s=5, beta_value=2.0,
                                  cov="identity", sigma=1.0, reps=100,
                                  seed=1, methods=("qvs", "q-fdr"),
                                  calib_reps=300),
}

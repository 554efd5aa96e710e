"""Monte-Carlo calibration of the bounding sequence c_m.

The selection cut-off needs a bound on the normalized deviation of an
empirical uniform process,

    V_m = sup_t (U_m(t) - t) / sqrt(t (1 - t)),

exceeded with probability below alpha_m = 1 / sqrt(log m).  Two samplers
are provided: the direct uniform oracle for V_m, and the null-model
solution-path simulation in which V_m is evaluated on the Q statistics of
a pure-noise regression (restricted to the first half of the path).  The
resulting c_m is cached per problem shape.
"""

import os
import tempfile
from dataclasses import dataclass, asdict

import numpy as np
from joblib import Parallel, delayed

from . import rand
from .data import RegressionData
from .designs import format_cov, gen_design
from .inference import covariance_test, q_statistics
from .path import fit_path

__all__ = [
    "CalibrationRecord",
    "alpha_m",
    "simulate_vm_uniform",
    "simulate_vm_path",
    "bounding_sequence",
    "calibrate",
    "load_calibration",
]

CACHE_FILENAME = "calibration.tsv"
_CACHE_FIELDS = ("m", "n", "p", "design", "method", "alpha_m", "c_m",
                 "reps", "seed")

METHOD_NULL_PATH = "null-path"
METHOD_UNIFORM = "uniform-oracle"


@dataclass(frozen=True)
class CalibrationRecord:
    """One calibrated bounding value and how it was produced."""

    m: int
    n: int
    p: int
    design: str
    method: str
    alpha_m: float
    c_m: float
    reps: int
    seed: int


def alpha_m(m: int) -> float:
    """Vanishing exceedance level 1 / sqrt(log m); requires m >= 2."""
    m = int(m)
    if m < 2:
        raise ValueError(f"alpha_m requires m >= 2, got {m}")
    return float(1.0 / np.sqrt(np.log(m)))


def simulate_vm_uniform(m: int, rng) -> float:
    """One draw of V_m from m standard uniforms.

    The supremum of the step process is attained at the sample points, so
    only the order statistics u_(i) are evaluated.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be positive")
    u = np.sort(rng.uniform(size=m))
    i = np.arange(1, m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (i / m - u) / np.sqrt(u * (1.0 - u))
    return float(np.max(ratios))


def vm_from_q(q) -> float:
    """V_m evaluated on a Q series over the first half of the path."""
    q = np.asarray(q, dtype=float)
    m = len(q)
    half = m // 2
    if half < 1:
        return -np.inf
    i = np.arange(1, half + 1)
    qq = np.clip(q[:half], 1e-16, 1.0 - 1e-16)
    return float(np.max((i / m - qq) / np.sqrt(qq * (1.0 - qq))))


def simulate_vm_path(n: int, p: int, design, rng) -> float:
    """One draw of V_m from a null-model solution path.

    Simulates X with rows N_p(0, Sigma) and y ~ N(0, I), fits the path,
    computes covariance and Q statistics with sigma2 = 1, and evaluates
    the normalized deviation over the first half of the path.
    """
    if n < 3 or p < 2:
        raise ValueError("need n >= 3 and p >= 2")
    X = gen_design(n, p, design, rng)
    y = rng.standard_normal(n)
    data = RegressionData(X, y, sigma2=1.0)
    path = fit_path(data)
    if path.m == 0:
        return -np.inf
    T = covariance_test(path, data, sigma2=1.0)
    return vm_from_q(q_statistics(T).q)


def bounding_sequence(samples, alpha: float) -> float:
    """Empirical upper-alpha quantile, rank ceil((1 - alpha) N) ascending."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise ValueError(f"need at least 100 samples, got {samples.size}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    rank = int(np.ceil((1.0 - alpha) * samples.size))
    rank = min(max(rank, 1), samples.size)
    return float(np.sort(samples)[rank - 1])


def _one_draw(method, m, n, p, design, seed, index):
    rng = rand.substream(seed, rand.CALIBRATION, index)
    if method == METHOD_UNIFORM:
        return simulate_vm_uniform(m, rng)
    return simulate_vm_path(n, p, design, rng)


def calibrate(n: int, p: int, design="identity", reps: int = 1000,
              method: str = METHOD_NULL_PATH, seed: int = 0,
              cache_dir=None, threads: int = 1) -> CalibrationRecord:
    """Calibrate c_m for the shape (n, p) and persist it.

    A cached record for the same (n, p, design, method) with matching
    reps and seed is returned as-is; otherwise the simulation runs and
    the cache entry is replaced.
    """
    if method not in (METHOD_NULL_PATH, METHOD_UNIFORM):
        raise ValueError(f"unknown method {method!r}")
    if reps < 100:
        raise ValueError("need reps >= 100")
    design = format_cov(design)
    m = min(n - 1, p)
    if cache_dir is not None:
        cached = load_calibration(cache_dir, n, p, design, method)
        if cached is not None and cached.reps == reps and cached.seed == seed:
            return cached

    alpha = alpha_m(m)
    if threads > 1:
        draws = Parallel(n_jobs=threads)(
            delayed(_one_draw)(method, m, n, p, design, seed, i)
            for i in range(reps))
    else:
        draws = [_one_draw(method, m, n, p, design, seed, i)
                 for i in range(reps)]
    c_m = bounding_sequence(draws, min(alpha, 1.0))
    record = CalibrationRecord(m=m, n=n, p=p, design=design, method=method,
                               alpha_m=alpha, c_m=c_m, reps=reps, seed=seed)
    if cache_dir is not None:
        _cache_put(cache_dir, record)
    return record


# --- cache: one tab-separated record per (n, p, design, method)

def _record_key(rec):
    return (rec.n, rec.p, rec.design, rec.method)


def _format_record(rec):
    d = asdict(rec)
    return "\t".join(repr(float(d[f])) if f in ("alpha_m", "c_m")
                     else str(d[f]) for f in _CACHE_FIELDS)


def _parse_record(line):
    parts = line.rstrip("\n").split("\t")
    if len(parts) != len(_CACHE_FIELDS):
        raise ValueError(f"malformed cache line: {line!r}")
    vals = dict(zip(_CACHE_FIELDS, parts))
    return CalibrationRecord(
        m=int(vals["m"]), n=int(vals["n"]), p=int(vals["p"]),
        design=vals["design"], method=vals["method"],
        alpha_m=float(vals["alpha_m"]), c_m=float(vals["c_m"]),
        reps=int(vals["reps"]), seed=int(vals["seed"]))


def _cache_load(cache_dir):
    path = os.path.join(cache_dir, CACHE_FILENAME)
    records = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = _parse_record(line)
                    records[_record_key(rec)] = rec
    return records


def _cache_put(cache_dir, record):
    os.makedirs(cache_dir, exist_ok=True)
    records = _cache_load(cache_dir)
    records[_record_key(record)] = record
    path = os.path.join(cache_dir, CACHE_FILENAME)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=".calib-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for key in sorted(records):
                fh.write(_format_record(records[key]) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_calibration(cache_dir, n, p, design, method) -> CalibrationRecord | None:
    """Fetch the cached record for (n, p, design, method), if any."""
    design = format_cov(design)
    return _cache_load(cache_dir).get((int(n), int(p), design, method))

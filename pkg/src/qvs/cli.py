"""Command-line front end: CSV analysis, calibration, and simulations.

Subcommands
-----------
path       emit the solution path of a CSV dataset
covtest    emit covariance test statistics along the path
qstat      emit covariance and Q statistics
calibrate  build or update the bounding-sequence cache
select     run the selectors on a CSV dataset (per-knot table + cut-offs)
simulate   run a scenario config, aggregated or per-replication raw rows
metrics    score a selection file against a truth file

All numeric table output uses 12 significant digits so that parsing the
text reproduces the computed values; JSON output carries full precision.
"""

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .calibration import (METHOD_NULL_PATH, METHOD_UNIFORM, calibrate,
                          load_calibration)
from .data import RegressionData, standardize
from .designs import format_cov
from .inference import QSeries, covariance_test, q_statistics
from .path import fit_path
from .selectors import (SelectionResult, bic_select, cv_select, q_bon,
                        q_fdr, qvs_select)
from .simulate import (PRESETS, ScenarioConfig, ground_truth_markers,
                       run_scenario, score)
from . import rand

__all__ = ["AnalysisRequest", "load_csv", "analyze", "main"]

_FLOAT_FMT = "%.12g"


def _fmt(x):
    if isinstance(x, float):
        return _FLOAT_FMT % x
    return str(x)


def _read_matrix(path):
    """Parse a numeric CSV; returns (array, names or None)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise ValueError(f"cannot read {path}: {e}") from e
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    names = None
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        names = [c.strip() for c in rows[0]]
        start = 1
        if len(rows) == 1:
            raise ValueError(f"{path}: no data rows below the header")
    width = len(rows[start])
    data = []
    for i in range(start, len(rows)):
        row = rows[i]
        if len(row) != width:
            raise ValueError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise ValueError(
                f"{path}: non-numeric cell {bad.strip()!r} at row {i + 1}")
    return np.asarray(data), names


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_csv(design_path, response_path, sigma2=None) -> RegressionData:
    """Read design and response CSVs into standardized RegressionData."""
    X, _ = _read_matrix(design_path)
    yv, _ = _read_matrix(response_path)
    if yv.shape[1] != 1:
        raise ValueError(
            f"{response_path}: expected a single column, found {yv.shape[1]}")
    y = yv[:, 0]
    if y.shape[0] != X.shape[0]:
        raise ValueError(
            f"dimension mismatch: design has {X.shape[0]} rows but the "
            f"response has {y.shape[0]}")
    return RegressionData(standardize(X), y, sigma2=sigma2)


@dataclass(frozen=True)
class AnalysisRequest:
    """Inputs of one real-data analysis."""

    design_path: str
    response_path: str
    sigma2: object = "estimate"
    level: float = 0.05
    c_m: float | None = None
    cache_dir: str | None = None
    calib_design: str = "identity"
    calib_method: str = METHOD_NULL_PATH
    methods: tuple = ("qvs", "q-bon", "q-fdr", "bic", "lcv")
    seed: int = 0


@dataclass(frozen=True)
class AnalysisReport:
    knot_rows: tuple     # (k, lambda, variable, T, q)
    selections: tuple    # SelectionResult
    sigma2_used: float
    c_m: float


def _resolve_c_m(request, data):
    if request.c_m is not None:
        return float(request.c_m)
    if request.cache_dir is not None:
        rec = load_calibration(request.cache_dir, data.n, data.p,
                               request.calib_design, request.calib_method)
        if rec is not None:
            return rec.c_m
    raise ValueError(
        f"no calibration available for shape (n={data.n}, p={data.p}); "
        f"run `qvs calibrate --n {data.n} --p {data.p}` first or pass --c-m")


def analyze(request: AnalysisRequest) -> AnalysisReport:
    """Per-knot statistics and every configured selector's cut-off."""
    sigma2 = None if request.sigma2 == "estimate" else float(request.sigma2)
    data = load_csv(request.design_path, request.response_path, sigma2=sigma2)
    c_m = _resolve_c_m(request, data)
    path = fit_path(data)
    if path.m:
        series = covariance_test(path, data)
        q = q_statistics(series)
        sigma2_used = series.sigma2_used
    else:
        q = QSeries(q=np.zeros(0))
        sigma2_used = sigma2 if sigma2 is not None else float("nan")
    rows = tuple(
        (k + 1, float(path.knots[k]), int(path.entering[k]),
         float(series.T[k]), float(q.q[k]))
        for k in range(path.m))
    selections = []
    for method in request.methods:
        if method == "qvs":
            selections.append(qvs_select(q, c_m, path=path))
        elif method == "q-bon":
            selections.append(q_bon(q, request.level, path=path))
        elif method == "q-fdr":
            selections.append(q_fdr(q, request.level, path=path))
        elif method == "bic":
            selections.append(bic_select(path, data))
        elif method == "lcv":
            selections.append(cv_select(
                data, folds=10, rng=rand.substream(request.seed, rand.CROSSVAL)))
        else:
            raise ValueError(f"unknown method {method!r}")
    return AnalysisReport(knot_rows=rows, selections=tuple(selections),
                          sigma2_used=sigma2_used, c_m=c_m)


# --- output helpers

def _emit(text, output):
    if output in (None, "stdout", "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tsv_table(header, rows, preamble=()):
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    buf.write("\t".join(header) + "\n")
    for row in rows:
        buf.write("\t".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- subcommand handlers

def _load_for(args):
    sigma2 = None
    if getattr(args, "sigma2", None) not in (None, "estimate"):
        sigma2 = float(args.sigma2)
    return load_csv(args.design, args.response, sigma2=sigma2)


def _cmd_path(args):
    data = _load_for(args)
    path = fit_path(data, max_steps=args.max_steps)
    header = ("k", "lambda", "variable")
    rows = [(k + 1, float(path.knots[k]), int(path.entering[k]))
            for k in range(path.m)]
    pre = (f"lambda_next={_fmt(path.lambda_next)} complete={path.complete}",)
    if args.format == "json":
        out = _json_dump({"knots": [dict(zip(header, r)) for r in rows],
                          "lambda_next": path.lambda_next,
                          "complete": path.complete})
    else:
        out = _tsv_table(header, rows, pre)
    _emit(out, args.output)


def _series_rows(path, series, q=None):
    rows = []
    for k in range(path.m):
        row = (k + 1, float(path.knots[k]), int(path.entering[k]),
               float(series.T[k]))
        if q is not None:
            row = row + (float(q.q[k]),)
        rows.append(row)
    return rows


def _cmd_covtest(args, with_q=False):
    data = _load_for(args)
    path = fit_path(data)
    if path.m == 0:
        rows, sigma2_used = [], float("nan")
    else:
        series = covariance_test(path, data)
        sigma2_used = series.sigma2_used
        q = q_statistics(series) if with_q else None
        rows = _series_rows(path, series, q)
    header = ("k", "lambda", "variable", "covtest")
    if with_q:
        header = header + ("qstat",)
    pre = (f"sigma2={_fmt(sigma2_used)}",)
    if args.format == "json":
        out = _json_dump({"sigma2": sigma2_used,
                          "rows": [dict(zip(header, r)) for r in rows]})
    else:
        out = _tsv_table(header, rows, pre)
    _emit(out, args.output)


def _cmd_calibrate(args):
    record = calibrate(args.n, args.p, design=args.design, reps=args.reps,
                       method=args.method, seed=args.seed,
                       cache_dir=args.cache_dir, threads=args.threads)
    header = ("m", "n", "p", "design", "method", "alpha_m", "c_m", "reps",
              "seed")
    row = (record.m, record.n, record.p, record.design, record.method,
           record.alpha_m, record.c_m, record.reps, record.seed)
    if args.format == "json":
        out = _json_dump(dict(zip(header, row)))
    else:
        out = _tsv_table(header, [row])
    _emit(out, args.output)


def _cmd_select(args):
    request = AnalysisRequest(
        design_path=args.design, response_path=args.response,
        sigma2=args.sigma2, level=args.level, c_m=args.c_m,
        cache_dir=args.cache_dir, calib_design=args.calib_design,
        calib_method=args.calib_method,
        methods=tuple(args.methods.split(",")), seed=args.seed or 0)
    report = analyze(request)
    knot_header = ("k", "lambda", "variable", "covtest", "qstat")
    sel_header = ("method", "k_hat", "selected")
    sel_rows = [(s.method, s.k_hat, ",".join(str(j) for j in s.selected))
                for s in report.selections]
    if args.format == "json":
        out = _json_dump({
            "sigma2": report.sigma2_used,
            "c_m": report.c_m,
            "knots": [dict(zip(knot_header, r)) for r in report.knot_rows],
            "selections": [
                {"method": s.method, "k_hat": s.k_hat,
                 "selected": list(s.selected)} for s in report.selections],
        })
    else:
        out = _tsv_table(knot_header, report.knot_rows,
                         (f"sigma2={_fmt(report.sigma2_used)} "
                          f"c_m={_fmt(report.c_m)}",))
        out += _tsv_table(sel_header, sel_rows, ("selections",))
    _emit(out, args.output)


_SWEEP_KEYS = ("p", "s", "beta_value")
_CONFIG_KEYS = {"n", "p", "s", "beta_value", "cov", "sigma", "reps", "seed",
                "methods", "level", "calib_reps", "calib_method"}


def parse_config_text(text):
    """Parse `key = value` lines into scenario configs (sweeps expand)."""
    raw = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {ln}: unknown key {key!r}")
        raw[key] = value
    for req in ("n", "p", "s", "beta_value"):
        if req not in raw:
            raise ValueError(f"config is missing required key {req!r}")

    def ints(v):
        return [int(x) for x in v.split(",")]

    def floats(v):
        return [float(x) for x in v.split(",")]

    sweeps = {
        "p": ints(raw["p"]),
        "s": ints(raw["s"]),
        "beta_value": floats(raw["beta_value"]),
    }
    base = dict(
        n=int(raw["n"]),
        cov=raw.get("cov", "identity"),
        sigma=float(raw.get("sigma", 1.0)),
        reps=int(raw.get("reps", 100)),
        seed=int(raw.get("seed", 0)),
        methods=tuple(raw.get("methods", "qvs").split(",")),
        level=float(raw.get("level", 0.05)),
        calib_reps=int(raw.get("calib_reps", 1000)),
        calib_method=raw.get("calib_method", METHOD_NULL_PATH),
    )
    configs = []
    for p, s, b in product(sweeps["p"], sweeps["s"], sweeps["beta_value"]):
        configs.append(ScenarioConfig(p=p, s=s, beta_value=b, **base))
    return configs


def _load_configs(name_or_path):
    if os.path.exists(name_or_path):
        with open(name_or_path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    if name_or_path in PRESETS:
        return [PRESETS[name_or_path]]
    raise ValueError(f"config {name_or_path!r} is neither a file nor one of "
                     f"the presets {sorted(PRESETS)}")


_REPORT_COLUMNS = ("method", "k_hat_mean", "k_hat_se", "tpp_mean", "tpp_se",
                   "fdp_mean", "fdp_se", "g_mean", "g_se", "freq_ge_m0",
                   "freq_le_m1")


def _scenario_preamble(config, record):
    return (
        f"scenario n={config.n} p={config.p} s={config.s} "
        f"beta_value={_fmt(config.beta_value)} cov={config.cov} "
        f"sigma={_fmt(config.sigma)} reps={config.reps} seed={config.seed} "
        f"level={_fmt(config.level)}",
        f"calibration method={record.method} reps={record.reps} "
        f"seed={record.seed} alpha_m={_fmt(record.alpha_m)} "
        f"c_m={_fmt(record.c_m)}",
    )


def _report_tsv(report, record):
    pre = _scenario_preamble(report.config, record) + (
        f"markers m0_mean={_fmt(report.m0_mean)} "
        f"m1_mean={_fmt(report.m1_mean)} m_mean={_fmt(report.m_mean)}",)
    rows = []
    for method in report.methods:
        rows.append((method,
                     report.k_hat_mean[method], report.k_hat_se[method],
                     report.tpp_mean[method], report.tpp_se[method],
                     report.fdp_mean[method], report.fdp_se[method],
                     report.g_mean[method], report.g_se[method],
                     report.freq_ge_m0[method], report.freq_le_m1[method]))
    return _tsv_table(_REPORT_COLUMNS, rows, pre)


def _raw_tsv(report, record):
    pre = _scenario_preamble(report.config, record)
    header = ("rep", "method", "k_hat", "tpp", "fdp", "g", "m0", "m1", "m")
    rows = []
    for rep in range(report.config.reps):
        for method in report.methods:
            k_hat, tpp, fdp, g = report.raw[method][rep]
            rows.append((rep, method, int(k_hat), tpp, fdp, g,
                         int(report.raw["m0"][rep]),
                         int(report.raw["m1"][rep]),
                         int(report.raw["m"][rep])))
    return _tsv_table(header, rows, pre)


def _report_json(report, record, raw):
    obj = {
        "config": {
            "n": report.config.n, "p": report.config.p, "s": report.config.s,
            "beta_value": report.config.beta_value, "cov": report.config.cov,
            "sigma": report.config.sigma, "reps": report.config.reps,
            "seed": report.config.seed, "level": report.config.level,
            "methods": list(report.methods),
        },
        "calibration": {"method": record.method, "reps": record.reps,
                        "seed": record.seed, "alpha_m": record.alpha_m,
                        "c_m": record.c_m},
        "markers": {"m0_mean": report.m0_mean, "m1_mean": report.m1_mean,
                    "m_mean": report.m_mean},
        "methods": {},
    }
    for method in report.methods:
        obj["methods"][method] = {
            "k_hat_mean": report.k_hat_mean[method],
            "k_hat_se": report.k_hat_se[method],
            "tpp_mean": report.tpp_mean[method],
            "tpp_se": report.tpp_se[method],
            "fdp_mean": report.fdp_mean[method],
            "fdp_se": report.fdp_se[method],
            "g_mean": report.g_mean[method],
            "g_se": report.g_se[method],
            "freq_ge_m0": report.freq_ge_m0[method],
            "freq_le_m1": report.freq_le_m1[method],
        }
    if raw:
        obj["raw"] = {k: np.asarray(v).tolist() for k, v in report.raw.items()}
    return obj


def _cmd_simulate(args):
    configs = _load_configs(args.config)
    chunks = []
    for config in configs:
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        record = calibrate(config.n, config.p, design=config.cov,
                           reps=config.calib_reps, method=config.calib_method,
                           seed=config.seed, cache_dir=args.cache_dir,
                           threads=args.threads)
        report = run_scenario(config, record, threads=args.threads)
        if args.format == "json":
            chunks.append(_report_json(report, record, args.raw))
        elif args.raw:
            chunks.append(_raw_tsv(report, record))
        else:
            chunks.append(_report_tsv(report, record))
    if args.format == "json":
        out = _json_dump(chunks if len(chunks) > 1 else chunks[0])
    else:
        out = "".join(chunks)
    _emit(out, args.output)


def _read_int_list(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return [int(tok) for tok in re.findall(r"-?\d+", text)]


def _cmd_metrics(args):
    entered = []
    with open(args.path_file, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split("\t")
            if cells[0] == "k":
                continue
            entered.append(int(cells[2]))
    selected = _read_int_list(args.selected)
    relevant = _read_int_list(args.truth)
    truth = ground_truth_markers(entered, relevant)
    selection = SelectionResult("file", len(selected), tuple(selected))
    met = score(selection, truth, entered)
    header = ("tpp", "fdp", "specificity", "g_measure", "m0", "m1")
    row = (met.tpp, met.fdp, met.specificity, met.g_measure, truth.m0,
           truth.m1)
    if args.format == "json":
        out = _json_dump(dict(zip(header, row)))
    else:
        out = _tsv_table(header, [row])
    _emit(out, args.output)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed override (default: command-specific)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--cache-dir", default=".qvs-cache")
    common.add_argument("--output", default="stdout",
                        help="output file path or 'stdout'")
    common.add_argument("--format", choices=("tsv", "json"), default="tsv")

    parser = argparse.ArgumentParser(
        prog="qvs",
        description="Post-lasso variable selection via Q statistics")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--design", required=True, help="design CSV path")
        sp.add_argument("--response", required=True, help="response CSV path")
        sp.add_argument("--sigma2", default="estimate",
                        help="noise variance or 'estimate'")

    sp = sub.add_parser("path", parents=[common],
                        help="emit the lasso solution path")
    data_args(sp)
    sp.add_argument("--max-steps", type=int, default=None)
    sp.set_defaults(func=_cmd_path)

    sp = sub.add_parser("covtest", parents=[common],
                        help="emit covariance test statistics")
    data_args(sp)
    sp.set_defaults(func=lambda a: _cmd_covtest(a, with_q=False))

    sp = sub.add_parser("qstat", parents=[common],
                        help="emit covariance and Q statistics")
    data_args(sp)
    sp.set_defaults(func=lambda a: _cmd_covtest(a, with_q=True))

    sp = sub.add_parser("calibrate", parents=[common],
                        help="build or update the c_m cache")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--design", default="identity")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--method",
                    choices=(METHOD_NULL_PATH, METHOD_UNIFORM),
                    default=METHOD_NULL_PATH)
    sp.set_defaults(func=_cmd_calibrate, seed_default=0)

    sp = sub.add_parser("select", parents=[common],
                        help="run selectors on a CSV dataset")
    data_args(sp)
    sp.add_argument("--level", type=float, default=0.05)
    sp.add_argument("--methods", default="qvs,q-bon,q-fdr,bic,lcv")
    sp.add_argument("--c-m", type=float, default=None, dest="c_m")
    sp.add_argument("--calib-design", default="identity")
    sp.add_argument("--calib-method",
                    choices=(METHOD_NULL_PATH, METHOD_UNIFORM),
                    default=METHOD_NULL_PATH)
    sp.set_defaults(func=_cmd_select)

    sp = sub.add_parser("simulate", parents=[common],
                        help="run a scenario config or preset")
    sp.add_argument("--config", required=True,
                    help="config file path or preset name")
    sp.add_argument("--raw", action="store_true",
                    help="emit per-replication rows instead of aggregates")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("metrics", parents=[common],
                        help="score a selection file against a truth file")
    sp.add_argument("--path-file", required=True,
                    help="TSV produced by the path/covtest/qstat commands")
    sp.add_argument("--selected", required=True,
                    help="file of selected variable indices")
    sp.add_argument("--truth", required=True,
                    help="file of truly relevant variable indices")
    sp.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.seed is None and hasattr(args, "seed_default"):
        args.seed = args.seed_default
    try:
        args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

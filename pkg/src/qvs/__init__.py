"""Post-lasso variable selection via Q statistics.

Pipeline: fit the lasso solution path, compute covariance test statistics
at its knots, turn them into Q statistics, and cut the path with the
calibrated QVS rule (or one of the comparison selectors).
"""

from .calibration import (CalibrationRecord, alpha_m, bounding_sequence,
                          calibrate, load_calibration, simulate_vm_path,
                          simulate_vm_uniform)
from .cli import AnalysisRequest, analyze, load_csv
from .data import ConstantColumnError, RegressionData, standardize
from .estimator import QVSSelector
from .inference import (CovTestSeries, QSeries, covariance_test,
                        covtest_orthogonal, q_statistics)
from .path import (CoefficientVector, PathEvent, SingularGramError,
                   SolutionPath, fit_path, kkt_residual, lasso_at)
from .selectors import (SelectionResult, bic_select, cv_select, q_bon,
                        q_fdr, qvs_select)
from .simulate import (PRESETS, GroundTruth, Metrics, ScenarioConfig,
                       ScenarioReport, gen_design, gen_response, gen_truth,
                       ground_truth_markers, run_scenario, score)

__version__ = "0.1.0"

__all__ = [
    "AnalysisRequest",
    "CalibrationRecord",
    "CoefficientVector",
    "ConstantColumnError",
    "CovTestSeries",
    "GroundTruth",
    "Metrics",
    "PathEvent",
    "PRESETS",
    "QSeries",
    "QVSSelector",
    "RegressionData",
    "ScenarioConfig",
    "ScenarioReport",
    "SelectionResult",
    "SingularGramError",
    "SolutionPath",
    "alpha_m",
    "analyze",
    "bounding_sequence",
    "calibrate",
    "covariance_test",
    "covtest_orthogonal",
    "cv_select",
    "fit_path",
    "gen_design",
    "gen_response",
    "gen_truth",
    "ground_truth_markers",
    "kkt_residual",
    "lasso_at",
    "load_calibration",
    "load_csv",
    "q_bon",
    "q_fdr",
    "q_statistics",
    "qvs_select",
    "run_scenario",
    "score",
    "simulate_vm_path",
    "simulate_vm_uniform",
    "standardize",
    "__version__",
]

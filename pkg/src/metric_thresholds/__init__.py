"""Defect-risk thresholds for object-oriented metrics.

Fits univariate logistic risk models per system version, corrects
their intercepts for class imbalance, converts them into integer
metric thresholds at an acceptable risk level, learns how those
thresholds scale with system size, and evaluates the result with
imbalance-insensitive classification scores and rank tests.
"""

__version__ = "0.1.0"

from .config import RunConfig, ThresholdConfig
from .dataset import (
    CANONICAL_METRICS,
    ClassRecord,
    ColumnSchema,
    Corpus,
    MetricId,
    SystemDataset,
    defect_ratio,
    latest_versions,
    load_corpus,
    population_defect_ratio,
    system_size,
)
from .errors import DataError, NumericalError, ThresholdToolError
from .estimation import (
    CorrelationResult,
    EstimationModel,
    SizeThresholdPair,
    build_pairs,
    dedup_latest,
    estimate_threshold,
    fit_ols,
    leave_one_system_out,
    screen_metrics,
    spearman,
)
from .evaluation import (
    ConfusionMatrix,
    RankTestResult,
    classify_by_threshold,
    compare_nb_models,
    friedman_test,
    g_mean,
    loocv_nb,
    nemenyi_cd,
)
from .fixtures import estimate_from_fixture
from .logit import (
    CorrectionContext,
    LogisticFit,
    RiskParams,
    ThresholdResult,
    acceptable_risk,
    background_risk,
    calc_system_thresholds,
    correct_intercept,
    finalize_threshold,
    fit_univariate_logistic,
    risk_at,
    varl_threshold,
)
from .pipeline import run_pipeline
from .synth import (
    PlantedMetric,
    SyntheticSpec,
    generate_synthetic,
    load_spec,
    planted_alpha_for_size,
)

__all__ = [
    "__version__",
    "RunConfig",
    "ThresholdConfig",
    "MetricId",
    "ClassRecord",
    "SystemDataset",
    "Corpus",
    "ColumnSchema",
    "CANONICAL_METRICS",
    "load_corpus",
    "defect_ratio",
    "population_defect_ratio",
    "system_size",
    "latest_versions",
    "ThresholdToolError",
    "DataError",
    "NumericalError",
    "LogisticFit",
    "CorrectionContext",
    "RiskParams",
    "ThresholdResult",
    "fit_univariate_logistic",
    "risk_at",
    "background_risk",
    "correct_intercept",
    "acceptable_risk",
    "varl_threshold",
    "finalize_threshold",
    "calc_system_thresholds",
    "SizeThresholdPair",
    "CorrelationResult",
    "EstimationModel",
    "build_pairs",
    "dedup_latest",
    "spearman",
    "fit_ols",
    "estimate_threshold",
    "leave_one_system_out",
    "screen_metrics",
    "ConfusionMatrix",
    "RankTestResult",
    "classify_by_threshold",
    "g_mean",
    "loocv_nb",
    "friedman_test",
    "nemenyi_cd",
    "compare_nb_models",
    "estimate_from_fixture",
    "run_pipeline",
    "PlantedMetric",
    "SyntheticSpec",
    "generate_synthetic",
    "load_spec",
    "planted_alpha_for_size",
]

"""Adaptive detection of range-migrating radar targets.

A target moving fast enough to cross range gates within one coherent burst
leaves its energy spread over a contiguous block of pulses. This package
models that geometry, implements a bank of detectors that estimate the
occupied block with penalized model-order-selection rules, and benchmarks
them with a reproducible Monte Carlo engine (threshold calibration to a
false-alarm target, detection probability and support-RMSE curves).

The detectors follow the scikit-learn estimator protocol: construct with
hyperparameters, ``fit`` on target-free trials to calibrate a threshold,
then ``decision_function`` / ``predict`` on new trials.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConfigMismatch,
    DimensionMismatch,
    InsufficientTrials,
    MosdetError,
    NotPositiveDefinite,
    NumericalError,
)
from .linalg import (
    HermitianPD,
    cholesky,
    logdet,
    quad_form,
    rank_one_logdet_update,
    sample_cn,
    sample_cn_cols,
    solve,
)
from .scenario import (
    PulseTiming,
    ScenarioConfig,
    SupportHypothesis,
    TrialData,
    alpha_from_sinr,
    draw_support,
    gate_assignments,
    interference_covariance,
    range_gate_occupancy,
    rect_ambiguity,
    steering_vector,
    synthesize_trial,
)
from .detectors import (
    DETECTOR_IDS,
    SELECTOR_IDS,
    CellStatistics,
    DetectorOutput,
    SelectionResult,
    amf_cell_statistics,
    clairvoyant_detect,
    gamf_detect,
    gic_amf_select,
    gic_joint_select,
    one_stage_amf_detect,
    one_stage_joint_detect,
    support_candidates,
    two_stage_detect,
)
from .montecarlo import (
    CalibrationResult,
    ExperimentConfig,
    ExperimentReport,
    PdPoint,
    PfaCheck,
    RmsePoint,
    calibrate_bank,
    calibrate_threshold,
    estimate_pd,
    estimate_pd_bank,
    estimate_rmse,
    experiment_config_hash,
    measure_pfa,
    order_statistic_threshold,
    run_experiment,
)
from .estimators import (
    BaseDetector,
    ClairvoyantDetector,
    GamfDetector,
    OneStageAmfGic,
    OneStageJointGic,
    TwoStageAmfGic,
    TwoStageJointGic,
    build_detector_bank,
)

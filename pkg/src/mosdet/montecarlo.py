"""Reproducible Monte Carlo engine: threshold calibration, detection and
estimation curves.

Every trial draws from a counter-based substream keyed by (master seed,
phase, trial index), so runs are pure functions of configuration and seed,
independent of execution order and worker count. Detection-probability
sweeps reuse the same substreams at every SINR grid point (common random
numbers), which leaves per-point estimates unbiased while smoothing the
curves.
"""

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _batch
from .detectors import DETECTOR_IDS, SELECTOR_IDS
from .errors import ConfigError, ConfigMismatch, InsufficientTrials
from .scenario import ScenarioConfig

__all__ = [
    "ExperimentConfig",
    "CalibrationResult",
    "PdPoint",
    "RmsePoint",
    "PfaCheck",
    "ExperimentReport",
    "experiment_config_hash",
    "order_statistic_threshold",
    "calibrate_threshold",
    "calibrate_bank",
    "estimate_pd",
    "estimate_pd_bank",
    "estimate_rmse",
    "measure_pfa",
    "run_experiment",
]

PHASE_CALIBRATE = 1
PHASE_PFA_CHECK = 2
PHASE_PD = 3
PHASE_RMSE = 4

# Selection rule backing each detector's support estimate.
_SELECTOR_OF = {
    "two_stage_amf_gic": "amf_gic",
    "one_stage_amf_gic": "amf_gic",
    "two_stage_joint_gic": "joint_gic",
    "one_stage_joint_gic": "joint_gic",
}

_MAX_SEED = 2**63


def _default_grid():
    return tuple(float(s) for s in range(0, 25, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    """Scenario, detector set, and Monte Carlo budget of one experiment.

    Desk-scale defaults: target false-alarm rate 1e-3 calibrated on 1e5
    trials (preserving a 100/P_fa trial budget), 1000 trials per curve
    point, SINR grid 0..24 dB in 2 dB steps. The 1e-4 / 1e6-trial setting
    is a configuration switch for a long run.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    detectors: tuple = DETECTOR_IDS
    target_pfa: float = 1e-3
    calibration_trials: int = 100_000
    pd_trials: int = 1000
    rmse_trials: int = 1000
    sinr_grid_db: tuple = field(default_factory=_default_grid)
    master_seed: int = 20260808

    def __post_init__(self):
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(
            self, "sinr_grid_db", tuple(float(s) for s in self.sinr_grid_db)
        )
        unknown = set(self.detectors) - set(DETECTOR_IDS)
        if unknown:
            raise ConfigError(f"unknown detector ids: {sorted(unknown)}")
        if not self.detectors:
            raise ConfigError("at least one detector must be enabled")
        if not 0.0 < self.target_pfa < 1.0:
            raise ConfigError("target_pfa must lie in (0, 1)")
        for name in ("calibration_trials", "pd_trials", "rmse_trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.sinr_grid_db:
            raise ConfigError("sinr_grid_db must be non-empty")
        if not all(math.isfinite(s) for s in self.sinr_grid_db):
            raise ConfigError("sinr_grid_db entries must be finite")
        if not 0 <= self.master_seed < _MAX_SEED:
            raise ConfigError(f"master_seed must lie in [0, 2^63), got {self.master_seed}")

    @property
    def selectors(self):
        """Selection rules exercised by the enabled detectors."""
        used = {_SELECTOR_OF[d] for d in self.detectors if d in _SELECTOR_OF}
        return tuple(s for s in SELECTOR_IDS if s in used)


def experiment_config_hash(config):
    """Stable hash of the fields that make result files compatible.

    Covers the scenario and the false-alarm target: thresholds calibrated
    under one hash are only valid for detection sweeps under the same
    hash. Trial budgets, grids and seeds are execution details recorded
    in the artifacts themselves.
    """
    payload = {
        "scenario": asdict(config.scenario),
        "target_pfa": config.target_pfa,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class CalibrationResult:
    detector_id: str
    threshold: float
    target_pfa: float
    n_trials: int
    empirical_pfa_at_threshold: float
    seed: int
    config_hash: str | None = None


@dataclass
class PdPoint:
    sinr_db: float
    pd: float
    stderr: float
    n_trials: int


@dataclass
class RmsePoint:
    sinr_db: float
    rmse_l: float
    rmse_h: float
    rmse_joint: float
    n_trials: int


@dataclass
class PfaCheck:
    detector_id: str
    threshold: float
    empirical_pfa: float
    n_trials: int


@dataclass
class ExperimentReport:
    """Full experiment outcome; deterministic given config and seed."""

    config: ExperimentConfig
    config_hash: str
    calibrations: list
    pd_curves: dict
    rmse_curves: dict
    timing: dict

    def payload(self, include_timing=False):
        """Plain-dict form of the report; timing excluded by default so
        payloads from runs with different worker counts compare equal."""
        out = {
            "config": asdict(self.config),
            "config_hash": self.config_hash,
            "calibrations": [asdict(c) for c in self.calibrations],
            "pd_curves": {
                k: [asdict(p) for p in pts] for k, pts in self.pd_curves.items()
            },
            "rmse_curves": {
                k: [asdict(p) for p in pts] for k, pts in self.rmse_curves.items()
            },
        }
        if include_timing:
            out["timing"] = dict(self.timing)
        return out


def order_statistic_threshold(statistics, target_pfa):
    """Detection threshold from target-free statistics.

    With m = floor(n · P_fa), the threshold is the (m+1)-th largest
    statistic, so the empirical false-alarm rate at the threshold never
    exceeds the target.
    """
    statistics = np.asarray(statistics, dtype=float)
    n = statistics.size
    if not 0.0 < target_pfa < 1.0:
        raise ConfigError("target_pfa must lie in (0, 1)")
    budget = n * target_pfa + 1e-9
    if budget < 10.0:
        raise InsufficientTrials(
            f"{n} trials cannot calibrate P_fa={target_pfa:g}; need at least "
            f"{math.ceil(10.0 / target_pfa)}"
        )
    if budget < 100.0:
        warnings.warn(
            f"calibrating P_fa={target_pfa:g} on only {n} trials; "
            f"recommend at least {math.ceil(100.0 / target_pfa)}",
            stacklevel=2,
        )
    m = int(budget)
    s = np.sort(statistics)
    return float(s[n - m - 1])


def _run_chunk_task(args):
    config, phase, start, count, master_seed, sinr_db, wanted = args
    return _batch.evaluate_chunk(
        config, phase, start, count, master_seed, sinr_db, wanted
    )


def _collect(config, phase, n_trials, master_seed, sinr_db, wanted, workers):
    """Evaluate ``n_trials`` trials and concatenate per-trial arrays.

    Chunk boundaries depend only on the fixed chunk size, so the result is
    identical for any worker count.
    """
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    wanted = tuple(wanted)
    tasks = [
        (config, phase, start, min(_batch.CHUNK_TRIALS, n_trials - start),
         master_seed, sinr_db, wanted)
        for start in range(0, n_trials, _batch.CHUNK_TRIALS)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk_task, tasks, chunksize=4))
    else:
        chunks = [_run_chunk_task(t) for t in tasks]
    return {
        key: np.concatenate([c[key] for c in chunks]) for key in chunks[0]
    }


def calibrate_bank(detector_ids, config, target_pfa, n_trials, seed,
                   workers=1, config_hash=None):
    """Calibrate thresholds for several detectors on shared target-free data.

    Each target-free trial still draws a support (used only by truth-aware
    detectors), runs every requested detector, and the per-detector
    thresholds come from the order-statistic rule. Calibrating detectors
    one at a time with the same seed gives identical thresholds.
    """
    detector_ids = tuple(detector_ids)
    if n_trials * target_pfa + 1e-9 < 10.0:
        raise InsufficientTrials(
            f"{n_trials} trials cannot calibrate P_fa={target_pfa:g}; need "
            f"at least {math.ceil(10.0 / target_pfa)}"
        )
    res = _collect(config, PHASE_CALIBRATE, n_trials, seed, None,
                   detector_ids, workers)
    out = {}
    for did in detector_ids:
        stats = res[f"stat:{did}"]
        eta = order_statistic_threshold(stats, target_pfa)
        out[did] = CalibrationResult(
            detector_id=did,
            threshold=eta,
            target_pfa=target_pfa,
            n_trials=n_trials,
            empirical_pfa_at_threshold=float(np.mean(stats > eta)),
            seed=seed,
            config_hash=config_hash,
        )
    return out


def calibrate_threshold(detector_id, config, target_pfa, n_trials, seed,
                        workers=1, config_hash=None):
    """Calibrate one detector's threshold to a target false-alarm rate."""
    return calibrate_bank(
        (detector_id,), config, target_pfa, n_trials, seed, workers, config_hash
    )[detector_id]


def _check_calibration(threshold, config_hash):
    if isinstance(threshold, CalibrationResult):
        if (
            config_hash is not None
            and threshold.config_hash is not None
            and threshold.config_hash != config_hash
        ):
            raise ConfigMismatch(
                f"threshold for {threshold.detector_id} was calibrated under "
                f"config {threshold.config_hash}, not {config_hash}"
            )
        return threshold.threshold
    return float(threshold)


def estimate_pd_bank(thresholds, config, sinr_grid_db, n_trials, seed,
                     workers=1, config_hash=None):
    """Detection probability versus SINR for a bank of detectors.

    ``thresholds`` maps detector id to a threshold or CalibrationResult.
    Per grid point and trial, the support is drawn (extension uniform, then
    start uniform), data synthesized at the point's SINR, and detections
    counted as statistic > threshold.
    """
    etas = {d: _check_calibration(t, config_hash) for d, t in thresholds.items()}
    curves = {d: [] for d in etas}
    for sinr_db in sinr_grid_db:
        res = _collect(config, PHASE_PD, n_trials, seed, float(sinr_db),
                       tuple(etas), workers)
        for did, eta in etas.items():
            pd = float(np.mean(res[f"stat:{did}"] > eta))
            curves[did].append(
                PdPoint(
                    sinr_db=float(sinr_db),
                    pd=pd,
                    stderr=math.sqrt(pd * (1.0 - pd) / n_trials),
                    n_trials=n_trials,
                )
            )
    return curves


def estimate_pd(detector_id, threshold, config, sinr_grid_db, n_trials, seed,
                workers=1, config_hash=None):
    """Detection curve of a single detector at a calibrated threshold."""
    return estimate_pd_bank(
        {detector_id: threshold}, config, sinr_grid_db, n_trials, seed,
        workers, config_hash,
    )[detector_id]


def estimate_rmse(selector_id, config, sinr_grid_db, n_trials, seed, workers=1):
    """Root-mean-square support-estimation error versus SINR.

    Per trial the true support is drawn as in the detection sweep; the
    selector's estimate is compared componentwise and jointly:
    rmse_joint = sqrt(mean[(l̂-l)² + (ĥ-h)²]).
    """
    if selector_id not in SELECTOR_IDS:
        raise ConfigError(f"unknown selector id: {selector_id}")
    points = []
    for sinr_db in sinr_grid_db:
        res = _collect(config, PHASE_RMSE, n_trials, seed, float(sinr_db),
                       (selector_id,), workers)
        dl = res[f"sel_l:{selector_id}"] - res["l_true"]
        dh = res[f"sel_h:{selector_id}"] - res["h_true"]
        mse_l = float(np.mean(dl.astype(float) ** 2))
        mse_h = float(np.mean(dh.astype(float) ** 2))
        points.append(
            RmsePoint(
                sinr_db=float(sinr_db),
                rmse_l=math.sqrt(mse_l),
                rmse_h=math.sqrt(mse_h),
                rmse_joint=math.sqrt(mse_l + mse_h),
                n_trials=n_trials,
            )
        )
    return points


def measure_pfa(thresholds, config, n_trials, seed, workers=1):
    """Empirical false-alarm rate on a fresh target-free batch.

    The batch comes from a dedicated phase tag, so it never overlaps the
    calibration data even under the same master seed.
    """
    etas = {d: _check_calibration(t, None) for d, t in thresholds.items()}
    res = _collect(config, PHASE_PFA_CHECK, n_trials, seed, None,
                   tuple(etas), workers)
    return {
        did: PfaCheck(
            detector_id=did,
            threshold=eta,
            empirical_pfa=float(np.mean(res[f"stat:{did}"] > eta)),
            n_trials=n_trials,
        )
        for did, eta in etas.items()
    }


def run_experiment(config, workers=1):
    """Calibrate every enabled detector, then run the detection and
    estimation sweeps; the report is a pure function of (config, seed)."""
    chash = experiment_config_hash(config)
    timing = {}
    t0 = time.perf_counter()
    calibrations = calibrate_bank(
        config.detectors, config.scenario, config.target_pfa,
        config.calibration_trials, config.master_seed, workers, chash,
    )
    timing["calibrate_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pd_curves = estimate_pd_bank(
        calibrations, config.scenario, config.sinr_grid_db,
        config.pd_trials, config.master_seed, workers, chash,
    )
    timing["pd_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rmse_curves = {
        sel: estimate_rmse(
            sel, config.scenario, config.sinr_grid_db,
            config.rmse_trials, config.master_seed, workers,
        )
        for sel in config.selectors
    }
    timing["rmse_s"] = time.perf_counter() - t0

    n_curve_trials = (
        config.pd_trials + config.rmse_trials * max(1, len(config.selectors))
    ) * len(config.sinr_grid_db)
    total_s = sum(timing.values())
    timing["trials_per_s"] = (
        (config.calibration_trials + n_curve_trials) / total_s if total_s else 0.0
    )
    return ExperimentReport(
        config=config,
        config_hash=chash,
        calibrations=[calibrations[d] for d in config.detectors],
        pd_curves=pd_curves,
        rmse_curves=rmse_curves,
        timing=timing,
    )

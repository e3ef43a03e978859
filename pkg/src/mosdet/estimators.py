"""Scikit-learn style detector estimators.

Each detector is an estimator whose hyperparameters live in ``__init__``
(and are therefore visible to ``get_params``/``set_params``/``clone``),
whose ``fit`` calibrates a detection threshold on target-free trials in
the style of a novelty detector, and whose ``decision_function`` /
``predict`` score new trials:

    >>> det = OneStageJointGic(steering=v).fit(h0_trials)
    >>> det.predict(new_trials)            # boolean detections
    >>> det.decision_function(new_trials)  # raw statistics

A trial is a :class:`~mosdet.scenario.TrialData` or a ``(Z, R)`` pair of
complex matrices. The false-alarm budget ``pfa`` plays the role sklearn's
novelty detectors give to ``contamination``: ``fit`` places ``threshold_``
at the empirical (1 - pfa) quantile of the statistic on the supplied
target-free trials, using the conservative order-statistic rule from the
Monte Carlo engine.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import detectors, linalg
from .errors import ConfigError
from .montecarlo import order_statistic_threshold
from .scenario import TrialData, interference_covariance, steering_vector
from .validation import as_complex_vector

__all__ = [
    "BaseDetector",
    "TwoStageAmfGic",
    "TwoStageJointGic",
    "OneStageAmfGic",
    "OneStageJointGic",
    "GamfDetector",
    "ClairvoyantDetector",
    "build_detector_bank",
]


def _as_trial(x):
    if isinstance(x, TrialData):
        return x
    Z, R = x
    return TrialData(Z=np.asarray(Z), R=np.asarray(R))


class BaseDetector(BaseEstimator):
    """Common fit/predict machinery; subclasses implement `_evaluate`."""

    detector_id = None

    def _context(self):
        """Validated per-call state shared by every trial of a batch."""
        if self.steering is None:
            raise ConfigError(f"{type(self).__name__} needs a steering vector")
        return {"v": as_complex_vector(self.steering, "steering")}

    def evaluate(self, trial):
        """Score a single trial, returning the full detector output."""
        out = self._evaluate(_as_trial(trial), self._context())
        if getattr(self, "threshold_", None) is not None:
            out.decision = bool(out.statistic > self.threshold_)
        return out

    def decision_function(self, X):
        """Decision statistic for each trial in ``X``."""
        ctx = self._context()
        return np.array([self._evaluate(_as_trial(x), ctx).statistic for x in X])

    def fit(self, X, y=None):
        """Calibrate ``threshold_`` from target-free trials at rate ``pfa``."""
        stats = self.decision_function(X)
        self.threshold_ = order_statistic_threshold(stats, self.pfa)
        self.n_calibration_trials_ = stats.size
        self.empirical_pfa_ = float(np.mean(stats > self.threshold_))
        return self

    def predict(self, X):
        """Boolean detection decisions at the fitted threshold."""
        if getattr(self, "threshold_", None) is None:
            raise NotFittedError(
                f"{type(self).__name__} has no threshold; call fit first"
            )
        return self.decision_function(X) > self.threshold_


class TwoStageAmfGic(BaseDetector):
    """Cell-sum selection rule followed by the matched-filter sum over the
    selected support."""

    detector_id = "two_stage_amf_gic"

    def __init__(self, steering=None, rho=11.0, pfa=1e-3):
        self.steering = steering
        self.rho = rho
        self.pfa = pfa

    def _evaluate(self, trial, ctx):
        stats = detectors.amf_cell_statistics(trial.Z, trial.R, ctx["v"])
        sel = detectors.gic_amf_select(stats, trial.R.shape[1], self.rho)
        return detectors.DetectorOutput(
            statistic=stats.support_sum(sel.support), support=sel.support
        )


class TwoStageJointGic(BaseDetector):
    """Joint-covariance selection rule followed by the matched-filter sum
    over the selected support."""

    detector_id = "two_stage_joint_gic"

    def __init__(self, steering=None, rho=5.0, pfa=1e-3):
        self.steering = steering
        self.rho = rho
        self.pfa = pfa

    def _evaluate(self, trial, ctx):
        sel = detectors.gic_joint_select(trial.Z, trial.R, ctx["v"], self.rho)
        stats = detectors.amf_cell_statistics(trial.Z, trial.R, ctx["v"])
        return detectors.DetectorOutput(
            statistic=stats.support_sum(sel.support), support=sel.support
        )


class OneStageAmfGic(BaseDetector):
    """Single-stage detector thresholding the penalized cell-sum score."""

    detector_id = "one_stage_amf_gic"

    def __init__(self, steering=None, rho=11.0, pfa=1e-3):
        self.steering = steering
        self.rho = rho
        self.pfa = pfa

    def _evaluate(self, trial, ctx):
        return detectors.one_stage_amf_detect(
            trial.Z, trial.R, ctx["v"], trial.R.shape[1], self.rho
        )


class OneStageJointGic(BaseDetector):
    """Single-stage detector thresholding the penalized joint-covariance
    score."""

    detector_id = "one_stage_joint_gic"

    def __init__(self, steering=None, rho=5.0, pfa=1e-3):
        self.steering = steering
        self.rho = rho
        self.pfa = pfa

    def _evaluate(self, trial, ctx):
        return detectors.one_stage_joint_detect(trial.Z, trial.R, ctx["v"], self.rho)


class GamfDetector(BaseDetector):
    """Range-spread baseline summing the matched-filter statistic over the
    whole burst."""

    detector_id = "gamf"

    def __init__(self, steering=None, pfa=1e-3):
        self.steering = steering
        self.pfa = pfa

    def _evaluate(self, trial, ctx):
        return detectors.gamf_detect(trial.Z, trial.R, ctx["v"])


class ClairvoyantDetector(BaseDetector):
    """Upper-bound detector that knows the interference covariance and the
    true support; trials must carry a support in ``truth``.

    The decision statistic is the width-normalized tail exponent of the
    known-covariance energy sum, so one threshold controls the false-alarm
    rate conditionally on every true support width.
    """

    detector_id = "clairvoyant"

    def __init__(self, steering=None, covariance=None, pfa=1e-3):
        self.steering = steering
        self.covariance = covariance
        self.pfa = pfa

    def _context(self):
        ctx = super()._context()
        if self.covariance is None:
            raise ConfigError("ClairvoyantDetector needs the true covariance")
        ctx["m"] = (
            self.covariance
            if isinstance(self.covariance, linalg.HermitianPD)
            else linalg.cholesky(self.covariance)
        )
        return ctx

    def _evaluate(self, trial, ctx):
        if trial.truth is None:
            raise ConfigError(
                "clairvoyant detector needs trials with a recorded support"
            )
        raw = detectors.clairvoyant_detect(trial.Z, ctx["m"], ctx["v"], trial.truth)
        return detectors.DetectorOutput(
            statistic=detectors.clairvoyant_normalized(
                raw.statistic, trial.truth.width
            ),
            support=trial.truth,
        )


def build_detector_bank(config, include=detectors.DETECTOR_IDS, pfa=1e-3):
    """Instantiate the standard detector bank for a scenario.

    Tuning parameters come from the scenario config: the cell-sum family
    uses ``gic_rho_two_step`` and the joint family ``gic_rho_joint``. The
    clairvoyant detector receives the scenario's true covariance.
    """
    v = steering_vector(config.n_antennas, config.spatial_frequency)
    factories = {
        "two_stage_amf_gic": lambda: TwoStageAmfGic(
            steering=v, rho=config.gic_rho_two_step, pfa=pfa
        ),
        "two_stage_joint_gic": lambda: TwoStageJointGic(
            steering=v, rho=config.gic_rho_joint, pfa=pfa
        ),
        "one_stage_amf_gic": lambda: OneStageAmfGic(
            steering=v, rho=config.gic_rho_two_step, pfa=pfa
        ),
        "one_stage_joint_gic": lambda: OneStageJointGic(
            steering=v, rho=config.gic_rho_joint, pfa=pfa
        ),
        "gamf": lambda: GamfDetector(steering=v, pfa=pfa),
        "clairvoyant": lambda: ClairvoyantDetector(
            steering=v, covariance=interference_covariance(config).matrix, pfa=pfa
        ),
    }
    unknown = set(include) - set(factories)
    if unknown:
        raise ConfigError(f"unknown detector ids: {sorted(unknown)}")
    return {
        did: factories[did]() for did in detectors.DETECTOR_IDS if did in include
    }

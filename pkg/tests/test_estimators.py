import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mosdet import (
    DETECTOR_IDS,
    ClairvoyantDetector,
    GamfDetector,
    OneStageJointGic,
    ScenarioConfig,
    SupportHypothesis,
    TwoStageAmfGic,
    TwoStageJointGic,
    alpha_from_sinr,
    build_detector_bank,
    interference_covariance,
    steering_vector,
    synthesize_trial,
)
from mosdet.errors import ConfigError

# Small fit sets keep these tests quick; the engine is exercised at the
# recommended trial budgets in the acceptance suite.
pytestmark = pytest.mark.filterwarnings("ignore:calibrating P_fa")


@pytest.fixture(scope="module")
def scenario():
    cfg = ScenarioConfig(n_antennas=4, n_pulses=8, n_training=8)
    m = interference_covariance(cfg)
    v = steering_vector(cfg.n_antennas, cfg.spatial_frequency)
    return cfg, m, v


def make_trials(cfg, m, v, n, sinr_db=None, seed=0):
    rng = np.random.default_rng(seed)
    alpha = 0.0 if sinr_db is None else alpha_from_sinr(sinr_db, m, v)
    trials = []
    for _ in range(n):
        h = int(rng.integers(0, cfg.n_pulses))
        l = int(rng.integers(1, cfg.n_pulses - h + 1))
        trials.append(
            synthesize_trial(cfg, SupportHypothesis(l, h), alpha, rng, m=m)
        )
    return trials


class TestEstimatorProtocol:
    def test_get_params_round_trip(self, scenario):
        _, m, v = scenario
        det = OneStageJointGic(steering=v, rho=7.0, pfa=0.01)
        params = det.get_params()
        assert params["rho"] == 7.0 and params["pfa"] == 0.01
        det.set_params(rho=9.0)
        assert det.rho == 9.0

    def test_clone(self, scenario):
        _, m, v = scenario
        det = TwoStageAmfGic(steering=v, rho=11.0)
        twin = clone(det)
        assert twin.rho == 11.0
        assert twin is not det

    def test_predict_before_fit_raises(self, scenario):
        cfg, m, v = scenario
        det = GamfDetector(steering=v)
        with pytest.raises(NotFittedError):
            det.predict(make_trials(cfg, m, v, 3))

    def test_missing_steering_raises(self, scenario):
        cfg, m, v = scenario
        with pytest.raises(ConfigError):
            GamfDetector().decision_function(make_trials(cfg, m, v, 1))

    def test_fit_sets_threshold(self, scenario):
        cfg, m, v = scenario
        det = GamfDetector(steering=v, pfa=0.05).fit(make_trials(cfg, m, v, 400))
        assert det.n_calibration_trials_ == 400
        assert det.empirical_pfa_ <= 0.05

    def test_fit_predict_detects_strong_targets(self, scenario):
        cfg, m, v = scenario
        det = OneStageJointGic(steering=v, pfa=0.05)
        det.fit(make_trials(cfg, m, v, 400, seed=1))
        hits = det.predict(make_trials(cfg, m, v, 50, sinr_db=30.0, seed=2))
        assert hits.mean() > 0.9
        quiet = det.predict(make_trials(cfg, m, v, 400, seed=3))
        assert quiet.mean() < 0.15

    def test_decision_function_accepts_pairs(self, scenario):
        cfg, m, v = scenario
        trials = make_trials(cfg, m, v, 4)
        pairs = [(t.Z, t.R) for t in trials]
        det = GamfDetector(steering=v)
        assert np.allclose(
            det.decision_function(trials), det.decision_function(pairs)
        )

    def test_evaluate_sets_decision_after_fit(self, scenario):
        cfg, m, v = scenario
        det = GamfDetector(steering=v, pfa=0.05).fit(make_trials(cfg, m, v, 400))
        out = det.evaluate(make_trials(cfg, m, v, 1, sinr_db=40.0, seed=9)[0])
        assert out.decision is True


class TestClairvoyant:
    def test_needs_truth(self, scenario):
        cfg, m, v = scenario
        det = ClairvoyantDetector(steering=v, covariance=m.matrix)
        trial = make_trials(cfg, m, v, 1)[0]
        trial.truth = None
        with pytest.raises(ConfigError):
            det.evaluate(trial)

    def test_needs_covariance(self, scenario):
        cfg, m, v = scenario
        det = ClairvoyantDetector(steering=v)
        with pytest.raises(ConfigError):
            det.decision_function(make_trials(cfg, m, v, 1))

    def test_accepts_factored_covariance(self, scenario):
        cfg, m, v = scenario
        raw = ClairvoyantDetector(steering=v, covariance=m.matrix)
        pre = ClairvoyantDetector(steering=v, covariance=m)
        trials = make_trials(cfg, m, v, 5, sinr_db=10.0)
        assert np.allclose(
            raw.decision_function(trials), pre.decision_function(trials)
        )


class TestBank:
    def test_default_bank_complete(self):
        cfg = ScenarioConfig()
        bank = build_detector_bank(cfg)
        assert tuple(bank) == DETECTOR_IDS
        assert bank["two_stage_amf_gic"].rho == cfg.gic_rho_two_step
        assert bank["one_stage_joint_gic"].rho == cfg.gic_rho_joint

    def test_subset_and_order(self):
        cfg = ScenarioConfig()
        bank = build_detector_bank(cfg, include=("gamf", "one_stage_amf_gic"))
        assert tuple(bank) == ("one_stage_amf_gic", "gamf")

    def test_unknown_id_rejected(self):
        with pytest.raises(ConfigError):
            build_detector_bank(ScenarioConfig(), include=("nope",))

    def test_two_stage_consistency(self, scenario, rng):
        """The two-stage estimator statistic is the matched-filter sum over
        its own selection."""
        cfg, m, v = scenario
        from mosdet.detectors import amf_cell_statistics, gic_joint_select

        det = TwoStageJointGic(steering=v, rho=5.0)
        trial = make_trials(cfg, m, v, 1, sinr_db=15.0, seed=4)[0]
        out = det.evaluate(trial)
        sel = gic_joint_select(trial.Z, trial.R, v, 5.0)
        stats = amf_cell_statistics(trial.Z, trial.R, v)
        assert out.support == sel.support
        assert abs(out.statistic - stats.support_sum(sel.support)) < 1e-12

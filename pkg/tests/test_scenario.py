import math

import numpy as np
import pytest

from mosdet import linalg
from mosdet.errors import ConfigError
from mosdet.scenario import (
    PulseTiming,
    ScenarioConfig,
    SupportHypothesis,
    alpha_from_sinr,
    draw_support,
    gate_assignments,
    interference_covariance,
    range_gate_occupancy,
    rect_ambiguity,
    steering_vector,
    synthesize_trial,
)

import oracles


class TestSteeringVector:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(8, 0.0), np.ones(8), atol=1e-15)

    def test_quarter_cycle(self):
        v = steering_vector(2, 0.25)
        assert np.allclose(v, [1.0, 1j], atol=1e-15)

    def test_phases(self):
        v = steering_vector(4, 0.1)
        want = np.exp(1j * np.pi * np.array([0.0, 0.2, 0.4, 0.6]))
        assert np.allclose(v, want, atol=1e-14)

    def test_unit_modulus(self):
        for nu in np.linspace(-0.5, 0.4999, 23):
            v = steering_vector(16, nu)
            assert np.max(np.abs(np.abs(v) - 1.0)) <= 1e-12


class TestInterferenceCovariance:
    def test_benchmark_entries(self):
        cfg = ScenarioConfig(noise_power=1.0, cnr_db=20.0, clutter_corr=0.95)
        m = interference_covariance(cfg).matrix
        assert abs(m[0, 0] - 101.0) < 1e-12
        assert abs(m[0, 1] - 95.0) < 1e-12

    def test_no_clutter(self):
        cfg = ScenarioConfig(cnr_db=-math.inf, noise_power=2.0)
        m = interference_covariance(cfg).matrix
        assert np.allclose(m, 2.0 * np.eye(cfg.n_antennas), atol=1e-15)

    def test_uncorrelated_clutter(self):
        cfg = ScenarioConfig(clutter_corr=0.0, cnr_db=10.0, noise_power=1.0)
        m = interference_covariance(cfg).matrix
        assert np.allclose(m, 11.0 * np.eye(cfg.n_antennas), atol=1e-12)

    def test_positive_definite_sweep(self):
        for rho_c in np.linspace(0.0, 0.99, 100):
            cfg = ScenarioConfig(clutter_corr=float(rho_c))
            interference_covariance(cfg)  # raises if not PD


class TestAlphaFromSinr:
    def test_unit_alpha(self):
        m = linalg.cholesky(np.eye(8))
        v = np.ones(8, dtype=complex)
        a = alpha_from_sinr(10.0 * math.log10(8.0), m, v)
        assert abs(abs(a) - 1.0) < 1e-12

    def test_minus_inf_is_zero(self):
        m = linalg.cholesky(np.eye(4))
        assert alpha_from_sinr(-math.inf, m, np.ones(4)) == 0.0

    def test_round_trip(self, rng):
        cfg = ScenarioConfig()
        m = interference_covariance(cfg)
        v = steering_vector(cfg.n_antennas, 0.0)
        for sinr_db in (-10.0, 0.0, 10.0, 24.0):
            a = alpha_from_sinr(sinr_db, m, v, phase=0.7)
            got = abs(a) ** 2 * linalg.quad_form(m, v, v).real
            want = 10.0 ** (sinr_db / 10.0)
            assert abs(got - want) <= 1e-10 * want

    def test_oracle_magnitude(self, rng):
        cfg = ScenarioConfig()
        m = interference_covariance(cfg)
        v = np.ones(8, dtype=complex)
        q = (v.conj() @ np.linalg.inv(m.matrix) @ v).real
        a = alpha_from_sinr(10.0, m, v)
        assert abs(abs(a) - math.sqrt(10.0 / q)) < 1e-10 * abs(a)


class TestSynthesizeTrial:
    def test_fixed_seed_bit_identical(self, benchmark_config):
        hyp = SupportHypothesis(3, 5)
        t1 = synthesize_trial(benchmark_config, hyp, 1.5, np.random.default_rng(5))
        t2 = synthesize_trial(benchmark_config, hyp, 1.5, np.random.default_rng(5))
        assert np.array_equal(t1.Z, t2.Z) and np.array_equal(t1.R, t2.R)

    def test_null_zero_mean(self, benchmark_config):
        rng = np.random.default_rng(9)
        acc = np.zeros(
            (benchmark_config.n_antennas, benchmark_config.n_pulses), complex
        )
        n = 10_000
        m = interference_covariance(benchmark_config)
        for _ in range(n):
            acc += synthesize_trial(benchmark_config, None, 0.0, rng, m=m).Z
        assert np.max(np.abs(acc / n)) < 0.05 * math.sqrt(101.0)

    def test_strong_target_column_means(self, benchmark_config):
        m = interference_covariance(benchmark_config)
        v = steering_vector(benchmark_config.n_antennas, 0.0)
        alpha = alpha_from_sinr(60.0, m, v)
        hyp = SupportHypothesis(4, 2)
        rng = np.random.default_rng(1)
        acc = np.zeros((8, 16), complex)
        n = 500
        for _ in range(n):
            acc += synthesize_trial(benchmark_config, hyp, alpha, rng, m=m).Z
        mean = acc / n
        inside = np.abs(mean[:, 3:6])
        outside = np.abs(np.delete(mean, [3, 4, 5], axis=1))
        assert inside.min() > 0.5 * abs(alpha)
        assert outside.max() < 0.05 * abs(alpha)

    def test_training_sample_covariance(self, benchmark_config):
        m = interference_covariance(benchmark_config)
        rng = np.random.default_rng(123)
        n_trials = 100_000
        dim = benchmark_config.n_antennas
        acc = np.zeros((dim, dim), complex)
        for _ in range(n_trials):
            trial = synthesize_trial(benchmark_config, None, 0.0, rng, m=m)
            acc += trial.R @ trial.R.conj().T
        cov = acc / (n_trials * benchmark_config.n_training)
        rel = np.linalg.norm(cov - m.matrix) / np.linalg.norm(m.matrix)
        assert rel < 0.02

    def test_per_pulse_phase_policy(self, benchmark_config):
        hyp = SupportHypothesis(1, 15)
        t = synthesize_trial(
            benchmark_config, hyp, 100.0, np.random.default_rng(3),
            per_pulse_phase=True,
        )
        # Column means across antennas should have twisted phases.
        phases = np.angle(t.Z.mean(axis=0))
        assert np.std(phases) > 0.1

    def test_support_exceeding_burst_raises(self, benchmark_config):
        with pytest.raises(ConfigError):
            synthesize_trial(
                benchmark_config, SupportHypothesis(10, 10), 1.0,
                np.random.default_rng(0),
            )


class TestDrawSupport:
    def test_distribution(self):
        rng = np.random.default_rng(17)
        n_p = 16
        hs = np.array([draw_support(rng, n_p).h for _ in range(20_000)])
        counts = np.bincount(hs, minlength=n_p)
        assert counts.min() > 0.8 * 20_000 / n_p
        assert counts.max() < 1.2 * 20_000 / n_p

    def test_support_always_fits(self):
        rng = np.random.default_rng(3)
        for _ in range(5000):
            s = draw_support(rng, 16)
            assert 1 <= s.l and s.l + s.h <= 16


class TestRangeGateOccupancy:
    def test_static_target_single_gate(self):
        timing = PulseTiming(prt=1e-3, pulse_width=1e-6, radial_velocity=0.0,
                             n_pulses=16)
        assert range_gate_occupancy(timing, 0) == SupportHypothesis(1, 15)
        for k in (-2, -1, 1, 2):
            assert range_gate_occupancy(timing, k) is None

    def test_worked_example(self):
        timing = PulseTiming(prt=1e-3, pulse_width=1e-6, radial_velocity=7500.0,
                             n_pulses=16, light_speed=3e8)
        assert range_gate_occupancy(timing, 0) == SupportHypothesis(1, 10)
        assert range_gate_occupancy(timing, -1) == SupportHypothesis(12, 4)

    def test_receding_target_mirrors(self):
        timing = PulseTiming(prt=1e-3, pulse_width=1e-6, radial_velocity=-7500.0,
                             n_pulses=16, light_speed=3e8)
        gates = gate_assignments(timing)
        assert np.all(gates >= 0)
        approaching = PulseTiming(prt=1e-3, pulse_width=1e-6,
                                  radial_velocity=7500.0, n_pulses=16,
                                  light_speed=3e8)
        assert np.array_equal(gates, -gate_assignments(approaching))

    def test_partition_random_timings(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            prt = 10.0 ** rng.uniform(-4.0, -2.0)
            timing = PulseTiming(
                prt=prt,
                pulse_width=prt * 10.0 ** rng.uniform(-4.0, -0.5),
                radial_velocity=rng.uniform(-15_000.0, 15_000.0),
                n_pulses=int(rng.integers(1, 33)),
            )
            gates = gate_assignments(timing)
            seen = np.zeros(timing.n_pulses, dtype=int)
            for k in np.unique(gates):
                sup = range_gate_occupancy(timing, int(k))
                assert sup is not None
                seen[sup.l - 1 : sup.l + sup.h] += 1
                # contiguity: occupancy count matches assignment count
                assert sup.h + 1 == int(np.sum(gates == k))
            assert np.all(seen == 1)


class TestRectAmbiguity:
    def test_peak(self):
        assert rect_ambiguity(0.0, 0.0, 1e-6) == 1.0

    def test_no_overlap(self):
        assert rect_ambiguity(1e-6, 1234.0, 1e-6) == 0.0
        assert rect_ambiguity(-2e-6, 0.0, 1e-6) == 0.0

    def test_half_overlap(self):
        assert abs(rect_ambiguity(0.5e-6, 0.0, 1e-6) - 0.5) < 1e-14

    def test_quadrature_oracle(self, rng):
        t_p = 1e-5
        for _ in range(10):
            tau = rng.uniform(-t_p, t_p)
            f_d = rng.uniform(-2e5, 2e5)
            got = rect_ambiguity(tau, f_d, t_p)
            want = oracles.rect_ambiguity_quadrature(tau, f_d, t_p)
            assert abs(got - want) < 1e-4


class TestConfigValidation:
    def test_defaults_valid(self):
        ScenarioConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_antennas": 0},
            {"n_pulses": 0},
            {"spatial_frequency": 0.5},
            {"noise_power": 0.0},
            {"clutter_corr": 1.0},
            {"clutter_corr": -0.1},
            {"gic_rho_two_step": 1.0},
            {"gic_rho_joint": 0.5},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kwargs)

    def test_support_validation(self):
        with pytest.raises(ConfigError):
            SupportHypothesis(0, 3)
        with pytest.raises(ConfigError):
            SupportHypothesis(1, -1)

    def test_timing_validation(self):
        with pytest.raises(ConfigError):
            PulseTiming(prt=1e-6, pulse_width=1e-3, radial_velocity=0.0,
                        n_pulses=4)

import numpy as np
import pytest

from mosdet import ScenarioConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20250817)


@pytest.fixture
def benchmark_config():
    """The reference operating point: 16 pulses, 8 channels, 16 training
    snapshots, 20 dB clutter-to-noise ratio."""
    return ScenarioConfig()


@pytest.fixture
def small_config():
    return ScenarioConfig(n_antennas=4, n_pulses=8, n_training=8)

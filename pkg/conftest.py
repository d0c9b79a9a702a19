import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models_detection import counterexample_scenario, random_scenario  # noqa: E402
from strategies import PRESETS, compile_profile, load_profile, random_profile, seeded_rng  # noqa: E402

REPO_ROOT = os.path.dirname(os.path.abspath(__file__))
CONFIG_DIR = os.path.join(REPO_ROOT, 'config')


@pytest.fixture
def config_dir():
    return CONFIG_DIR


@pytest.fixture
def counterexample():
    return counterexample_scenario(1.5, 0.4, 100.0)


@pytest.fixture
def presets(counterexample):
    return {name: load_profile(name, counterexample) for name in PRESETS}


@pytest.fixture
def compiled_presets(counterexample, presets):
    return {name: compile_profile(counterexample, p) for name, p in presets.items()}


@pytest.fixture
def rng():
    return seeded_rng(0)


def small_random_case(seed, message_alphabet=2):
    """N in {1, 2}, T = 2, binary observations, table terminal costs."""
    rng = seeded_rng(1000 + seed)
    n = 1 + seed % 2
    scenario = random_scenario(rng, n, 2, 2, message_alphabet=message_alphabet, terminal='table')
    profile = random_profile(scenario, rng)
    sensor = int(rng.integers(n))
    return scenario, profile, sensor


@pytest.fixture
def random_case():
    return small_random_case

import os

import hypothesis
import numpy as np
import pytest

from core.enums import FamilyKind
from core.estimator import Dataset
from core.family import GlmFamily
from core.simgen import SimConfig, make_truth, sample_dataset


np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def gaussian():
    return GlmFamily(FamilyKind.gaussian)


@pytest.fixture
def bernoulli():
    return GlmFamily(FamilyKind.bernoulli)


@pytest.fixture
def poisson():
    return GlmFamily(FamilyKind.poisson)


@pytest.fixture
def sim_config():
    return SimConfig(n=200, p=4, m_dim=4, k=3, eta=4.0, seed=7)


@pytest.fixture
def sim_truth(sim_config):
    return make_truth(sim_config)


@pytest.fixture
def sim_data(sim_truth, sim_config):
    return sample_dataset(sim_truth, sim_config, 11)


@pytest.fixture
def gaussian_data(rng):
    x = rng.standard_normal((120, 3))
    coef = np.array([[0.5, -1.0, 0.25], [0.0, 0.7, -0.3]])
    y = x @ coef.T + rng.standard_normal((120, 2))
    return Dataset(x=x, y=y)

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from dpm_toolkit.datagen import GaussianComponent, GaussianMixtureSpec, generate_gaussian_mixture, generate_uniform


@pytest.fixture
def two_gaussians():
    """(0,0) 与 (0,10) 两个高斯簇，各 500 点"""
    spec = GaussianMixtureSpec(
        components=[
            GaussianComponent(center=[0.0, 0.0], sigma=1.0, count=500),
            GaussianComponent(center=[0.0, 10.0], sigma=1.0, count=500),
        ],
        seed=7,
    )
    return generate_gaussian_mixture(spec)


@pytest.fixture
def uniform_1d():
    return generate_uniform(1, 1000, (0.0, 1.0), seed=3)


@pytest.fixture
def two_gaussian_config():
    return {
        "alpha": 1.0,
        "t": 0.5,
        "q": 0.2,
        "beta": 1.0,
        "tau_e": 300,
        "tau_s": 3,
        "eps_select": 4.0,
        "eps_count": 1.0,
        "delta": 1e-3,
        "eps_avg": 4.0,
        "clip_bound": 20.0,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

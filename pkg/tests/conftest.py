import numpy as np
import pytest

from bbmburgers import Field, ModelParams, make_grid


@pytest.fixture
def grid40():
    return make_grid(40.0, 2048)


@pytest.fixture
def grid60():
    return make_grid(60.0, 2048)


@pytest.fixture
def params():
    return ModelParams(beta=1.0, gamma=1.0, alpha=1.5, mass=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def band_limited(grid, rng, n_modes=16, amplitude=1.0):
    """Random real band-limited field (modes 1..n_modes)."""
    vals = np.zeros(grid.n_points)
    k0 = np.pi / grid.half_width
    for k in range(1, n_modes + 1):
        a, b = rng.standard_normal(2) / k
        vals += a * np.cos(k * k0 * grid.x) + b * np.sin(k * k0 * grid.x)
    return Field(grid, amplitude * vals)

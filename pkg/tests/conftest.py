import numpy as np
import pytest

from fracpme.fracops import Params
from fracpme.grid import Field, Grid
from fracpme.stepper import solve

TWO_PI = 2.0 * np.pi


def gaussian_field(grid, width, height=1.0, center=None):
    if center is None:
        center = (grid.length / 2.0,) * grid.dim
    dist = grid.periodic_distance(center)
    return Field(grid, height * np.exp(-0.5 * (dist / width) ** 2))


def smooth_random_field(grid, rng, scale=1.0, cutoff=6):
    coeffs = np.zeros(grid.shape, dtype=complex)
    freq_index = np.fft.fftfreq(grid.n, d=1.0 / grid.n).astype(int)
    if grid.dim == 1:
        kmag = np.abs(freq_index)
    else:
        kx, ky = np.meshgrid(freq_index, freq_index, indexing="ij")
        kmag = np.sqrt(kx**2 + ky**2)
    low = kmag <= cutoff
    coeffs[low] = rng.normal(size=int(low.sum())) + 1j * rng.normal(size=int(low.sum()))
    vals = np.fft.ifftn(coeffs).real
    peak = max(1e-12, float(np.abs(vals).max()))
    return Field(grid, scale * vals / peak)


@pytest.fixture(scope="session")
def grid64():
    return Grid(dim=1, points_per_dim=64, length=TWO_PI)


@pytest.fixture(scope="session")
def grid256():
    return Grid(dim=1, points_per_dim=256, length=TWO_PI)


@pytest.fixture(scope="session")
def desk_linear_run(grid256):
    """Linear desk instance: gamma = s = 0.5, n = 256, k = 200, Gaussian."""
    params = Params(gamma=0.5, s=0.5, m=1.0, a=0.0, T=1.0, k=200, newton_tol=1e-11)
    g = gaussian_field(grid256, width=TWO_PI / 16.0)
    return solve(params, g)


@pytest.fixture(scope="session")
def desk_m2_run(grid256):
    """Nonlinear desk instance: m = 2 bump at gamma = s = 0.5."""
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=200, newton_tol=1e-11)
    g = gaussian_field(grid256, width=TWO_PI / 16.0)
    return solve(params, g)


@pytest.fixture(scope="session")
def small_m2_run(grid64):
    """Small m = 2 run for unit-scale diagnostics."""
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=48, newton_tol=1e-12)
    g = gaussian_field(grid64, width=TWO_PI / 10.0, height=0.8)
    return solve(params, g)

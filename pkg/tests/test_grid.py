import numpy as np
import pytest

from fracpme.grid import Field, Grid, integrate, inverse_transform, transform
from fracpme.oracles import barenblatt_mass, barenblatt_profile

TWO_PI = 2.0 * np.pi


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_dim=6, length=TWO_PI)
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_dim=48, length=TWO_PI)
    with pytest.raises(ValueError):
        Grid(dim=3, points_per_dim=16, length=TWO_PI)
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_dim=16, length=0.0)


def test_field_requires_finite_values(grid64):
    vals = np.zeros(64)
    vals[3] = np.inf
    with pytest.raises(ValueError):
        Field(grid64, vals)


def test_field_values_read_only(grid64):
    f = Field(grid64, np.ones(64))
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_transform_constant_field(grid64):
    c = 1.7
    coeffs = transform(Field.constant(grid64, c))
    assert abs(coeffs.flat[0] - c * grid64.size) < 1e-12 * grid64.size
    rest = np.abs(coeffs.ravel()[1:])
    assert rest.max() < 1e-10


def test_transform_single_harmonic():
    grid = Grid(dim=1, points_per_dim=16, length=TWO_PI)
    (x,) = grid.coordinates()
    coeffs = transform(Field(grid, np.cos(x)))
    nonzero = np.abs(coeffs) > 1e-10
    assert nonzero.sum() == 2
    assert nonzero[1] and nonzero[15]


def test_round_trip_and_linearity(grid64):
    rng = np.random.default_rng(0)
    f = Field(grid64, rng.normal(size=64))
    g = Field(grid64, rng.normal(size=64))
    back = inverse_transform(grid64, transform(f))
    assert np.abs(back.values - f.values).max() <= 1e-12 * max(1.0, np.abs(f.values).max())
    combo = transform(Field(grid64, 2.0 * f.values - 3.0 * g.values))
    linear = 2.0 * transform(f) - 3.0 * transform(g)
    assert np.abs(combo - linear).max() <= 1e-12 * np.abs(linear).max()


def test_parseval(grid64):
    rng = np.random.default_rng(1)
    f = Field(grid64, rng.normal(size=64))
    lhs = float((f.values**2).sum()) * grid64.cell_volume
    coeffs = transform(f)
    rhs = float((np.abs(coeffs) ** 2).sum()) * grid64.cell_volume / grid64.size
    assert abs(lhs - rhs) <= 1e-12 * lhs


def test_integrate_constant_and_harmonic(grid64):
    assert abs(integrate(Field.constant(grid64, 1.0)) - TWO_PI) < 1e-12
    (x,) = grid64.coordinates()
    assert abs(integrate(Field(grid64, np.cos(x)))) < 1e-12


def test_integrate_equals_zero_mode(grid64):
    rng = np.random.default_rng(2)
    f = Field(grid64, rng.normal(size=64))
    zero_mode = transform(f).flat[0].real
    assert abs(integrate(f) - zero_mode * grid64.cell_volume) < 1e-12


def test_integrate_barenblatt_mass():
    grid = Grid(dim=1, points_per_dim=4096, length=TWO_PI)
    profile = barenblatt_profile(grid, m=2.0, t=1.0, mass_constant=0.15, center=np.pi)
    assert abs(integrate(profile) - barenblatt_mass(2.0, 0.15)) <= 1e-6


def test_two_dimensional_round_trip():
    grid = Grid(dim=2, points_per_dim=16, length=TWO_PI)
    rng = np.random.default_rng(3)
    f = Field(grid, rng.normal(size=(16, 16)))
    back = inverse_transform(grid, transform(f))
    assert np.abs(back.values - f.values).max() < 1e-12
    assert abs(integrate(Field.constant(grid, 1.0)) - TWO_PI**2) < 1e-10


def test_periodic_distance_wraps(grid64):
    d = grid64.periodic_distance([0.0])
    assert d.max() <= grid64.length / 2.0 + 1e-12
    assert d[0] == 0.0
    assert abs(d[1] - d[-1]) < 1e-12

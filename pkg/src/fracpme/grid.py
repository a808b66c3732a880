"""Periodic lattice, grid functions, and discrete Fourier transforms.

FFT normalization convention, used package-wide: the forward transform is the
plain unnormalized DFT (``numpy.fft.fftn``) and the inverse carries the full
1/n^N factor (``numpy.fft.ifftn``).  With cell volume (L/n)^N the discrete
Parseval identity reads

    sum |f|^2 * cell_volume = sum |fhat|^2 * cell_volume / n^N

and the integral of a field equals cell_volume * Re(fhat[0]).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = ["Grid", "Field", "transform", "inverse_transform", "integrate"]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [0, L)^N with N in {1, 2}.

    Nodes sit at x_i = i * L/n per axis; frequencies are integer multiples of
    2*pi/L in standard FFT layout.
    """

    dim: int
    points_per_dim: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.points_per_dim < 8 or not _is_power_of_two(self.points_per_dim):
            raise ValueError(
                f"points_per_dim must be a power of two >= 8, got {self.points_per_dim}"
            )
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def n(self) -> int:
        return self.points_per_dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def coordinates(self):
        """Node coordinates, one array per axis (meshgrid 'ij' for dim=2)."""
        x = self.axis_coordinates()
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def frequencies(self):
        """Angular frequencies xi_k = 2*pi*k/L per axis, FFT layout."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        if self.dim == 1:
            return (xi,)
        return tuple(np.meshgrid(xi, xi, indexing="ij"))

    def frequency_magnitude_squared(self) -> np.ndarray:
        freqs = self.frequencies()
        out = np.zeros(self.shape)
        for xi in freqs:
            out = out + xi**2
        return out

    def multipliers(self, s: float) -> np.ndarray:
        """Fourier multipliers |xi_k|^(2s); the zero mode carries 0."""
        return self.frequency_magnitude_squared() ** s

    def periodic_distance(self, center) -> np.ndarray:
        """Node distances to ``center`` measured on the torus."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.shape != (self.dim,):
            raise ValueError(f"center must have {self.dim} components")
        d2 = np.zeros(self.shape)
        x = self.axis_coordinates()
        for axis in range(self.dim):
            delta = np.abs(x - center[axis])
            delta = np.minimum(delta, self.length - delta)
            shape = [1] * self.dim
            shape[axis] = self.n
            d2 = d2 + delta.reshape(shape) ** 2
        return np.sqrt(d2)


@dataclass(frozen=True)
class Field:
    """Real-valued grid function.  Immutable after construction."""

    grid: Grid
    values: np.ndarray = dataclass_field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(*grid.coordinates()))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        self._check_same_grid(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check_same_grid(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, other) -> "Field":
        if isinstance(other, Field):
            self._check_same_grid(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def _check_same_grid(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


def transform(field: Field) -> np.ndarray:
    """Forward DFT of a field (unnormalized, numpy layout)."""
    return np.fft.fftn(field.values)


def inverse_transform(grid: Grid, coeffs: np.ndarray) -> Field:
    """Inverse DFT (carries the 1/n^N factor); imaginary residue is dropped."""
    values = np.fft.ifftn(coeffs)
    return Field(grid, values.real)


def integrate(field: Field) -> float:
    """Integral over the periodic cell: sum of values times cell volume."""
    return float(field.values.sum() * field.grid.cell_volume)

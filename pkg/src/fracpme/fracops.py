"""Discrete fractional operators.

Marchaud/Caputo time derivative on a uniform-step history, spectral and
kernel-quadrature fractional Laplacians, and the Mittag-Leffler function.

Normalization: the time-derivative weights always carry gamma/Gamma(1-gamma)
and the constant-extension tail carries 1/Gamma(1-gamma), so the operator
reduces to the classical derivative as gamma -> 1 and the linear problem is
solved exactly by Mittag-Leffler decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import mpmath
import numpy as np
from scipy import integrate as sp_integrate
from scipy import special as sp_special

from .grid import Field, Grid, inverse_transform, transform

__all__ = [
    "Params",
    "History",
    "TimeKernelBounds",
    "SpaceKernelBounds",
    "marchaud_weights",
    "marchaud_apply",
    "marchaud_apply_kernel",
    "frac_laplacian",
    "invert_frac_laplacian",
    "fractional_kernel_table",
    "kernel_laplacian",
    "mittag_leffler",
    "mittag_leffler_array",
]


@dataclass(frozen=True)
class Params:
    """Scalar problem constants.

    eps is derived as (T - a)/k, never stored independently.
    """

    gamma: float
    s: float
    m: float
    a: float
    T: float
    k: int
    newton_tol: float = 1e-10
    newton_max_iter: int = 60

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.m > 0.0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.T > self.a:
            raise ValueError(f"need T > a, got a={self.a}, T={self.T}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.newton_tol > 0.0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be >= 1")

    @property
    def eps(self) -> float:
        return (self.T - self.a) / self.k

    def time_at(self, j: int) -> float:
        return self.a + self.eps * j


@dataclass
class History:
    """Ordered trajectory of fields with uniform step eps.

    Index j holds w(a + eps*j); index 0 is the initial datum, extended
    constantly to all earlier times (w(t) = w(a) for t < a).  Append-only.
    """

    params: Params
    fields: list = dataclass_field(default_factory=list)
    forcing: list | None = None

    def __post_init__(self):
        for f in self.fields:
            self._check_grid(f)
        if self.forcing is not None:
            for f in self.forcing:
                self._check_grid(f)

    def _check_grid(self, f: Field):
        if self.fields and f.grid != self.fields[0].grid:
            raise ValueError("all history fields must share one grid")

    @property
    def grid(self) -> Grid:
        if not self.fields:
            raise ValueError("history is empty")
        return self.fields[0].grid

    @property
    def j_cur(self) -> int:
        return len(self.fields) - 1

    def append(self, f: Field):
        self._check_grid(f)
        self.fields.append(f)

    def times(self) -> np.ndarray:
        return self.params.a + self.params.eps * np.arange(len(self.fields))

    def values_stack(self) -> np.ndarray:
        """(j_cur+1, *grid.shape) array of the stored values."""
        return np.stack([f.values for f in self.fields])


@dataclass(frozen=True)
class TimeKernelBounds:
    """Two-sided ellipticity bounds for a general time kernel."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError("lambda1 must be positive")
        if self.lambda2 < self.lambda1:
            raise ValueError("need lambda1 <= lambda2")


@dataclass(frozen=True)
class SpaceKernelBounds:
    """Ellipticity constant and lower-bound support radius for space kernels."""

    lambda_: float
    cutoff: float = 3.0

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ValueError("lambda_ must be positive")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")


# ---------------------------------------------------------------------------
# Marchaud / Caputo time derivative
# ---------------------------------------------------------------------------


def marchaud_weights(params: Params, j: int):
    """Weights of the discrete fractional derivative at step j.

    The kernel gamma*(t-tau)^(-1-gamma)/Gamma(1-gamma) is integrated exactly
    against the piecewise-linear interpolant of the history (constant
    extension before the initial time), which keeps the operator positive,
    reduces it to the backward difference as gamma -> 1, and makes the linear
    problem track Mittag-Leffler decay.  With a_d = (d+1)^(1-gamma) - d^(1-gamma)
    and c = eps^(-gamma)/Gamma(2-gamma):

        weights[j-d] = c * (a_{d-1} - a_d)   for gaps d = 1..j-1
        weights[0]   = tail = c * a_{j-1}    (constant pre-history, index 0)

    Returns ``(weights, tail, diag)`` with ``weights`` of length j; ``diag``
    is ``weights.sum()`` so the discrete derivative of a history W is
    diag*W_j - sum_i weights[i]*W_i and constants are annihilated exactly.
    All weights are strictly positive.
    """
    if j < 1:
        raise ValueError(f"derivative undefined before the first step (j={j})")
    if j > params.k:
        raise ValueError(f"step index {j} exceeds k={params.k}")
    gamma = params.gamma
    c = params.eps ** (-gamma) / math.gamma(2.0 - gamma)
    d = np.arange(j + 1, dtype=float)
    a = (d + 1.0) ** (1.0 - gamma) - d ** (1.0 - gamma)  # a[0] = 1
    weights = np.zeros(j)
    if j > 1:
        gaps = np.arange(1, j)  # d = 1..j-1, coefficient of W_{j-d}
        weights[j - gaps] = c * (a[gaps - 1] - a[gaps])
    tail = c * a[j - 1]
    weights[0] = tail
    diag = float(weights.sum())
    return weights, tail, diag


def marchaud_apply(history: History, j: int) -> Field:
    """Discrete fractional derivative of the history at step j.

    This is the O(j) direct sum; it is the reference any accelerated variant
    must reproduce to 1e-12 relative.
    """
    if history.j_cur < j:
        raise ValueError(f"history holds steps 0..{history.j_cur}, need {j}")
    weights, _, diag = marchaud_weights(history.params, j)
    stack = np.stack([history.fields[i].values for i in range(j)])
    memory = np.tensordot(weights, stack, axes=(0, 0))
    return Field(history.grid, diag * history.fields[j].values - memory)


def marchaud_apply_kernel(history: History, j: int, gap_kernel, bounds: TimeKernelBounds) -> Field:
    """Fractional derivative with a general stationary time kernel.

    ``gap_kernel[d-1]`` holds K(t, t - eps*d) for gaps d = 1..len(gap_kernel).
    The table is bound-checked against lambda1/lambda2 * (eps*d)^(-1-gamma)
    and applied as gamma*eps*sum_d K(d)*(W_j - W_{j-d}); the constant
    extension before the initial time is summed over the table's horizon
    (finite-horizon truncation, documented limitation of the variant).
    """
    if j < 1:
        raise ValueError("derivative undefined before the first step")
    if history.j_cur < j:
        raise ValueError(f"history holds steps 0..{history.j_cur}, need {j}")
    gap_kernel = np.asarray(gap_kernel, dtype=float)
    if gap_kernel.ndim != 1 or gap_kernel.size < j:
        raise ValueError(f"gap kernel must cover at least {j} gaps")
    params = history.params
    eps = params.eps
    gaps = eps * np.arange(1, gap_kernel.size + 1)
    ref = gaps ** (-1.0 - params.gamma)
    if np.any(gap_kernel < bounds.lambda1 * ref - 1e-12 * ref) or np.any(
        gap_kernel > bounds.lambda2 * ref + 1e-12 * ref
    ):
        raise ValueError("time kernel violates the ellipticity bounds")
    w = params.gamma * eps * gap_kernel
    out = np.zeros(history.grid.shape)
    wj = history.fields[j].values
    for d in range(1, j):
        out += w[d - 1] * (wj - history.fields[j - d].values)
    # gaps d >= j reach the constant pre-history w(a)
    out += w[j - 1 :].sum() * (wj - history.fields[0].values)
    return Field(history.grid, out)


# ---------------------------------------------------------------------------
# Fractional Laplacian
# ---------------------------------------------------------------------------


def frac_laplacian(field: Field, s: float) -> Field:
    """Spectral fractional Laplacian: mode-wise multiplication by |xi|^(2s)."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    coeffs = transform(field) * field.grid.multipliers(s)
    return inverse_transform(field.grid, coeffs)


def invert_frac_laplacian(field: Field, s: float) -> Field:
    """Solve L^s u = f for zero-mean f (zero mode stays zero)."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    mean = integrate_mean(field)
    if abs(mean) > 1e-10:
        raise ValueError(f"inverse multiplier needs a zero-mean field, mean={mean}")
    mult = field.grid.multipliers(s)
    coeffs = transform(field)
    out = np.zeros_like(coeffs)
    nonzero = mult > 0
    out[nonzero] = coeffs[nonzero] / mult[nonzero]
    return inverse_transform(field.grid, out)


def integrate_mean(field: Field) -> float:
    return float(field.values.mean())


def fractional_kernel_table(grid: Grid, s: float) -> np.ndarray:
    """Exact periodized kernel of (-Delta)^s in 1D.

    Entry (x, y) is C_{1,s} * sum_m |x - y + m L|^(-1-2s), with the image sum
    evaluated in closed form through the Hurwitz zeta function.
    """
    if grid.dim != 1:
        raise ValueError("kernel tables are built for 1D grids only")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    c_s = 4.0**s * math.gamma(0.5 + s) / (math.sqrt(math.pi) * abs(math.gamma(-s)))
    L = grid.length
    x = grid.axis_coordinates()
    d = np.abs(x[None, :] - x[:, None])
    table = np.zeros_like(d)
    off = d > 0
    r = d[off]
    p = 1.0 + 2.0 * s
    images = (
        r**-p
        + L**-p * (sp_special.zeta(p, 1.0 + r / L) + sp_special.zeta(p, 1.0 - r / L))
    )
    table[off] = c_s * images
    return table


def kernel_laplacian(field: Field, kernel_table: np.ndarray, bounds: SpaceKernelBounds, s: float) -> Field:
    """Quadrature fractional Laplacian with a rough-kernel table (1D).

    Applies sum_y [f(x) - f(y)] K(x, y) * cell_volume with the diagonal
    excluded (principal value by lattice symmetry).  Rejects asymmetric
    tables and tables violating the two-sided ellipticity bounds measured
    against the periodic distance |x - y|^(-1-2s).
    """
    grid = field.grid
    if grid.dim != 1:
        raise ValueError("kernel_laplacian supports 1D grids only")
    kernel_table = np.asarray(kernel_table, dtype=float)
    n = grid.n
    if kernel_table.shape != (n, n):
        raise ValueError(f"kernel table must be {n}x{n}")
    if not np.allclose(kernel_table, kernel_table.T, rtol=1e-12, atol=0.0):
        raise ValueError("kernel table must be symmetric")
    x = grid.axis_coordinates()
    d = np.abs(x[None, :] - x[:, None])
    d = np.minimum(d, grid.length - d)
    off = d > 0
    ref = d[off] ** (-1.0 - 2.0 * s)
    upper = math.sqrt(bounds.lambda_) * ref
    if np.any(kernel_table[off] > upper * (1.0 + 1e-12)):
        raise ValueError("kernel table violates the upper ellipticity bound")
    near = off & (d <= bounds.cutoff)
    ref_near = d[near] ** (-1.0 - 2.0 * s)
    lower = ref_near / math.sqrt(bounds.lambda_)
    if np.any(kernel_table[near] < lower * (1.0 - 1e-12)):
        raise ValueError("kernel table violates the lower ellipticity bound")
    K = kernel_table.copy()
    np.fill_diagonal(K, 0.0)
    f = field.values
    out = (f * K.sum(axis=1) - K @ f) * grid.cell_volume
    return Field(grid, out)


# ---------------------------------------------------------------------------
# Mittag-Leffler function on the negative half-line
# ---------------------------------------------------------------------------

_Z_SWITCH = 5.0
_SERIES_CAP = 200


def _ml_series(gamma: float, z: float):
    """Truncated power series in extended precision; None if not converged."""
    with mpmath.workdps(60):
        zm = mpmath.mpf(z)
        acc = mpmath.mpf(1)
        term = mpmath.mpf(1)
        for n in range(1, _SERIES_CAP + 1):
            term = mpmath.power(zm, n) / mpmath.gamma(gamma * n + 1)
            acc += term
            if abs(term) < mpmath.mpf("1e-30"):
                return float(acc)
    return None


def _ml_integral(gamma: float, z: float) -> float:
    """Spectral-density integral representation, valid for 0 < gamma < 1, z < 0.

    E_gamma(-x) = sin(pi*gamma)/(pi*gamma) *
                  int_0^inf exp(-(u*x)^(1/gamma)) / (u^2 + 2u cos(pi*gamma) + 1) du
    """
    x = -z
    cg = math.cos(math.pi * gamma)
    sg = math.sin(math.pi * gamma)
    inv_g = 1.0 / gamma

    def integrand(u):
        return math.exp(-((u * x) ** inv_g)) / (u * u + 2.0 * u * cg + 1.0)

    # breakpoints: the exponential scale 1/x and the near-u=1 peak that
    # sharpens as gamma -> 1 (Lorentzian width ~ (1-gamma)*pi)
    width = max(1e-4, 2.0 * (1.0 - gamma))
    cuts = sorted({min(0.5, 1.0 / x), 1.0 - width, 1.0, 1.0 + width, 2.0})
    cuts = [c for c in cuts if c > 0.0]
    pieces = [(0.0, cuts[0])]
    pieces += [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
    total = 0.0
    for lo, hi in pieces:
        val, _ = sp_integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=500)
        total += val
    val, _ = sp_integrate.quad(integrand, cuts[-1], np.inf, epsabs=1e-14, epsrel=1e-12, limit=500)
    total += val
    return sg / (math.pi * gamma) * total


def mittag_leffler(gamma: float, z: float) -> float:
    """E_gamma(z) for 0 < gamma <= 1 and z <= 0, absolute error <= 1e-10.

    Series below |z| = 5 when it converges within the term cap, otherwise the
    completely-monotone integral representation.  z > 0 is rejected to keep
    the evaluation in the completely-monotone regime.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if z > 0.0:
        raise ValueError(f"mittag_leffler is restricted to z <= 0, got {z}")
    if z == 0.0:
        return 1.0
    if gamma == 1.0:
        return math.exp(z)
    if abs(z) <= _Z_SWITCH:
        val = _ml_series(gamma, z)
        if val is not None:
            return val
    return _ml_integral(gamma, z)


def mittag_leffler_array(gamma: float, zs: np.ndarray) -> np.ndarray:
    """Vectorized E_gamma over an array of nonpositive arguments (cached)."""
    zs = np.asarray(zs, dtype=float)
    flat = zs.ravel()
    cache: dict = {}
    out = np.empty_like(flat)
    for i, z in enumerate(flat):
        if z not in cache:
            cache[z] = mittag_leffler(gamma, float(z))
        out[i] = cache[z]
    return out.reshape(zs.shape)

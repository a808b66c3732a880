"""Independent reference solutions for the acceptance tests.

The linear (m = 1) problem decouples in Fourier space: each mode obeys a
scalar fractional ODE solved exactly by Mittag-Leffler decay.  The classical
porous-medium reference integrates the gamma = s = 1 limit with fine implicit
Euler substeps and a frozen-slope fixed point, sharing only the spectral
spatial operator with the main solver so the limit comparison isolates the
time-fractional discretization error.
"""

from __future__ import annotations

import math

import numpy as np

from .fracops import History, mittag_leffler_array
from .grid import Field, inverse_transform, transform
from .stepper import NonConvergence, NonlinearityPhi

__all__ = [
    "linear_solution",
    "classical_pme_reference",
    "dense_marchaud",
    "barenblatt_profile",
    "barenblatt_mass",
]


def linear_solution(g: Field, gamma: float, s: float, t: float, a: float = 0.0) -> Field:
    """Exact solution of the m = 1, f = 0 problem at time t >= a.

    Mode k decays as E_gamma(-|xi_k|^(2s) (t - a)^gamma); at t = a the datum
    is returned exactly.
    """
    if t < a:
        raise ValueError(f"need t >= a, got t={t}, a={a}")
    if t == a:
        return g
    lam = g.grid.multipliers(s)
    decay = mittag_leffler_array(gamma, -lam * (t - a) ** gamma)
    return inverse_transform(g.grid, transform(g) * decay)


def classical_pme_reference(g: Field, m: float, t: float, substeps: int) -> Field:
    """Fine implicit-Euler spectral solve of d_t w = Delta(|w|^(m-1) w) up to t.

    Each substep solves w + dt*L(phi(w)) = w_prev with a frozen-slope fixed
    point (spectrally preconditioned, contraction for monotone phi).
    """
    if not m > 1:
        raise ValueError(f"classical reference expects m > 1, got {m}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    phi = NonlinearityPhi(m)
    grid = g.grid
    mult = grid.multipliers(1.0)
    dt = t / substeps
    w = g.values.copy()
    for _ in range(substeps):
        w_prev = w
        u = w_prev.copy()
        converged = False
        for _ in range(800):
            dbar = max(float(phi.phi_prime(u).max()), 1e-14)
            denom = 1.0 + dt * dbar * mult
            correction = dbar * u - phi.phi(u)
            rhs_hat = np.fft.fftn(w_prev + dt * np.fft.ifftn(np.fft.fftn(correction) * mult).real)
            u_new = np.fft.ifftn(rhs_hat / denom).real
            res = u_new + dt * np.fft.ifftn(np.fft.fftn(phi.phi(u_new)) * mult).real - w_prev
            u = u_new
            if float(np.abs(res).max()) <= 1e-12 * max(1.0, float(np.abs(w_prev).max())):
                converged = True
                break
        if not converged:
            raise NonConvergence(
                "classical PME substep stalled",
                best_residual=float(np.abs(res).max()),
            )
        w = u
    return Field(grid, w)


def dense_marchaud(history: History, j: int) -> Field:
    """Definitionally direct memory sum; audit oracle for marchaud_apply.

    Evaluates the same piecewise-linear kernel integration in telescoped
    increment form, sum_i (W_i - W_{i-1}) * a_{j-i}, a deliberately different
    arrangement from the weights-on-levels sum in fracops.
    """
    if j < 1:
        raise ValueError("derivative undefined before the first step")
    if history.j_cur < j:
        raise ValueError(f"history holds steps 0..{history.j_cur}, need {j}")
    params = history.params
    gamma = params.gamma
    c = params.eps ** (-gamma) / math.gamma(2.0 - gamma)
    out = np.zeros(history.grid.shape)
    for i in range(1, j + 1):
        d = j - i
        a_d = (d + 1.0) ** (1.0 - gamma) - float(d) ** (1.0 - gamma)
        out += (history.fields[i].values - history.fields[i - 1].values) * a_d
    return Field(history.grid, c * out)


def barenblatt_profile(grid, m: float, t: float, mass_constant: float, center: float) -> Field:
    """Self-similar source solution of d_t w = Delta(w^m) in 1D at time t.

    w(t, x) = t^(-alpha) (C - kappa y^2)_+^(1/(m-1)) with y = x t^(-alpha),
    alpha = 1/(m+1), kappa = (m-1) alpha / (2m).
    """
    if grid.dim != 1:
        raise ValueError("Barenblatt profile is built for 1D grids")
    alpha = 1.0 / (m + 1.0)
    kappa = (m - 1.0) * alpha / (2.0 * m)
    (x,) = grid.coordinates()
    y = (x - center) * t ** (-alpha)
    vals = np.maximum(mass_constant - kappa * y**2, 0.0) ** (1.0 / (m - 1.0))
    return Field(grid, t ** (-alpha) * vals)


def barenblatt_mass(m: float, mass_constant: float) -> float:
    """Closed-form mass of the Barenblatt profile (independent of time)."""
    alpha = 1.0 / (m + 1.0)
    kappa = (m - 1.0) * alpha / (2.0 * m)
    p = 1.0 / (m - 1.0)
    r = math.sqrt(mass_constant / kappa)
    # int_{-r}^{r} (C - kappa x^2)^p dx via the Beta function
    return (
        mass_constant**p
        * r
        * math.sqrt(math.pi)
        * math.gamma(p + 1.0)
        / math.gamma(p + 1.5)
    )

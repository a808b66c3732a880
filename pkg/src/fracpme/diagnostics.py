"""Cross-solution property checks and the Hölder-regularity estimators.

The weak-residual diagnostic reads the weak identity as the sum
int psi d^gamma theta + int E(w, psi) - int f psi ~ 0 (the chained equality
in the source formulation is a typographical conflation) and transposes the
memory term onto the test function through the right-sided
Riemann-Liouville derivative, so the assembled quantity measures the
trajectory's distance from the continuum identity and shrinks under step
refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate

from .energy import bilinear_form, h_star_norm
from .fracops import History
from .grid import Field, integrate
from .stepper import NonlinearityPhi

__all__ = [
    "ContractionReport",
    "OscillationReport",
    "contraction_suite",
    "weak_residual",
    "bump_profile",
    "delta_star",
    "oscillation_beta",
    "temporal_holder_exponent",
]


@dataclass(frozen=True)
class ContractionReport:
    """Per-step contraction margins ||Delta(0)|| - ||Delta(j)|| in L1 and H*."""

    margins_l1: np.ndarray
    margins_hstar: np.ndarray
    threshold: float
    passed: bool


def contraction_suite(run1: History, run2: History, threshold: float = 1e-8) -> ContractionReport:
    """Margins of the two contraction properties for a pair of runs.

    Requires equal grids and params; the H* margins additionally require
    equal-mass initial data (differences are then zero-mean by the discrete
    mass identity).  Passes iff every margin is >= -threshold.
    """
    if run1.grid != run2.grid:
        raise ValueError("incompatible runs: different grids")
    if run1.params != run2.params:
        raise ValueError("incompatible runs: different params")
    if len(run1.fields) != len(run2.fields):
        raise ValueError("incompatible runs: different lengths")
    s = run1.params.s
    diffs = [a - b for a, b in zip(run1.fields, run2.fields)]
    mass_gap = abs(integrate(diffs[0]))
    if mass_gap > 1e-9:
        raise ValueError(f"incompatible runs: initial mass gap {mass_gap:.3e}")
    l1 = [integrate(Field(d.grid, np.abs(d.values))) for d in diffs]
    hstar = []
    for d in diffs:
        mean = float(d.values.mean())
        if abs(mean) > 1e-10:
            raise ValueError(f"incompatible runs: difference mean drifted to {mean:.3e}")
        hstar.append(h_star_norm(Field(d.grid, d.values - mean), s))
    margins_l1 = l1[0] - np.asarray(l1)
    margins_hstar = hstar[0] - np.asarray(hstar)
    passed = bool(margins_l1.min() >= -threshold and margins_hstar.min() >= -threshold)
    return ContractionReport(
        margins_l1=margins_l1, margins_hstar=margins_hstar,
        threshold=threshold, passed=passed,
    )


def bump_profile(t0: float, t1: float):
    """C^1 polynomial bump supported on (t0, t1), peak value 1."""
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    scale = ((t1 - t0) / 2.0) ** 4

    def eta(t):
        t = np.asarray(t, dtype=float)
        inside = (t > t0) & (t < t1)
        out = np.zeros_like(t)
        out[inside] = ((t[inside] - t0) * (t1 - t[inside])) ** 2 / scale
        return out if out.ndim else float(out)

    return eta


def _fractional_antiderivative(eta, gamma: float, t: float, T: float) -> float:
    """Right-sided fractional integral I^{1-gamma}_{T-} eta at time t."""
    if t >= T:
        return 0.0

    def integrand(r):
        return eta(t + r)

    val, _ = sp_integrate.quad(
        integrand, 0.0, T - t, weight="alg", wvar=(-gamma, 0.0),
        epsabs=1e-13, epsrel=1e-11, limit=200,
    )
    return val / math.gamma(1.0 - gamma)


def weak_residual(history: History, test_functions: list, f=None) -> float:
    """Max residual of the continuum weak identity over the test pairs.

    Each pair (X, eta) contributes

        sum_j b_j <X, W_j - W_0> + sum_j int_{I_j} eta dt * E(phi(W_j), X)
        - sum_j int_{I_j} eta dt * <f_j, X>

    with b_j = J(t_{j-1}) - J(t_j), J the right-sided fractional integral of
    eta; b_j integrates the transposed memory kernel exactly against the
    piecewise-constant trajectory.  Halving eps shrinks the residual
    (step-refinement convergence of the marched scheme).
    """
    params = history.params
    phi = NonlinearityPhi(params.m)
    times = history.times()
    worst = 0.0
    for X, eta in test_functions:
        if X.grid != history.grid:
            raise ValueError("test field grid mismatch")
        J_vals = np.array(
            [_fractional_antiderivative(eta, params.gamma, t, params.T) for t in times]
        )
        eta_cell = np.empty(params.k)
        for j in range(1, params.k + 1):
            val, _ = sp_integrate.quad(eta, times[j - 1], times[j], epsabs=1e-13, epsrel=1e-11)
            eta_cell[j - 1] = val
        total = 0.0
        w0 = history.fields[0]
        for j in range(1, params.k + 1):
            b_j = J_vals[j - 1] - J_vals[j]
            total += b_j * integrate(X * (history.fields[j] - w0))
            u_j = Field(history.grid, phi.phi(history.fields[j].values))
            total += eta_cell[j - 1] * bilinear_form(u_j, X, params.s)
            if f is not None:
                total -= eta_cell[j - 1] * integrate(X * f[j - 1])
        worst = max(worst, abs(total))
    return worst


def delta_star(phi: NonlinearityPhi, gamma: float, lattice_points: int = 512) -> float:
    """Degeneracy constant inf_{1/4<=tau<=2} d^gamma theta(tau) / (1 + theta(2) - theta(1/4)).

    d^gamma theta(tau) is read as the scalar Caputo derivative of theta on
    (0, infinity) based at 0, evaluated by weighted quadrature on a lattice
    over [1/4, 2].
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    taus = np.linspace(0.25, 2.0, lattice_points)
    inv_gamma_fac = 1.0 / math.gamma(1.0 - gamma)
    values = np.empty(lattice_points)
    for i, tau in enumerate(taus):
        # both endpoint singularities are algebraic: theta'(r) ~ r^(1/m - 1)
        # at 0 and the kernel (tau - r)^(-gamma) at tau
        val, _ = sp_integrate.quad(
            lambda r: 1.0 / phi.m,
            0.0, tau,
            weight="alg", wvar=(1.0 / phi.m - 1.0, -gamma),
            epsabs=1e-13, epsrel=1e-11, limit=200,
        )
        values[i] = inv_gamma_fac * val
    denom = 1.0 + float(phi.theta(2.0) - phi.theta(0.25))
    return float(values.min()) / denom


@dataclass(frozen=True)
class OscillationReport:
    """Oscillation decay over shrinking space-time cylinders.

    beta_fit is the log-log slope against the spatial radius;
    beta_fit_time_scaled = beta_fit * gamma / s is the alternative
    normalization against the temporal radius (both are reported, neither is
    chosen).  kappa_star_fit = zeta^beta_fit is the per-level decay factor.
    """

    zeta: float
    radii: np.ndarray
    osc: np.ndarray
    beta_fit: float
    beta_fit_time_scaled: float
    kappa_star_fit: float
    degenerate: bool
    levels_used: int


def oscillation_beta(history: History, center, zeta: float, k_max: int,
                     base_radius: float = 1.0) -> OscillationReport:
    """Oscillation of w over cylinders of spatial radius base_radius * zeta^k.

    The cylinder at level k gathers the grid nodes within periodic distance
    of the spatial center and the steps within radius^(s/gamma) before the
    temporal center (no interpolation).  Scaling base_radius by zeta is
    equivalent to running the estimator on the run rescaled by
    w_R(tau, y) = w(t_c + tau/R^(s/gamma), x_c + y/R) with R = 1/zeta.
    Levels with oscillation below 10x the solver tolerance are excluded from
    the fit; a report with fewer than two usable levels is flagged
    degenerate.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    if k_max < 4:
        raise ValueError("k_max must be >= 4")
    if not base_radius > 0:
        raise ValueError("base_radius must be positive")
    params = history.params
    grid = history.grid
    t_c = float(center[0])
    x_c = np.atleast_1d(np.asarray(center[1:], dtype=float))
    if x_c.shape != (grid.dim,):
        raise ValueError(f"center must provide {grid.dim} spatial coordinates")
    times = history.times()
    exponent = params.s / params.gamma
    radii = base_radius * zeta ** np.arange(1, k_max + 1)
    if t_c - radii[0] ** exponent < params.a - 1e-12 or t_c > params.T + 1e-12:
        raise ValueError("cylinder out of range in time")
    if radii[0] > grid.length / 2.0:
        raise ValueError("cylinder out of range in space")
    dist = grid.periodic_distance(x_c)
    osc = np.empty(k_max)
    for idx, r in enumerate(radii):
        t_lo = t_c - r**exponent
        in_time = (times >= t_lo - 1e-12) & (times <= t_c + 1e-12)
        in_space = dist <= r + 1e-12
        if not in_time.any() or not in_space.any():
            osc[idx] = 0.0
            continue
        vals = np.stack([history.fields[j].values for j in np.nonzero(in_time)[0]])
        block = vals[:, in_space]
        osc[idx] = float(block.max() - block.min())
    usable = osc > 10.0 * params.newton_tol
    if usable.sum() < 2:
        return OscillationReport(
            zeta=zeta, radii=radii, osc=osc, beta_fit=math.nan,
            beta_fit_time_scaled=math.nan, kappa_star_fit=math.nan,
            degenerate=True, levels_used=int(usable.sum()),
        )
    slope = float(np.polyfit(np.log(radii[usable]), np.log(osc[usable]), 1)[0])
    return OscillationReport(
        zeta=zeta, radii=radii, osc=osc, beta_fit=slope,
        beta_fit_time_scaled=slope * params.gamma / params.s,
        kappa_star_fit=zeta**slope, degenerate=False,
        levels_used=int(usable.sum()),
    )


def temporal_holder_exponent(history: History, node=None, window_fraction: float = 0.5):
    """Fitted temporal modulus exponent at a fixed node over the run's tail.

    Fits log max_t |w(t + tau) - w(t)| against log tau for lags spanning the
    window [a + (T-a)*window_fraction, T]; the structure function uses the
    node of largest temporal activity unless one is given.
    """
    params = history.params
    stack = history.values_stack()
    k = params.k
    j_lo = int(math.ceil(window_fraction * k))
    tail = stack[j_lo:]
    if node is None:
        activity = np.abs(np.diff(tail, axis=0)).sum(axis=0)
        node = np.unravel_index(int(np.argmax(activity)), history.grid.shape)
    series = tail[(slice(None),) + tuple(np.atleast_1d(node))].ravel()
    n_lags = len(series) - 1
    if n_lags < 4:
        raise ValueError("window too short for a temporal fit")
    lags = np.unique(np.geomspace(1, max(2, n_lags // 2), 12).astype(int))
    taus, moduli = [], []
    for lag in lags:
        d = np.abs(series[lag:] - series[:-lag])
        if d.size and d.max() > 10.0 * params.newton_tol:
            taus.append(lag * params.eps)
            moduli.append(float(d.max()))
    if len(taus) < 3:
        return math.nan, np.array(taus), np.array(moduli)
    slope = float(np.polyfit(np.log(taus), np.log(moduli), 1)[0])
    return slope, np.array(taus), np.array(moduli)

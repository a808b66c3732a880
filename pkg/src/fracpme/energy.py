"""Norms, bilinear forms, barrier functions, and level-set energy machinery.

The level-set diagnostics operate on the diffusion-side state u = |w|^(m-1) w
of a computed trajectory: if W solves the marched system
d^gamma W + L^s(phi(W)) = f, then u = phi(W) together with theta(u) = W is
exactly the pair the truncation machinery is built for, and for m = 1 the two
coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate

from .fracops import History, invert_frac_laplacian
from .grid import Field, Grid, transform
from .stepper import NonlinearityPhi

__all__ = [
    "SpectralData",
    "Barrier",
    "EnergyReport",
    "DeGiorgiReport",
    "bilinear_form",
    "h_norm",
    "h_star_norm",
    "b_functional",
    "energy_inequality_check",
    "truncation_energies",
    "steklov",
]


@dataclass(frozen=True)
class SpectralData:
    """Fourier multipliers lambda_k = |xi_k|^(2s) and mode coefficients."""

    multipliers: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        mult = np.asarray(self.multipliers, dtype=float)
        if mult.flat[0] != 0.0:
            raise ValueError("zero mode must carry multiplier 0")
        if np.any(mult < 0):
            raise ValueError("multipliers must be nonnegative")

    @classmethod
    def from_field(cls, f: Field, s: float) -> "SpectralData":
        return cls(multipliers=f.grid.multipliers(s), coeffs=transform(f))


@dataclass(frozen=True)
class Barrier:
    """Lipschitz truncation barrier psi_L(t, x) = L + (|t|^(g/2)-1)_+ + (|x|^(s/2)-1)_+.

    |x| is the periodic distance to ``center`` (the domain midpoint unless
    given); psi_L equals L on |t| <= 1, |x| <= 1 and is >= L everywhere.
    """

    L: float
    gamma: float
    s: float
    center: tuple | None = None

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("truncation level L must be >= 0")

    def spatial_part(self, grid: Grid) -> np.ndarray:
        center = self.center
        if center is None:
            center = (grid.length / 2.0,) * grid.dim
        dist = grid.periodic_distance(center)
        return np.maximum(dist ** (self.s / 2.0) - 1.0, 0.0)

    def time_part(self, t: float) -> float:
        return max(abs(t) ** (self.gamma / 2.0) - 1.0, 0.0)

    def __call__(self, t: float, grid: Grid) -> np.ndarray:
        return self.L + self.time_part(t) + self.spatial_part(grid)


def _norm_factor(grid: Grid) -> float:
    # Parseval factor for the package FFT convention
    return grid.cell_volume / grid.size


def bilinear_form(f: Field, g: Field, s: float) -> float:
    """Dirichlet form E(f, g) = sum_k lambda_k Re(fhat_k conj(ghat_k))."""
    if f.grid != g.grid:
        raise ValueError("bilinear form needs fields on one grid")
    lam = f.grid.multipliers(s)
    fh = transform(f)
    gh = transform(g)
    return float(np.sum(lam * (fh * np.conj(gh)).real) * _norm_factor(f.grid))


def h_norm(f: Field, s: float) -> float:
    """Energy norm (sum_k lambda_k |fhat_k|^2)^(1/2)."""
    lam = f.grid.multipliers(s)
    fh = transform(f)
    return math.sqrt(float(np.sum(lam * np.abs(fh) ** 2) * _norm_factor(f.grid)))


def h_star_norm(f: Field, s: float) -> float:
    """Dual norm (sum_k lambda_k^(-1) |fhat_k|^2)^(1/2) over nonzero modes.

    Defined only on zero-mean fields: the zero eigenvalue of the periodic
    operator would otherwise make the norm infinite.
    """
    mean = float(f.values.mean())
    if abs(mean) > 1e-10:
        raise ValueError(f"h_star_norm needs a zero-mean field, mean={mean:.3e}")
    lam = f.grid.multipliers(s)
    fh = transform(f)
    nz = lam > 0
    return math.sqrt(float(np.sum(np.abs(fh[nz]) ** 2 / lam[nz]) * _norm_factor(f.grid)))


def b_functional(w: float, psi_L: float, phi: NonlinearityPhi) -> float:
    """Level-set potential B_psi(w) = int_0^{(w-psi)_+} theta'(tau + psi) tau dtau.

    Adaptive quadrature, relative error <= 1e-8; returns 0 when w <= psi_L.
    The theta' endpoint singularity at zero state (m > 1) is integrable.
    """
    v = w - psi_L
    if v <= 0.0:
        return 0.0
    val, _ = sp_integrate.quad(
        lambda tau: phi.theta_prime(tau + psi_L) * tau,
        0.0,
        v,
        epsabs=1e-14,
        epsrel=1e-8,
        limit=200,
    )
    return float(val)


@dataclass(frozen=True)
class EnergyReport:
    """Assembled terms of the discrete level-set energy inequality.

    slack = RHS - LHS with
      LHS = b_final + dissipation
      RHS = b_initial + forcing_term + lower_order
    where the lower-order sum carries the constant C = 1 + lambda2_theta,
    recorded in the report rather than asserted against an unknown constant.
    """

    b_initial: float
    b_final: float
    dissipation: float
    forcing_term: float
    lower_order: float
    slack: float
    lambda1_theta: float
    lambda2_theta: float
    constant_used: float
    j1: int
    j2: int
    level: float

    def __post_init__(self):
        for name in ("b_initial", "b_final", "dissipation"):
            if getattr(self, name) < -1e-12:
                raise ValueError(f"{name} must be nonnegative")


def _theta_range_constants(phi: NonlinearityPhi, ell: float, M: float):
    """(lambda1, lambda2) from theta on [ell, M]: half the inf of theta' and
    the total variation theta(M) - theta(ell)."""
    if M <= ell:
        return 0.0, 0.0
    taus = np.linspace(max(ell, 1e-300), M, 257)
    lam1 = 0.5 * float(phi.theta_prime(taus).min())
    lam2 = float(phi.theta(M) - phi.theta(ell))
    return lam1, lam2


def energy_inequality_check(history: History, barrier: Barrier, j1: int, j2: int,
                            f=None) -> EnergyReport:
    """Assemble the discrete energy inequality over steps (j1, j2].

    Test function eps*(u - psi_L)_+ on the diffusion-side state u = phi(W);
    barriers are evaluated at the raw run times, so on a unit window the time
    part is inert.  slack >= 0 certifies the inequality for this run.
    """
    params = history.params
    if not 0 <= j1 < j2 <= history.j_cur:
        raise ValueError(f"need 0 <= j1 < j2 <= {history.j_cur}, got ({j1}, {j2})")
    phi = NonlinearityPhi(params.m)
    grid = history.grid
    eps = params.eps
    psi_x = barrier.spatial_part(grid)

    def psi_at(j):
        return barrier.L + barrier.time_part(params.time_at(j)) + psi_x

    def b_integral(j):
        u = phi.phi(history.fields[j].values)
        psi = psi_at(j)
        active = u > psi
        total = 0.0
        for w_val, p_val in zip(u[active].ravel(), psi[active].ravel()):
            total += b_functional(float(w_val), float(p_val), phi)
        return total * grid.cell_volume

    b_initial = b_integral(j1)
    b_final = b_integral(j2)

    dissipation = 0.0
    forcing_term = 0.0
    lower_sum = 0.0
    ell = math.inf
    M = -math.inf
    any_active = False
    for j in range(j1 + 1, j2 + 1):
        u = phi.phi(history.fields[j].values)
        psi = psi_at(j)
        v = np.maximum(u - psi, 0.0)
        active = v > 0
        if active.any():
            any_active = True
            ell = min(ell, float(psi[active].min()))
            M = max(M, float(u[active].max()))
        vf = Field(grid, v)
        dissipation += eps * bilinear_form(vf, vf, params.s)
        if f is not None:
            forcing_term += eps * float((v * f[j - 1].values).sum()) * grid.cell_volume
        lower_sum += eps * float(
            (v**2).sum() * grid.cell_volume
            + v.sum() * grid.cell_volume
            + active.sum() * grid.cell_volume
        )
    if not any_active:
        ell = M = 0.0
    lam1, lam2 = _theta_range_constants(phi, ell, M)
    constant = 1.0 + lam2
    lower_order = constant * lower_sum
    slack = (b_initial + forcing_term + lower_order) - (b_final + dissipation)
    return EnergyReport(
        b_initial=b_initial, b_final=b_final, dissipation=dissipation,
        forcing_term=forcing_term, lower_order=lower_order, slack=slack,
        lambda1_theta=lam1, lambda2_theta=lam2, constant_used=constant,
        j1=j1, j2=j2, level=barrier.L,
    )


@dataclass(frozen=True)
class DeGiorgiReport:
    """Truncated level-set energies over the shrinking window/level ladder."""

    U: np.ndarray
    T_levels: np.ndarray
    L_levels: np.ndarray
    p_star: float
    sigma0_used: float
    converged: bool
    U_quadratic: np.ndarray | None = None

    def __post_init__(self):
        if np.any(np.asarray(self.U) < 0):
            raise ValueError("truncated energies must be nonnegative")


def p_star_exponent(s: float, gamma: float, dim: int) -> float:
    """Interpolation exponent (s + gamma N) / ((1 - gamma) s + gamma N)."""
    return (s + gamma * dim) / ((1.0 - gamma) * s + gamma * dim)


def truncation_energies(history: History, phi: NonlinearityPhi, s: float, k_max: int,
                        also_quadratic: bool = False) -> DeGiorgiReport:
    """Ladder of truncated energies U_k on the remapped tail window.

    The run interval [a, T] is mapped affinely onto [-2, 0]; level k uses the
    window [T_k, 0] with T_k = -(1 + 2^-k) and barrier level
    L_k = (1 - 2^-k)/2, and

        U_k = sup_window int (u - psi_{L_k})_+^(3-gamma)
              + sum_window eps~ * ||(u - psi_{L_k})_+||^2_{H^{s/2}}

    evaluated on the diffusion-side state u = phi(W).  sigma0_used records
    the measured space-time square integral above the bare barrier, the
    quantity the small-data hypothesis bounds.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    params = history.params
    grid = history.grid
    span = params.T - params.a
    times = history.times()
    remapped = (times - params.T) * 2.0 / span  # [a, T] -> [-2, 0]
    eps_tilde = 2.0 * params.eps / span
    T_levels = -(1.0 + 0.5 ** np.arange(k_max + 1))
    L_levels = 0.5 * (1.0 - 0.5 ** np.arange(k_max + 1))
    if remapped[0] > T_levels.min() + 1e-12:
        raise ValueError("history does not cover the remapped window")

    u_stack = [phi.phi(f.values) for f in history.fields]
    U = np.zeros(k_max + 1)
    U2 = np.zeros(k_max + 1) if also_quadratic else None
    sigma0 = 0.0
    for k in range(k_max + 1):
        barrier = Barrier(L=float(L_levels[k]), gamma=params.gamma, s=s)
        psi_x = barrier.spatial_part(grid)
        sup_term = 0.0
        sup2 = 0.0
        diss = 0.0
        for j, t_tilde in enumerate(remapped):
            if t_tilde < T_levels[k] - 1e-12:
                continue
            psi = barrier.L + barrier.time_part(t_tilde) + psi_x
            v = np.maximum(u_stack[j] - psi, 0.0)
            sup_term = max(sup_term, float((v ** (3.0 - params.gamma)).sum()) * grid.cell_volume)
            if also_quadratic:
                sup2 = max(sup2, float((v**2).sum()) * grid.cell_volume)
            vf = Field(grid, v)
            diss += eps_tilde * bilinear_form(vf, vf, s)
            if k == 0:
                sigma0 += eps_tilde * float((v**2).sum()) * grid.cell_volume
        U[k] = sup_term + diss
        if also_quadratic:
            U2[k] = sup2 + diss
    converged = bool(U[k_max] <= 1e-6 * U[0])
    return DeGiorgiReport(
        U=U, T_levels=T_levels, L_levels=L_levels,
        p_star=p_star_exponent(s, params.gamma, grid.dim),
        sigma0_used=sigma0, converged=converged, U_quadratic=U2,
    )


def steklov(series: list, eps: float, h: float) -> list:
    """Sliding time averages v^h over windows of length h = M*eps.

    v^h_j averages samples j..j+M-1, so the forward difference of the average
    equals the averaged forward difference exactly:
    (v^h_{j+1} - v^h_j)/eps = (v_{j+M} - v_j)/h.
    """
    if eps <= 0 or h <= 0:
        raise ValueError("eps and h must be positive")
    ratio = h / eps
    M = int(round(ratio))
    if M < 1 or abs(ratio - M) > 1e-9:
        raise ValueError(f"h must be a positive multiple of eps, got h/eps={ratio}")
    if len(series) < M:
        raise ValueError(f"series too short: {len(series)} samples, window {M}")
    grid = series[0].grid
    stack = np.stack([f.values for f in series])
    csum = np.cumsum(stack, axis=0)
    out = []
    for j in range(len(series) - M + 1):
        total = csum[j + M - 1] - (csum[j - 1] if j > 0 else 0.0)
        out.append(Field(grid, total / M))
    return out


def swap_norm_via_inverse(f: Field, s: float) -> float:
    """h_norm of the inverse-multiplier image; equals h_star_norm(f) exactly."""
    return h_norm(invert_frac_laplacian(f, s), s)

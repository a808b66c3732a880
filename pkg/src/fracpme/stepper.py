"""Implicit marching for the fractional-time nonlocal porous medium equation.

Each step solves the monotone system

    diag * W_j + L^s(phi(W_j)) = sum_i weights[i] * W_i + f_j

with the memory weights of the discrete Marchaud derivative on the right.
The step reduces to the resolvent u + lambda * L^s(phi(u)) = g with
lambda = 1/diag, solved by damped matrix-free Newton (spectrally
preconditioned GMRES inner solves) with a frozen-slope fixed-point fallback
for the degenerate regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import linalg as sp_linalg

from .fracops import History, Params, marchaud_weights
from .grid import Field, inverse_transform, transform

__all__ = ["NonlinearityPhi", "StepResult", "NonConvergence", "resolvent", "step", "solve"]


@dataclass(frozen=True)
class NonlinearityPhi:
    """Odd power nonlinearity phi(w) = |w|^(m-1) w and its inverse theta."""

    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        return np.sign(w) * np.abs(w) ** self.m

    def phi_prime(self, w):
        w = np.asarray(w, dtype=float)
        if self.m == 1.0:
            return np.ones_like(w)
        return self.m * np.abs(w) ** (self.m - 1.0)

    def theta(self, u):
        u = np.asarray(u, dtype=float)
        return np.sign(u) * np.abs(u) ** (1.0 / self.m)

    def theta_prime(self, u):
        u = np.asarray(u, dtype=float)
        if self.m == 1.0:
            return np.ones_like(u)
        return (1.0 / self.m) * np.abs(u) ** (1.0 / self.m - 1.0)


@dataclass(frozen=True)
class StepResult:
    field: Field
    residual_norm: float
    iterations: int


class NonConvergence(Exception):
    """Iteration budget exhausted; carries the best residual seen."""

    def __init__(self, message, best_residual=None, iterations=None, step=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations
        self.step = step


def _gmres(op, rhs, M, rtol):
    try:
        sol, _ = sp_linalg.gmres(op, rhs, M=M, rtol=rtol, atol=0.0, maxiter=60)
    except TypeError:  # scipy < 1.12 spelling
        sol, _ = sp_linalg.gmres(op, rhs, M=M, tol=rtol, atol=0.0, maxiter=60)
    return sol


def resolvent(lambda_: float, g: Field, phi: NonlinearityPhi, s: float,
              tol: float = 1e-10, max_iter: int = 60, x0: Field | None = None) -> Field:
    """Solve u + lambda * L^s(phi(u)) = g to sup-norm residual <= tol."""
    field, _, _ = _resolvent_impl(lambda_, g, phi, s, tol, max_iter, x0)
    return field


def _resolvent_impl(lambda_: float, g: Field, phi: NonlinearityPhi, s: float,
                    tol: float, max_iter: int, x0: Field | None):
    if not lambda_ > 0:
        raise ValueError(f"lambda must be positive, got {lambda_}")
    grid = g.grid
    mult = grid.multipliers(s)
    gv = g.values

    def apply_ls(v):
        return np.fft.ifftn(np.fft.fftn(v) * mult).real

    def residual(u):
        return u + lambda_ * apply_ls(phi.phi(u)) - gv

    if phi.m == 1.0:
        # linear problem: diagonal in Fourier space, solved exactly
        coeffs = transform(g) / (1.0 + lambda_ * mult)
        u = inverse_transform(grid, coeffs)
        return u, float(np.abs(residual(u.values)).max()), 1

    u = (x0.values if x0 is not None else gv).copy()
    res = residual(u)
    res_norm = float(np.abs(res).max())
    best = res_norm
    iters = 0
    while res_norm > tol and iters < max_iter:
        iters += 1
        dphi = phi.phi_prime(u)
        dbar = max(float(dphi.max()), 1e-14)
        precond_sym = 1.0 + lambda_ * dbar * mult

        def matvec(v):
            return v + lambda_ * apply_ls(dphi * v.reshape(grid.shape)).ravel()

        def psolve(v):
            return np.fft.ifftn(np.fft.fftn(v.reshape(grid.shape)) / precond_sym).real.ravel()

        op = sp_linalg.LinearOperator((grid.size, grid.size), matvec=matvec)
        M = sp_linalg.LinearOperator((grid.size, grid.size), matvec=psolve)
        delta = _gmres(op, -res.ravel(), M, rtol=1e-2).reshape(grid.shape)

        # damping: halve the step while the residual does not decrease
        alpha = 1.0
        improved = False
        for _ in range(30):
            trial = u + alpha * delta
            trial_res = residual(trial)
            trial_norm = float(np.abs(trial_res).max())
            if trial_norm < res_norm:
                u, res, res_norm = trial, trial_res, trial_norm
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        best = min(best, res_norm)

    if res_norm > tol:
        # frozen-slope fixed point: contraction for monotone phi with
        # bounded slope, robust where phi' degenerates at the free boundary
        for _ in range(5000):
            if res_norm <= tol:
                break
            iters += 1
            dbar = max(float(phi.phi_prime(u).max()), 1e-14)
            denom = 1.0 + lambda_ * dbar * mult
            rhs_hat = np.fft.fftn(gv + lambda_ * apply_ls(dbar * u - phi.phi(u)))
            u = np.fft.ifftn(rhs_hat / denom).real
            res = residual(u)
            res_norm = float(np.abs(res).max())
        best = min(best, res_norm)

    if res_norm > tol:
        raise NonConvergence(
            f"resolvent stalled at residual {best:.3e} (tol {tol:.3e})",
            best_residual=best, iterations=iters,
        )
    return Field(grid, u), res_norm, iters


def step(history: History, phi: NonlinearityPhi, s: float, f_j: Field | None = None) -> StepResult:
    """Advance the history by one implicit step.

    The new field solves diag*W_j + L^s(phi(W_j)) = memory + f_j to the
    params' newton_tol measured on this unscaled system.
    """
    params = history.params
    j = history.j_cur + 1
    weights, _, diag = marchaud_weights(params, j)
    stack = np.stack([f.values for f in history.fields[:j]])
    rhs = np.tensordot(weights, stack, axes=(0, 0))
    if f_j is not None:
        rhs = rhs + f_j.values
    g = Field(history.grid, rhs / diag)
    u, _, iters = _resolvent_impl(
        1.0 / diag, g, phi, s,
        tol=params.newton_tol / diag,
        max_iter=params.newton_max_iter,
        x0=history.fields[-1],
    )
    mult = history.grid.multipliers(s)
    res = diag * u.values + np.fft.ifftn(np.fft.fftn(phi.phi(u.values)) * mult).real - rhs
    return StepResult(field=u, residual_norm=float(np.abs(res).max()), iterations=iters)


def solve(params: Params, g: Field, forcing: list | None = None) -> History:
    """March the implicit scheme over all k steps from the initial datum g.

    Returns the full history with k+1 entries; per-step residuals are stored
    on ``history.step_stats`` for the performance report.  Aborts with the
    failing step index on NonConvergence.
    """
    if forcing is not None and len(forcing) not in (0, params.k):
        raise ValueError(f"forcing must have length {params.k} or be empty")
    if forcing is not None and len(forcing) == 0:
        forcing = None
    phi = NonlinearityPhi(params.m)
    history = History(params=params, fields=[g], forcing=forcing)
    stats = []
    for j in range(1, params.k + 1):
        f_j = forcing[j - 1] if forcing is not None else None
        try:
            result = step(history, phi, s=params.s, f_j=f_j)
        except NonConvergence as exc:
            exc.step = j
            raise
        history.append(result.field)
        stats.append((j, result.residual_norm, result.iterations))
    history.step_stats = stats
    return history

import math

import numpy as np
import pytest

from fracpme.diagnostics import temporal_holder_exponent
from fracpme.fracops import History, Params, marchaud_weights
from fracpme.grid import Field, Grid, integrate
from fracpme.oracles import linear_solution
from fracpme.stepper import NonConvergence, NonlinearityPhi, resolvent, solve, step

from conftest import gaussian_field, smooth_random_field

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# nonlinearity
# ---------------------------------------------------------------------------


def test_phi_is_odd_increasing_with_exact_inverse():
    w = np.linspace(-10.0, 10.0, 501)
    for m in (1.0, 1.5, 2.0, 3.0):
        phi = NonlinearityPhi(m)
        assert np.abs(phi.phi(-w) + phi.phi(w)).max() < 1e-12
        assert phi.phi(0.0) == 0.0
        assert np.all(np.diff(phi.phi(w)) > 0)
        assert np.abs(phi.theta(phi.phi(w)) - w).max() < 1e-12
    with pytest.raises(ValueError):
        NonlinearityPhi(0.0)


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


def test_resolvent_zero_fixed_point(grid64):
    phi = NonlinearityPhi(2.0)
    out = resolvent(0.3, Field.zeros(grid64), phi, 0.5, tol=1e-12)
    assert np.abs(out.values).max() < 1e-12


def test_resolvent_linear_single_mode(grid64):
    (x,) = grid64.coordinates()
    lam = 0.7
    s = 0.5
    g = Field(grid64, np.cos(2.0 * x))
    out = resolvent(lam, g, NonlinearityPhi(1.0), s)
    expected = np.cos(2.0 * x) / (1.0 + lam * 2.0 ** (2.0 * s))
    assert np.abs(out.values - expected).max() < 1e-12


def dense_slow_picard(grid, lam, g, phi, s, tol=1e-12, max_iter=200000):
    """Dense damped fixed point, deliberately naive; test-side oracle."""
    F = np.fft.fft(np.eye(grid.n), axis=0)
    A = np.fft.ifft(F * grid.multipliers(s)[:, None], axis=0).real.T
    u = g.values.copy()
    dmax = float(phi.phi_prime(g.values).max())
    rho = 1.0 / (1.0 + lam * grid.multipliers(s).max() * 2.0 * max(dmax, 1.0))
    for _ in range(max_iter):
        r = u + lam * (A @ phi.phi(u)) - g.values
        if np.abs(r).max() < tol:
            return u
        u = u - rho * r
    raise AssertionError("oracle did not converge")


def test_resolvent_m2_matches_dense_picard_oracle(grid64):
    (x,) = grid64.coordinates()
    g = Field(grid64, 0.8 * np.exp(-0.5 * ((x - np.pi) / (TWO_PI / 10.0)) ** 2) + 0.1 * np.cos(3.0 * x))
    phi = NonlinearityPhi(2.0)
    lam = 0.05
    u = resolvent(lam, g, phi, 0.5, tol=1e-11)
    mult = grid64.multipliers(0.5)
    residual = u.values + lam * np.fft.ifft(np.fft.fft(phi.phi(u.values)) * mult).real - g.values
    assert np.abs(residual).max() <= 1e-10
    oracle = dense_slow_picard(grid64, lam, g, phi, 0.5)
    assert np.abs(u.values - oracle).max() <= 1e-8


def test_resolvent_l1_contraction(grid64):
    phi = NonlinearityPhi(2.0)
    rng = np.random.default_rng(10)
    for lam in (0.01, 0.1, 1.0):
        for _ in range(4):
            a = smooth_random_field(grid64, rng)
            b = smooth_random_field(grid64, rng)
            ua = resolvent(lam, a, phi, 0.5, tol=1e-12)
            ub = resolvent(lam, b, phi, 0.5, tol=1e-12)
            gap_in = integrate(Field(grid64, np.abs(a.values - b.values)))
            gap_out = integrate(Field(grid64, np.abs(ua.values - ub.values)))
            assert gap_out <= gap_in + 1e-10


def test_resolvent_nonconvergence_reports_best_residual(grid64):
    g = gaussian_field(grid64, width=0.6)
    with pytest.raises(NonConvergence) as excinfo:
        resolvent(0.5, g, NonlinearityPhi(2.0), 0.5, tol=1e-30, max_iter=3)
    assert excinfo.value.best_residual is not None
    assert excinfo.value.best_residual > 0


# ---------------------------------------------------------------------------
# step
# ---------------------------------------------------------------------------


def test_step_preserves_constants(grid64):
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=8, newton_tol=1e-12)
    hist = History(params=params, fields=[Field.constant(grid64, 0.7)])
    phi = NonlinearityPhi(2.0)
    for _ in range(3):
        result = step(hist, phi, s=0.5)
        hist.append(result.field)
        assert np.abs(result.field.values - 0.7).max() < 1e-11


def test_step_single_mode_matches_scalar_recursion(grid64):
    (x,) = grid64.coordinates()
    params = Params(gamma=0.5, s=0.5, m=1.0, a=0.0, T=1.0, k=16, newton_tol=1e-12)
    g = Field(grid64, np.cos(4.0 * x))
    hist = solve(params, g)
    lam = 4.0 ** (2.0 * params.s)
    amp = [1.0]
    for j in range(1, params.k + 1):
        weights, _, diag = marchaud_weights(params, j)
        amp.append(float(np.dot(weights, amp[:j])) / (diag + lam))
    for j in (1, 4, 16):
        expected = amp[j] * np.cos(4.0 * x)
        assert np.abs(hist.fields[j].values - expected).max() < 1e-10


def test_step_mass_identity_m2(grid64):
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=24, newton_tol=1e-12)
    hist = solve(params, gaussian_field(grid64, width=0.6))
    masses = np.array([integrate(f) for f in hist.fields])
    assert np.abs(masses - masses[0]).max() <= 1e-10
    # full memory identity diag*M_j = sum w_i M_i forces M_j = M_0 by induction
    for j in (1, 10, 24):
        weights, _, diag = marchaud_weights(params, j)
        assert abs(diag * masses[j] - float(np.dot(weights, masses[:j]))) < 1e-10


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def test_solve_zero_data(grid64):
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=6)
    hist = solve(params, Field.zeros(grid64))
    assert len(hist.fields) == 7
    for f in hist.fields:
        assert np.abs(f.values).max() < 1e-14


def test_solve_linear_tracks_oracle_and_refines(grid64):
    g = gaussian_field(grid64, width=TWO_PI / 12.0)
    errors = []
    for k in (50, 100):
        params = Params(gamma=0.5, s=0.5, m=1.0, a=0.0, T=1.0, k=k)
        hist = solve(params, g)
        exact = linear_solution(g, 0.5, 0.5, 1.0)
        diff = hist.fields[-1] - exact
        errors.append(math.sqrt(integrate(diff * diff) / integrate(exact * exact)))
    assert errors[0] <= 1e-2
    assert errors[1] < errors[0]


def test_solve_rejects_bad_forcing_length(grid64):
    params = Params(gamma=0.5, s=0.5, m=1.0, a=0.0, T=1.0, k=4)
    with pytest.raises(ValueError):
        solve(params, Field.zeros(grid64), forcing=[Field.zeros(grid64)] * 3)


def test_solve_with_manufactured_forcing_keeps_steady_state(grid64):
    # f = L^s(phi(g)) makes g a steady state of the marched system
    from fracpme.fracops import frac_laplacian

    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=12, newton_tol=1e-12)
    g = gaussian_field(grid64, width=0.8, height=0.5)
    phi = NonlinearityPhi(2.0)
    f_field = frac_laplacian(Field(grid64, phi.phi(g.values)), 0.5)
    hist = solve(params, g, forcing=[f_field] * params.k)
    for f in hist.fields:
        assert np.abs(f.values - g.values).max() < 1e-9


def test_solve_nonconvergence_carries_step_index(grid64):
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=4, newton_tol=1e-30,
                    newton_max_iter=2)
    with pytest.raises(NonConvergence) as excinfo:
        solve(params, gaussian_field(grid64, width=0.5))
    assert excinfo.value.step == 1


def test_max_principle(grid64):
    rng = np.random.default_rng(11)
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=24, newton_tol=1e-12)
    for _ in range(3):
        g = smooth_random_field(grid64, rng, scale=0.8)
        hist = solve(params, g)
        for f in hist.fields:
            assert f.values.max() <= g.values.max() + 1e-10
            assert f.values.min() >= g.values.min() - 1e-10


def test_comparison_principle_small(grid64):
    rng = np.random.default_rng(12)
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=1.0, k=16, newton_tol=1e-12)
    for _ in range(3):
        lo = smooth_random_field(grid64, rng, scale=0.4)
        hi = Field(grid64, lo.values + 0.05 + np.abs(smooth_random_field(grid64, rng, 0.3).values))
        hist_lo = solve(params, lo)
        hist_hi = solve(params, hi)
        for a, b in zip(hist_lo.fields, hist_hi.fields):
            assert float((b.values - a.values).min()) >= -1e-10


def test_solve_two_dimensional_smoke():
    grid = Grid(dim=2, points_per_dim=16, length=TWO_PI)
    X, Y = grid.coordinates()
    g = Field(grid, np.exp(-((X - np.pi) ** 2 + (Y - np.pi) ** 2)))
    params = Params(gamma=0.5, s=0.5, m=2.0, a=0.0, T=0.25, k=8, newton_tol=1e-11)
    hist = solve(params, g)
    masses = [integrate(f) for f in hist.fields]
    assert max(abs(mm - masses[0]) for mm in masses) <= 1e-10


def test_temporal_modulus_positive_and_stable(grid64):
    g = gaussian_field(grid64, width=TWO_PI / 12.0)
    fits = []
    for k in (100, 200):
        params = Params(gamma=0.5, s=0.5, m=1.0, a=0.0, T=1.0, k=k)
        hist = solve(params, g)
        beta_hat, _, _ = temporal_holder_exponent(hist)
        fits.append(beta_hat)
    assert fits[0] > 0 and fits[1] > 0
    assert abs(fits[1] - fits[0]) <= 0.2 * abs(fits[0])

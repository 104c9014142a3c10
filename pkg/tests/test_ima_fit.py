import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from oracles import tarma_restricted_residuals
from tarma_lm.exceptions import (
    DegenerateInputError,
    InvalidSpecError,
    NearNoninvertibleWarning,
    TooShortError,
)
from tarma_lm.ima_fit import GRID_POINTS, fit_ima11, ima_loglik, residuals_under_h0
from tarma_lm.model_sim import NoiseSpec, simulate_ima


def test_residual_small_cases():
    npt.assert_array_equal(residuals_under_h0([0, 1, 3], 0.0, 0.0), [1, 2])
    npt.assert_allclose(residuals_under_h0([0, 1, 1], 0.0, 0.5), [1, 0.5])


@given(st.integers(0, 2**32), st.floats(-2, 2), st.floats(-0.99, 0.99))
def test_residuals_invert_to_series(seed, phi0, theta):
    x = np.cumsum(np.random.default_rng(seed).standard_normal(60))
    e = residuals_under_h0(x, phi0, theta)
    back = simulate_ima(theta, phi0, 1.0, e.size, x[0], NoiseSpec("custom", values=e)).values
    npt.assert_allclose(back, x, rtol=0, atol=1e-12 * max(1, np.abs(x).max()))


def test_residuals_match_oracle_loop(random_walk):
    npt.assert_allclose(residuals_under_h0(random_walk, 0.1, -0.4),
                        tarma_restricted_residuals(random_walk, 0.1, -0.4, 0, 0, 0.0),
                        rtol=1e-12, atol=1e-12)


def test_fit_invariants(random_walk):
    f = fit_ima11(random_walk)
    npt.assert_allclose(f.residuals, residuals_under_h0(random_walk, f.phi0_hat, f.theta_hat))
    npt.assert_allclose(f.sigma2_hat, np.mean(f.residuals ** 2))
    npt.assert_allclose(f.loglik, ima_loglik(random_walk, f.phi0_hat, f.theta_hat,
                                             f.sigma2_hat))


def _profile(x, theta):
    # closed form phi0 by least squares on the affine residual map
    e0 = residuals_under_h0(x, 0.0, theta)
    g = residuals_under_h0(x, 1.0, theta) - e0
    phi0 = -(g @ e0) / (g @ g)
    e = e0 + phi0 * g
    return phi0, e @ e / e.size


def test_fit_matches_dense_grid_oracle():
    for seed in range(5):
        x = simulate_ima(0.5, 0.0, 1.0, 2000, noise=NoiseSpec(seed=seed)).values
        f = fit_ima11(x)
        grid = np.linspace(-0.999, 0.999, 4001)
        s2 = [_profile(x, th)[1] for th in grid]
        i = int(np.argmin(s2))
        fine = np.linspace(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)], 401)
        s2f = [_profile(x, th)[1] for th in fine]
        th = fine[int(np.argmin(s2f))]
        assert abs(f.theta_hat - th) < 1e-3
        assert abs(f.phi0_hat - _profile(x, th)[0]) < 1e-3


def test_score_is_zero_at_fit(random_walk):
    f = fit_ima11(random_walk)
    h = 1e-6
    n = f.residuals.size

    def ll(p, t):
        return ima_loglik(random_walk, p, t, f.sigma2_hat)

    d_phi = (ll(f.phi0_hat + h, f.theta_hat) - ll(f.phi0_hat - h, f.theta_hat)) / (2 * h)
    d_th = (ll(f.phi0_hat, f.theta_hat + h) - ll(f.phi0_hat, f.theta_hat - h)) / (2 * h)
    assert abs(d_phi) / np.sqrt(n) < 1e-4
    assert abs(d_th) / np.sqrt(n) < 1e-4


def test_profile_phi0_beats_perturbations(random_walk):
    for th in np.linspace(-0.9, 0.9, 20):
        phi0, _ = _profile(random_walk, th)
        best = ima_loglik(random_walk, phi0, th, 1.0)
        assert best >= ima_loglik(random_walk, phi0 + 1e-3, th, 1.0)
        assert best >= ima_loglik(random_walk, phi0 - 1e-3, th, 1.0)


def test_loglik_beats_coarse_grid(random_walk):
    f = fit_ima11(random_walk)
    for th in np.linspace(-0.999, 0.999, GRID_POINTS):
        phi0, s2 = _profile(random_walk, th)
        assert f.loglik >= ima_loglik(random_walk, phi0, th, s2) - 1e-9


def test_location_and_scale(random_walk):
    a = fit_ima11(random_walk)
    b = fit_ima11(random_walk + 50.0)
    npt.assert_allclose([b.theta_hat, b.phi0_hat, b.sigma2_hat],
                        [a.theta_hat, a.phi0_hat, a.sigma2_hat], rtol=1e-10)
    npt.assert_allclose(b.residuals, a.residuals, rtol=1e-9, atol=1e-12)
    c = fit_ima11(3.0 * random_walk)
    assert abs(c.theta_hat - a.theta_hat) < 1e-8
    npt.assert_allclose([c.phi0_hat, c.sigma2_hat], [3 * a.phi0_hat, 9 * a.sigma2_hat],
                        rtol=1e-7)


def test_fix_phi0():
    x = simulate_ima(0.3, 0.0, 1.0, 500, noise=NoiseSpec(seed=4)).values
    f = fit_ima11(x, fix_phi0=True)
    assert f.phi0_hat == 0.0 and f.fix_phi0


@pytest.mark.slow
def test_consistency_monte_carlo():
    th = np.array([fit_ima11(simulate_ima(0.5, 0.0, 1.0, 2000, noise=NoiseSpec(seed=s)).values)
                   .theta_hat for s in range(200)])
    assert abs(th.mean() - 0.5) < 0.01
    assert np.mean(np.abs(th - 0.5) < 0.06) > 0.95
    th0 = np.array([fit_ima11(simulate_ima(0.0, 0.0, 1.0, 2000, noise=NoiseSpec(seed=s)).values)
                    .theta_hat for s in range(200)])
    assert np.mean(np.abs(th0) < 0.06) >= 0.95


def test_errors():
    with pytest.raises(TooShortError):
        fit_ima11(np.arange(10.0))
    with pytest.raises(DegenerateInputError):
        fit_ima11(np.arange(40.0))
    with pytest.raises(InvalidSpecError):
        fit_ima11([0.0, np.nan] * 20)
    with pytest.raises(InvalidSpecError):
        residuals_under_h0([0, 1, 2], 0.0, 1.0)


def test_boundary_warning():
    # an over-differenced white noise series pushes theta to the boundary
    x = np.random.default_rng(0).standard_normal(400)
    with pytest.warns(NearNoninvertibleWarning):
        fit_ima11(x)

import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy import integrate

from tarma_lm.exceptions import InvalidSpecError, MissingTableError
from tarma_lm.local_power import (
    DiffusionSpec,
    bin_probabilities,
    ergodic_example_density,
    ergodic_example_spec,
    limiting_stat_sample,
    local_power_curve,
    occupation_histogram,
    simulate_threshold_diffusion,
    threshold_gaussian_density,
    total_variation,
    write_power_csv,
)
from tarma_lm.null_dist import NullTable
from tarma_lm.rng import stream


def test_zero_drift_is_brownian():
    spec = DiffusionSpec(steps=1_000_000)
    w = simulate_threshold_diffusion(spec, seed=3)
    assert w[0] == 0.0 and w.size == spec.steps + 1
    assert abs(np.var(np.diff(w)) * spec.steps - 1) < 0.05


def test_euler_step_by_hand():
    spec = DiffusionSpec(1.0, -0.5, -2.0, -0.25, 0.1, steps=1000, w0=0.3)
    w = simulate_threshold_diffusion(spec, seed=8)
    g = stream(8).standard_normal(1000)
    dt = 1e-3
    x = 0.3
    for i in range(1000):
        d = (1.0 - 0.5 * x) if x <= 0.1 else (-2.0 - 0.25 * x)
        x = x + d * dt + math.sqrt(dt) * g[i]
        assert w[i + 1] == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_symmetric_example_mean_near_zero():
    spec = ergodic_example_spec(3.0, steps=200_000, horizon=200)
    w = simulate_threshold_diffusion(spec, seed=1, auto_step=True)
    assert abs(w[w.size // 5:].mean()) < 0.1


@pytest.mark.parametrize("h", [1.0, 3.0, 6.0])
def test_density_normalised(h):
    val, _ = integrate.quad(ergodic_example_density, -12, 12, args=(h,), points=[0.0],
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    assert abs(val - 1) < 1e-6
    npt.assert_allclose(bin_probabilities(np.array([-12, 0, 12]), h).sum(), 1, atol=1e-6)


def test_density_shape():
    x = np.array([-2.0, 2.0])
    npt.assert_allclose(threshold_gaussian_density(x, 1.0)[0], threshold_gaussian_density(x, 1.0)[1])
    assert threshold_gaussian_density(0.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_occupation_matches_density_and_is_step_stable():
    edges = np.linspace(-12, 12, 97)
    spec = ergodic_example_spec(3.0, steps=1000 * 200, horizon=200)
    p = occupation_histogram(spec, edges, paths=10, seed=1, auto_step=True)
    assert total_variation(p, bin_probabilities(edges, 3.0)) < 0.05
    q = occupation_histogram(spec, edges, paths=10, seed=1, auto_step=True, halve=True)
    assert total_variation(p, q) < 0.01


def test_auto_step_scales_with_coefficients():
    spec = ergodic_example_spec(3.0, steps=1000)
    assert spec.effective_steps(False) == 1000
    assert spec.effective_steps(True) == 6000


def test_median_F_increases_with_h():
    med = [np.median(limiting_stat_sample(ergodic_example_spec(h, 1000), -0.5, 0.5, 200, 7))
           for h in (1.0, 3.0, 6.0)]
    assert med[0] < med[1] < med[2]


def test_power_curve_monotone_and_bounded():
    fam = [(h, ergodic_example_spec(h, 1000)) for h in (0.0, 1.0, 3.0)]
    pts = local_power_curve(fam, reps=1000, seed=2)
    rates = [p.rate for p in pts]
    assert all(0 <= r <= 1 for r in rates)
    assert rates[0] == pytest.approx(0.05, abs=3 * math.sqrt(0.05 * 0.95 / 1000) + 0.01)
    assert rates[0] < rates[1] < rates[2]
    for p in pts:
        assert p.se == pytest.approx(math.sqrt(p.rate * (1 - p.rate) / 1000))
    lines = write_power_csv(pts).splitlines()
    assert lines[0] == "param,rate,se" and len(lines) == 4


def test_percentile_band_uses_table():
    fam = [(0.0, DiffusionSpec(steps=1000))]
    with pytest.raises(MissingTableError):
        local_power_curve(fam, reps=1000, r_L=0.25, r_U=0.75, band="percentile",
                          table=NullTable([], 1000, 5000, 0))


def test_validation():
    with pytest.raises(InvalidSpecError):
        DiffusionSpec(math.nan)
    with pytest.raises(InvalidSpecError):
        DiffusionSpec(steps=10)
    with pytest.raises(InvalidSpecError):
        DiffusionSpec(0.0, 0.1, 0.0, -0.1, rho_sqrt_if=1.0)
    DiffusionSpec(0.0, -0.5, 0.0, -0.5, rho_sqrt_if=1.0)
    with pytest.raises(InvalidSpecError):
        local_power_curve([], reps=10)
    with pytest.raises(InvalidSpecError):
        ergodic_example_spec(-1.0)

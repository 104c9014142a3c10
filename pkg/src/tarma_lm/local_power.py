"""Threshold-diffusion limit of the supLM statistic under local alternatives."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import norm

from . import _kernels as K
from .exceptions import InvalidSpecError, MissingTableError
from .null_dist import ASYMPTOTIC, NullTable, default_table, functional_from_path
from .rng import check_seed, stream

__all__ = [
    "DiffusionSpec",
    "PowerPoint",
    "simulate_threshold_diffusion",
    "limiting_stat_under_alternative",
    "limiting_stat_sample",
    "local_power_curve",
    "write_power_csv",
    "ergodic_example_spec",
    "threshold_gaussian_density",
    "ergodic_example_density",
    "occupation_histogram",
    "total_variation",
    "bin_probabilities",
]

MIN_STEPS = 1000


@dataclass(frozen=True)
class DiffusionSpec:
    """Drift ``c_1_0 + c_1_1 w`` below ``tau0`` and ``c_2_0 + c_2_1 w`` above.

    Coefficients are the effective ones, already multiplied by
    ``rho * sqrt(I_f)`` (and divided by ``sigma (1 - theta)`` for intercepts).
    Set ``rho_sqrt_if`` to check the slope conditions
    ``-pi/2 < h_1_1, h_2_1 <= 0`` and ``h_1_1 + h_2_1 < 0`` on the raw slopes.
    """

    c_1_0: float = 0.0
    c_1_1: float = 0.0
    c_2_0: float = 0.0
    c_2_1: float = 0.0
    tau0: float = 0.0
    steps: int = 5000
    w0: float = 0.0
    horizon: float = 1.0
    rho_sqrt_if: float | None = None

    def __post_init__(self):
        coefs = (self.c_1_0, self.c_1_1, self.c_2_0, self.c_2_1, self.tau0, self.w0)
        if not all(math.isfinite(c) for c in coefs):
            raise InvalidSpecError("non-finite drift coefficient")
        if self.steps < MIN_STEPS:
            raise InvalidSpecError(f"steps must be at least {MIN_STEPS}")
        if not self.horizon > 0:
            raise InvalidSpecError("horizon must be positive")
        if self.rho_sqrt_if is not None:
            if self.rho_sqrt_if == 0:
                raise InvalidSpecError("rho * sqrt(I_f) must be non-zero to recover slopes")
            h11 = self.c_1_1 / self.rho_sqrt_if
            h21 = self.c_2_1 / self.rho_sqrt_if
            if not (-math.pi / 2 < h11 <= 0 and -math.pi / 2 < h21 <= 0 and h11 + h21 < 0):
                raise InvalidSpecError(
                    f"slopes h_1_1={h11:.4g}, h_2_1={h21:.4g} violate the contiguity conditions")

    @property
    def max_coef(self) -> float:
        return max(abs(self.c_1_0), abs(self.c_1_1), abs(self.c_2_0), abs(self.c_2_1))

    def effective_steps(self, auto_step: bool) -> int:
        if not auto_step:
            return self.steps
        return int(math.ceil(self.steps * max(1.0, self.max_coef)))


def ergodic_example_spec(h: float, steps: int = 5000, horizon: float = 1.0) -> DiffusionSpec:
    """Symmetric ergodic example: drift ``2h I(w <= 0) - 2h I(w > 0) - w / 2``."""
    if not h >= 0:
        raise InvalidSpecError("h must be non-negative")
    return DiffusionSpec(2 * h, -0.5, -2 * h, -0.5, 0.0, steps, 0.0, horizon)


def simulate_threshold_diffusion(spec: DiffusionSpec, seed: int = 0,
                                 auto_step: bool = False) -> np.ndarray:
    """Euler-Maruyama path ``W_0..W_steps`` on a uniform grid over ``[0, horizon]``."""
    check_seed(seed)
    steps = spec.effective_steps(auto_step)
    z = stream(seed).standard_normal(steps)
    return K.euler_threshold_diffusion(spec.w0, z, spec.horizon / steps, spec.c_1_0,
                                       spec.c_1_1, spec.c_2_0, spec.c_2_1, spec.tau0)


def limiting_stat_under_alternative(spec: DiffusionSpec, r_L: float, r_U: float,
                                    steps: int | None = None, tau_points: int | None = None,
                                    seed: int = 0, band: str = "absolute",
                                    auto_step: bool = False) -> float:
    """F(W; r_L, r_U) with W the threshold diffusion on [0, 1].

    ``band="percentile"`` reads ``r_L, r_U`` as occupation fractions of the path.
    """
    if not r_L < r_U:
        raise InvalidSpecError("need r_L < r_U")
    if steps is not None:
        spec = replace(spec, steps=int(steps))
    if spec.horizon != 1.0:
        spec = replace(spec, horizon=1.0)
    w = simulate_threshold_diffusion(spec, seed, auto_step)
    return functional_from_path(w, r_L, r_U, tau_points, band)


def limiting_stat_sample(spec: DiffusionSpec, r_L: float, r_U: float, reps: int, seed: int,
                         tau_points: int | None = None, band: str = "absolute",
                         auto_step: bool = False) -> np.ndarray:
    """Independent draws of the limiting statistic; draw ``i`` uses stream ``(seed, i)``."""
    out = np.empty(reps)
    for i in range(reps):
        out[i] = limiting_stat_under_alternative(spec, r_L, r_U, None, tau_points,
                                                 _key_seed(seed, i), band, auto_step)
    return out


def _key_seed(seed: int, *key: int) -> int:
    from .rng import child_seed

    return child_seed(seed, *key)


@dataclass(frozen=True)
class PowerPoint:
    param: float
    rate: float
    se: float


def local_power_curve(family: Sequence[tuple[float, DiffusionSpec]], level: float = 0.05,
                      reps: int = 1000, seed: int = 0, r_L: float = -0.5, r_U: float = 0.5,
                      band: str = "absolute", critical: float | None = None,
                      table: NullTable | None = None, tau_points: int | None = None,
                      auto_step: bool = False) -> list[PowerPoint]:
    """Rejection rate of the limiting statistic for each member of a diffusion family.

    The critical value is the ``1 - level`` null quantile. For a percentile
    band ``[pi, 1 - pi]`` it comes from the asymptotic entry of ``table``
    (default: the shipped table); for an absolute band it is simulated from
    zero-drift paths with the same ``reps`` unless ``critical`` is given.
    """
    if not 0 < level < 1:
        raise InvalidSpecError("level must lie in (0, 1)")
    if reps < 1000:
        raise InvalidSpecError("reps must be at least 1000")
    if critical is None:
        if band == "percentile":
            table = default_table() if table is None else table
            entry = table.find(0.0, ASYMPTOTIC, r_L)
            if entry is None or not math.isclose(r_U, 1 - r_L):
                raise MissingTableError(0.0, ASYMPTOTIC, r_L)
            try:
                critical = entry.quantile(1 - level)
            except KeyError:
                raise MissingTableError(0.0, ASYMPTOTIC, r_L) from None
        else:
            steps = family[0][1].steps if family else 5000
            null = limiting_stat_sample(DiffusionSpec(steps=steps), r_L, r_U, reps,
                                        _key_seed(seed, 1 << 20), tau_points, band)
            critical = float(np.quantile(null, 1 - level))
    out = []
    for i, (param, spec) in enumerate(family):
        f = limiting_stat_sample(spec, r_L, r_U, reps, _key_seed(seed, i), tau_points, band,
                                 auto_step)
        rate = float(np.mean(f > critical))
        out.append(PowerPoint(float(param), rate, math.sqrt(rate * (1 - rate) / reps)))
    return out


def write_power_csv(points: Sequence[PowerPoint], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    buf.write("param,rate,se\n")
    for p in points:
        buf.write(f"{p.param!r},{p.rate!r},{p.se!r}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def threshold_gaussian_density(x, shift: float) -> np.ndarray:
    """``k^-1 exp(-{(x - s)^2 I(x <= 0) + (x + s)^2 I(x > 0)} / 2)``, ``k = 2 sqrt(2 pi) Phi(-s)``."""
    x = np.asarray(x, dtype=float)
    k = 2 * math.sqrt(2 * math.pi) * norm.cdf(-shift)
    return np.exp(-np.where(x <= 0, (x - shift) ** 2, (x + shift) ** 2) / 2) / k


def _threshold_gaussian_cdf(x, shift: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    half = 2 * norm.cdf(-shift)
    return np.where(x <= 0, norm.cdf(x - shift) / half, 1 - norm.cdf(-x - shift) / half)


def ergodic_example_density(x, h: float) -> np.ndarray:
    """Stationary density of the symmetric ergodic example with parameter ``h``.

    For unit diffusion the stationary density is proportional to
    ``exp(2 * integral of the drift)``; with drift ``+-2h - w/2`` this is the
    threshold-Gaussian form with shift ``4h``.
    """
    return threshold_gaussian_density(x, 4 * h)


def occupation_histogram(spec: DiffusionSpec, edges: np.ndarray, burn_frac: float = 0.2,
                         paths: int = 50, seed: int = 0, halve: bool = False,
                         auto_step: bool = False) -> np.ndarray:
    """Fraction of post-burn-in time spent in each bin, pooled over paths.

    With ``halve=True`` the same Brownian increments drive a path with half
    the step size, so the two histograms are coupled.
    """
    edges = np.asarray(edges, dtype=float)
    steps = spec.effective_steps(auto_step)
    dt = spec.horizon / steps
    counts = np.zeros(edges.size - 1)
    total = 0
    for p in range(paths):
        z = stream(seed, p).standard_normal(2 * steps)
        if halve:
            w = K.euler_threshold_diffusion(spec.w0, z, dt / 2, spec.c_1_0, spec.c_1_1,
                                            spec.c_2_0, spec.c_2_1, spec.tau0)
            w = w[int(burn_frac * 2 * steps) + 1:]
        else:
            zc = (z[0::2] + z[1::2]) / math.sqrt(2)
            w = K.euler_threshold_diffusion(spec.w0, zc, dt, spec.c_1_0, spec.c_1_1,
                                            spec.c_2_0, spec.c_2_1, spec.tau0)
            w = w[int(burn_frac * steps) + 1:]
        counts += np.histogram(w, edges)[0]
        total += w.size
    return counts / total


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance; mass outside the bins counts as one extra cell."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    return 0.5 * (float(np.abs(p - q).sum()) + abs((1 - p.sum()) - (1 - q.sum())))


def bin_probabilities(edges: np.ndarray, h: float) -> np.ndarray:
    """Exact bin masses of :func:`ergodic_example_density`."""
    return np.diff(_threshold_gaussian_cdf(np.asarray(edges, float), 4 * h))

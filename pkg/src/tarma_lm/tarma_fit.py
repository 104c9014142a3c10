"""Conditional Gaussian estimation of a two-regime TARMA(1,1) with threshold grid search."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from ._parallel import pmap
from .exceptions import (
    InvalidSpecError,
    NearNoninvertibleWarning,
    NoAdmissibleThresholdError,
    TooShortError,
)
from .model_sim import TarmaSpec
from .series import as_values

__all__ = ["TarmaFit", "fit_tarma11", "fit_tarma_at", "aic_profile", "format_fit",
           "write_fit_csv", "write_profile_csv", "PARAM_NAMES"]

MIN_LENGTH = 100
THETA_BOUND = 0.999
MA_GRID = 7
MA_TOL = 1e-6
PARAM_NAMES = ("phi_1_0", "phi_1_1", "phi_2_0", "phi_2_1", "theta_lower", "theta_upper")


@dataclass(frozen=True, eq=False)
class TarmaFit:
    """Result of :func:`fit_tarma11`.

    ``se`` maps parameter names to standard errors from the inverse observed
    information; ``threshold_grid`` holds ``(r, aic)`` for every admissible
    candidate.
    """

    spec: TarmaSpec
    se: dict
    aic: float
    sigma2_hat: float
    residuals: np.ndarray
    regime_counts: tuple[int, int]
    threshold_grid: np.ndarray
    k: int = 7
    common_theta: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.residuals.size

    @property
    def r_hat(self) -> float:
        return self.spec.r

    @property
    def loglik(self) -> float:
        return -0.5 * self.n * (math.log(2 * math.pi * self.sigma2_hat) + 1)

    def params(self) -> dict:
        s = self.spec
        return dict(zip(PARAM_NAMES, (s.phi_1_0, s.phi_1_1, s.phi_2_0, s.phi_2_1,
                                      s.theta_lower, s.theta_upper)))


@dataclass(frozen=True)
class _AtR:
    r: float
    ssr: float
    phi: np.ndarray
    th_lo: float
    th_up: float
    n_low: int


def _fit_r(y, xl, common, r):
    low = xl <= r
    ssr, tl, tu = K.fit_tarma_at(y, xl, low, common, THETA_BOUND, MA_GRID, MA_TOL)
    if common:
        tu = tl
    _, phi = K.tarma_profile(y, xl, low, tl, tu)
    return _AtR(float(r), float(ssr), phi, float(tl), float(tu), int(low.sum()))


def fit_tarma_at(series, r: float, common_theta: bool = False) -> tuple[float, TarmaSpec]:
    """Conditional fit at a fixed threshold; returns ``(sigma2_hat, spec)``."""
    x = as_values(series)
    res = _fit_r(x[1:], x[:-1], common_theta, float(r))
    return res.ssr / (x.size - 1), _spec(res)


def _spec(res: _AtR) -> TarmaSpec:
    p = res.phi
    return TarmaSpec(float(p[0]), float(p[1]), float(p[2]), float(p[3]), res.th_lo, res.th_up,
                     res.r, 1, 1.0)


def _aic(n: int, ssr: float, k: int) -> float:
    return n * math.log(ssr / n) + 2 * k


def _threshold_candidates(xl: np.ndarray, a: float, b: float, step: float) -> np.ndarray:
    pcts = np.arange(a, b + step / 2, step)
    pcts = pcts[pcts <= b + 1e-12]
    return np.unique(np.quantile(xl, pcts))


def fit_tarma11(series, grid_pcts: tuple[float, float] = (0.01, 0.99),
                min_regime_frac: float = 0.01, common_theta: bool = False,
                grid_step: float = 0.01, k: int | None = None, threads: int = 1) -> TarmaFit:
    """Fit a TARMA(1,1) by conditional Gaussian likelihood, choosing r by AIC.

    Candidate thresholds are the sample percentiles of ``X_0..X_{n-1}`` from
    ``grid_pcts[0]`` to ``grid_pcts[1]`` in steps of ``grid_step``. At each
    candidate the AR coefficients are profiled out by least squares and the
    MA coefficients found by a coarse grid followed by nested golden section.
    Candidates leaving fewer than ``min_regime_frac * n`` observations in a
    regime are skipped. Ties in AIC go to the smaller threshold.

    ``k`` defaults to 7 (6 with a common MA coefficient): intercepts, slopes,
    MA coefficients and the threshold.
    """
    x = as_values(series)
    if x.size - 1 < MIN_LENGTH:
        raise TooShortError(f"TARMA fit needs at least {MIN_LENGTH} observations")
    if not 0 < min_regime_frac < 0.5:
        raise InvalidSpecError("min_regime_frac must lie in (0, 0.5)")
    a, b = grid_pcts
    if not 0 <= a < b <= 1:
        raise InvalidSpecError("grid percentiles must satisfy 0 <= a < b <= 1")
    if k is None:
        k = 6 if common_theta else 7
    y, xl = x[1:], x[:-1]
    n = y.size
    cands = _threshold_candidates(xl, a, b, grid_step)
    floor = min_regime_frac * n
    n_low = np.searchsorted(np.sort(xl), cands, side="right")
    cands = cands[(n_low >= floor) & (n - n_low >= floor)]
    if cands.size == 0:
        raise NoAdmissibleThresholdError("every candidate threshold violates min_regime_frac")
    fits = pmap(functools.partial(_fit_r, y, xl, common_theta), cands.tolist(), threads)
    aics = np.array([_aic(n, f.ssr, k) for f in fits])
    best = fits[int(np.lexsort((cands, aics))[0])]
    spec = _spec(best)
    low = xl <= best.r
    resid = K.tarma_residuals(y, xl, low, best.phi, best.th_lo, best.th_up)
    sigma2 = float(resid @ resid) / n
    se = _standard_errors(y, xl, low, best, sigma2, common_theta)
    if max(abs(best.th_lo), abs(best.th_up)) > THETA_BOUND - 1e-6:
        warnings.warn("MA estimate at the invertibility boundary", NearNoninvertibleWarning,
                      stacklevel=2)
    grid = np.column_stack([cands, aics])
    return TarmaFit(spec, se, _aic(n, sigma2 * n, k), sigma2, resid,
                    (best.n_low, n - best.n_low), grid, k, common_theta,
                    {"grid_pcts": (a, b), "grid_step": grid_step,
                     "min_regime_frac": min_regime_frac})


def _standard_errors(y, xl, low, best: _AtR, sigma2: float, common: bool) -> dict:
    h = K.tarma_hessian(y, xl, low, best.phi, best.th_lo, best.th_up, common)
    info = h / (2 * sigma2)
    try:
        cov = np.linalg.inv(info)
        var = np.diag(cov)
    except np.linalg.LinAlgError:
        var = np.full(h.shape[0], np.nan)
    sd = np.sqrt(np.where(var > 0, var, np.nan))
    names = PARAM_NAMES[:5] if common else PARAM_NAMES
    out = dict(zip(names, sd.tolist()))
    if common:
        out["theta_upper"] = out["theta_lower"]
    return out


def aic_profile(fit: TarmaFit) -> list[tuple[float, float]]:
    return [(float(r), float(a)) for r, a in fit.threshold_grid]


def write_profile_csv(fit: TarmaFit, path: str | Path | None = None) -> str:
    text = "r,aic\n" + "".join(f"{r!r},{a!r}\n" for r, a in aic_profile(fit))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_fit_csv(fit: TarmaFit, path: str | Path | None = None) -> str:
    rows = ["param,estimate,se"]
    for name, val in fit.params().items():
        rows.append(f"{name},{val!r},{fit.se[name]!r}")
    rows += [f"r,{fit.r_hat!r},", f"sigma2,{fit.sigma2_hat!r},", f"aic,{fit.aic!r},",
             f"n_lower,{fit.regime_counts[0]},", f"n_upper,{fit.regime_counts[1]},"]
    text = "\n".join(rows) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _term(v: float, s: float, first: bool = False) -> str:
    sign = "-" if v < 0 else ("" if first else "+")
    body = f"{abs(v):.4g} ({s:.2g})"
    return f"{sign} {body}".strip() if first else f" {sign} {body}"


def format_fit(fit: TarmaFit) -> str:
    """Two-line regime display with standard errors in parentheses.

    The MA term is shown with its sign in the model, ``-theta * e_{t-1}``.
    """
    p, se = fit.params(), fit.se
    r = fit.r_hat
    up = (_term(p["phi_2_0"], se["phi_2_0"], True)
          + _term(p["phi_2_1"], se["phi_2_1"]) + " X_{t-1}"
          + _term(-p["theta_upper"], se["theta_upper"]) + " e_{t-1} + e_t")
    lo = (_term(p["phi_1_0"], se["phi_1_0"], True)
          + _term(p["phi_1_1"], se["phi_1_1"]) + " X_{t-1}"
          + _term(-p["theta_lower"], se["theta_lower"]) + " e_{t-1} + e_t")
    nl, nu = fit.regime_counts
    return (f"X_t = {up}   if X_{{t-1}} > {r:.6g}  ({nu} obs)\n"
            f"X_t = {lo}   if X_{{t-1}} <= {r:.6g}  ({nl} obs)\n"
            f"sigma2 = {fit.sigma2_hat:.6g}  AIC = {fit.aic:.6g}  (k = {fit.k})\n")

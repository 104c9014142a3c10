"""Supremum Lagrange-multiplier statistic for IMA(1,1) against threshold regulation."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels as K
from .exceptions import InvalidSpecError, TooShortError, UntestableSeriesError
from .ima_fit import ImaFit, fit_ima11
from .series import as_values

__all__ = [
    "ScorePanel",
    "InfoBlocks",
    "SupLmResult",
    "score_panel",
    "lm_curve",
    "info_blocks",
    "lm_stat_at",
    "sup_lm",
    "sup_lm_above",
    "write_curve_csv",
]

MIN_LENGTH = 50


@dataclass(frozen=True, eq=False)
class ScorePanel:
    """Derivatives of the residuals w.r.t. phi0, theta, phi_1_0 and phi_1_1 at one threshold."""

    d_phi0: np.ndarray
    d_theta: np.ndarray
    d_phi10_at_r: np.ndarray
    d_phi11_at_r: np.ndarray
    r: float

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.d_phi0, self.d_theta, self.d_phi10_at_r, self.d_phi11_at_r])


@dataclass(frozen=True, eq=False)
class InfoBlocks:
    i11: np.ndarray
    i12: np.ndarray
    i22: np.ndarray

    def schur(self) -> np.ndarray:
        return self.i22 - self.i12.T @ np.linalg.solve(self.i11, self.i12)


@dataclass(frozen=True, eq=False)
class SupLmResult:
    t_sup: float
    r_hat: float
    r_grid: np.ndarray
    t_curve: np.ndarray
    grid_meta: dict
    fit: ImaFit
    n: int
    above: bool = False
    pvalue: float | None = None
    pvalue_source: str | None = None
    theta_used_for_table: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.r_grid.tolist(), self.t_curve.tolist()))

    @property
    def band(self) -> tuple[float, float]:
        return self.grid_meta["a_pct"], self.grid_meta["b_pct"]

    @property
    def pi(self) -> float:
        a, b = self.band
        return a if math.isclose(a, 1 - b, abs_tol=1e-9) else float("nan")

    def with_pvalue(self, pvalue: float, source: str, theta_used: float | None = None,
                    **extra) -> SupLmResult:
        return replace(self, pvalue=float(pvalue), pvalue_source=source,
                       theta_used_for_table=theta_used, extra={**self.extra, **extra})


def score_panel(series, fit: ImaFit, r: float) -> ScorePanel:
    x = as_values(series)
    if not math.isfinite(r):
        raise InvalidSpecError("threshold must be finite")
    if fit.residuals.size != x.size - 1:
        raise InvalidSpecError("fit does not belong to this series")
    d0, dth, d10, d11 = K.panels(x[:-1], fit.residuals, fit.theta_hat, float(r))
    return ScorePanel(d0, dth, d10, d11, float(r))


def info_blocks(panel: ScorePanel, fit: ImaFit) -> InfoBlocks:
    """Product-form information with the sigma^2 cross terms set to zero."""
    s2 = fit.sigma2_hat
    d = panel.matrix()
    g = d.T @ d / s2
    i11 = np.zeros((3, 3))
    i11[:2, :2] = g[:2, :2]
    i11[2, 2] = fit.n / (2 * s2 * s2)
    i12 = np.zeros((3, 2))
    i12[:2, :] = g[:2, 2:]
    return InfoBlocks(i11, i12, g[2:, 2:])


def lm_stat_at(series, fit: ImaFit, r: float) -> float | None:
    """T_n(r) from the derivative recursions, or ``None`` if r is excluded."""
    panel = score_panel(series, fit, r)
    e = fit.residuals
    p, q, u, v = panel.d_phi0, panel.d_theta, panel.d_phi10_at_r, panel.d_phi11_at_r
    val = K.quad_form(e @ u, e @ v, u @ u, u @ v, v @ v, p @ u, q @ u, p @ v, q @ v,
                      p @ p, p @ q, q @ q, fit.sigma2_hat)
    return None if math.isnan(val) else float(val)


def _check_band(a_pct: float, b_pct: float) -> None:
    if not (0 < a_pct < b_pct < 1):
        raise InvalidSpecError("band must satisfy 0 < a < b < 1")


def lm_curve(series, fit: ImaFit, a_pct: float, b_pct: float):
    """``(r_grid, T_n(r), lo, hi)`` over the distinct lagged values in the band.

    Excluded thresholds carry NaN. Uses the incremental kernel, which adds one
    observation to the lower regime at a time instead of rebuilding the panels.
    """
    _check_band(a_pct, b_pct)
    x = as_values(series)
    if fit.residuals.size != x.size - 1:
        raise InvalidSpecError("fit does not belong to this series")
    xl = x[:-1]
    lo, hi = np.quantile(xl, [a_pct, b_pct])
    xc = xl - 0.5 * (lo + hi)
    order = np.argsort(xl, kind="stable")
    r_grid, t_curve = K.sup_curve(xl, xc, order, fit.residuals, fit.theta_hat,
                                  fit.sigma2_hat, float(lo), float(hi))
    return r_grid, t_curve, float(lo), float(hi)


def sup_lm(series, a_pct: float = 0.25, b_pct: float = 0.75, fix_phi0: bool = False,
           fit: ImaFit | None = None) -> SupLmResult:
    """Fit the null and take the supremum of T_n(r) over the percentile band.

    The grid is every distinct lagged value ``X_0..X_{n-1}`` between the
    ``a_pct`` and ``b_pct`` sample percentiles of those values.
    """
    _check_band(a_pct, b_pct)
    x = as_values(series)
    if x.size < MIN_LENGTH:
        raise TooShortError(f"supLM needs at least {MIN_LENGTH} observations")
    if fit is None:
        fit = fit_ima11(x, fix_phi0)
    r_grid, t_curve, lo, hi = lm_curve(x, fit, a_pct, b_pct)
    ok = ~np.isnan(t_curve)
    meta = {"a_pct": a_pct, "b_pct": b_pct, "lo": float(lo), "hi": float(hi),
            "size": int(r_grid.size), "excluded": r_grid[~ok].tolist()}
    if not ok.any():
        raise UntestableSeriesError("no admissible threshold in the search band")
    i = int(np.nanargmax(t_curve))
    return SupLmResult(float(t_curve[i]), float(r_grid[i]), r_grid, t_curve, meta, fit,
                       int(x.size - 1))


def sup_lm_above(series, a_pct: float = 0.25, b_pct: float = 0.75,
                 fix_phi0: bool = False) -> SupLmResult:
    """Test for regulation from above by running the test on ``-X``."""
    res = sup_lm(-as_values(series), a_pct, b_pct, fix_phi0)
    meta = {**res.grid_meta, "lo": -res.grid_meta["hi"], "hi": -res.grid_meta["lo"],
            "excluded": [-r for r in res.grid_meta["excluded"]]}
    return replace(res, r_hat=-res.r_hat, r_grid=-res.r_grid, grid_meta=meta, above=True)


def write_curve_csv(result: SupLmResult, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    buf.write("r,T\n")
    for r, t in zip(result.r_grid, result.t_curve):
        buf.write(f"{r!r},{'' if math.isnan(t) else repr(float(t))}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text

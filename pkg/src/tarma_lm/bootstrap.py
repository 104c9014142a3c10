"""Wild-bootstrap p-value for the supLM statistic."""

from __future__ import annotations

import functools
import warnings

import numpy as np

from ._parallel import chunked, pmap
from .exceptions import InvalidSpecError, NearNoninvertibleWarning, UntestableSeriesError
from .ima_fit import ImaFit
from .rng import check_seed, stream
from .series import as_values
from .suplm import sup_lm

__all__ = ["wild_bootstrap_pvalue", "rebuild_series"]

MIN_B = 99


def rebuild_series(x0: float, fit: ImaFit, eps: np.ndarray) -> np.ndarray:
    """``X*_t = phi0 + X*_{t-1} + eps_t - theta * eps_{t-1}`` with ``eps_0 = 0``."""
    dx = fit.phi0_hat + eps
    dx[1:] -= fit.theta_hat * eps[:-1]
    return np.concatenate(([x0], x0 + np.cumsum(dx)))


def _replicates(x0: float, fit: ImaFit, a_pct: float, b_pct: float, fix_phi0: bool,
                seed: int, budget: int, idx: range) -> tuple[list[float], int]:
    resid = fit.residuals
    out, draws = [], 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearNoninvertibleWarning)
        for b in idx:
            attempt = 0
            while True:
                draws += 1
                if draws > budget:
                    raise UntestableSeriesError("too many untestable bootstrap replicates")
                signs = stream(seed, b, attempt).integers(0, 2, size=resid.size) * 2 - 1
                xs = rebuild_series(x0, fit, signs * resid)
                try:
                    out.append(sup_lm(xs, a_pct, b_pct, fix_phi0).t_sup)
                    break
                except UntestableSeriesError:
                    attempt += 1
    return out, draws


def wild_bootstrap_pvalue(series, a_pct: float = 0.25, b_pct: float = 0.75, B: int = 500,
                          seed: int = 0, fix_phi0: bool = False,
                          threads: int = 1) -> tuple[float, float, np.ndarray]:
    """Rademacher wild bootstrap of the supLM statistic.

    Residuals of the null fit are multiplied by independent random signs and
    the series is rebuilt from the fitted IMA(1,1) recursion, starting at the
    observed ``X_0``. Every replicate refits the null before computing its own
    statistic.

    Returns
    -------
    pvalue : float
        ``(1 + #{t*_b >= t_obs}) / (B + 1)``.
    t_obs : float
    t_star : ndarray of shape (B,)
    """
    if B < MIN_B:
        raise InvalidSpecError(f"B must be at least {MIN_B}")
    check_seed(seed)
    x = as_values(series)
    res = sup_lm(x, a_pct, b_pct, fix_phi0)
    t_obs = res.t_sup
    chunks = chunked(B, max(1, B // max(threads * 4, 1)))
    # each chunk gets its share of the 10B draw budget
    job = functools.partial(_replicates, float(x[0]), res.fit, a_pct, b_pct, fix_phi0, seed,
                            10 * B)
    parts = pmap(job, chunks, threads)
    if sum(d for _, d in parts) > 10 * B:
        raise UntestableSeriesError("too many untestable bootstrap replicates")
    t_star = np.array([t for p, _ in parts for t in p])
    pvalue = (1 + int(np.count_nonzero(t_star >= t_obs))) / (B + 1)
    return pvalue, t_obs, t_star

"""Conditional Gaussian maximum likelihood for the IMA(1,1) null model."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .exceptions import (
    DegenerateInputError,
    InvalidSpecError,
    NearNoninvertibleWarning,
    TooShortError,
)
from .series import TimeSeries, as_values

__all__ = ["ImaFit", "fit_ima11", "residuals_under_h0", "ima_loglik"]

THETA_BOUND = 0.999
GRID_POINTS = 200
MIN_LENGTH = 20


@dataclass(frozen=True, eq=False)
class ImaFit:
    phi0_hat: float
    theta_hat: float
    sigma2_hat: float
    residuals: np.ndarray
    loglik: float
    fix_phi0: bool = False

    @property
    def n(self) -> int:
        return self.residuals.size


def residuals_under_h0(series, phi0: float, theta: float) -> np.ndarray:
    """``e_t = X_t - X_{t-1} - phi0 + theta * e_{t-1}`` for ``t = 1..n``, ``e_0 = 0``."""
    if not abs(theta) < 1:
        raise InvalidSpecError("|theta| must be below 1")
    x = as_values(series)
    if x.size < 2:
        raise TooShortError("need at least two observations")
    return K.ima_residuals(np.diff(x), float(phi0), float(theta))


def ima_loglik(series, phi0: float, theta: float, sigma2: float) -> float:
    e = residuals_under_h0(series, phi0, theta)
    n = e.size
    return -0.5 * n * math.log(2 * math.pi * sigma2) - float(e @ e) / (2 * sigma2)


def fit_ima11(series, fix_phi0: bool = False) -> ImaFit:
    """Maximise the conditional likelihood over theta with phi0 and sigma^2 profiled out.

    Given theta the residuals are affine in phi0, so phi0 has a closed form
    and sigma^2 is the mean squared residual. Theta is located on a
    200-point grid over (-0.999, 0.999) and refined by golden section.
    """
    x = as_values(series)
    if x.size < MIN_LENGTH:
        raise TooShortError(f"IMA(1,1) fit needs at least {MIN_LENGTH} observations")
    dx = np.diff(x)
    if not np.ptp(dx) > 0:
        raise DegenerateInputError("first differences have zero variance")
    theta, phi0, ssr = K.fit_theta(dx, bool(fix_phi0), -THETA_BOUND, THETA_BOUND, GRID_POINTS)
    n = dx.size
    sigma2 = ssr / n
    if not sigma2 > 0:
        raise DegenerateInputError("residual variance is zero")
    if THETA_BOUND - abs(theta) < 1e-6:
        warnings.warn(f"MA estimate {theta:.4f} is at the invertibility boundary",
                      NearNoninvertibleWarning, stacklevel=2)
    resid = K.ima_residuals(dx, phi0, theta)
    sigma2 = float(resid @ resid) / n
    loglik = -0.5 * n * (math.log(2 * math.pi * sigma2) + 1.0)
    return ImaFit(float(phi0), float(theta), sigma2, resid, loglik, bool(fix_phi0))

"""Simulation of TARMA(1,1) / IMA(1,1) paths and the experiment DGPs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels as K
from .exceptions import InvalidSpecError, TooShortError, UnsupportedSpecError
from .rng import check_seed, stream
from .series import TimeSeries

__all__ = [
    "TarmaSpec",
    "NoiseSpec",
    "DgpId",
    "Regime",
    "simulate_tarma",
    "simulate_ima",
    "classify_regime",
    "simulate_dgp",
    "eq28_spec",
    "tarma_ima_spec",
    "dgp_spec",
    "DGP_NAMES",
]

GARCH = (0.05, 0.30, 0.65)
STATIONARY_BURN = 500

# lower slope / intercept and upper slope / intercept of the stationary TAR(1) designs
TAR_DESIGNS = {
    "M8": (0.0, 0.6, 0.0, 0.35),
    "M9": (0.0, 0.6, 0.0, -0.35),
    "M10": (0.0, -0.6, 0.0, -0.35),
    "M11": (0.5, -2.0, -0.5, 1.0),
}
IMA_DESIGNS = {"M1": -0.9, "M2": -0.5, "M3": 0.5, "M4": 0.9}
DGP_NAMES = ("EQ28", "TARMA_IMA", *IMA_DESIGNS, "M5", "M6", "M7", *TAR_DESIGNS)


@dataclass(frozen=True)
class TarmaSpec:
    phi_1_0: float
    phi_1_1: float
    phi_2_0: float
    phi_2_1: float
    theta_lower: float
    theta_upper: float
    r: float = 0.0
    d: int = 1
    sigma: float = 1.0

    def __post_init__(self):
        vals = (self.phi_1_0, self.phi_1_1, self.phi_2_0, self.phi_2_1,
                self.theta_lower, self.theta_upper, self.r, self.sigma)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidSpecError("non-finite TARMA parameter")
        if abs(self.theta_lower) >= 1 or abs(self.theta_upper) >= 1:
            raise InvalidSpecError("MA coefficients must satisfy |theta| < 1")
        if self.sigma <= 0:
            raise InvalidSpecError("sigma must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise InvalidSpecError("delay must be a positive integer")

    @classmethod
    def common(cls, phi_1_0, phi_1_1, phi_2_0, phi_2_1, theta, r=0.0, d=1, sigma=1.0):
        return cls(phi_1_0, phi_1_1, phi_2_0, phi_2_1, theta, theta, r, d, sigma)

    @property
    def common_theta(self) -> bool:
        return self.theta_lower == self.theta_upper


@dataclass(frozen=True)
class NoiseSpec:
    """Source of the innovations.

    ``gaussian`` draws ``sigma * N(0, 1)`` from the stream of ``seed``;
    ``custom`` uses ``values`` verbatim as ``eps_1..eps_n``; ``rademacher``
    multiplies ``values`` by random signs.
    """

    kind: str = "gaussian"
    seed: int = 0
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher", "custom"):
            raise InvalidSpecError(f"unknown noise kind {self.kind!r}")
        check_seed(self.seed)
        if self.kind != "gaussian" and self.values is None:
            raise InvalidSpecError(f"{self.kind} noise needs a value sequence")

    def draw(self, n: int, sigma: float = 1.0) -> np.ndarray:
        if self.kind == "gaussian":
            return sigma * stream(self.seed).standard_normal(n)
        vals = np.asarray(self.values, dtype=float)
        if vals.size < n:
            raise InvalidSpecError(f"noise sequence has {vals.size} values, {n} needed")
        vals = vals[:n]
        if self.kind == "custom":
            return vals.copy()
        signs = stream(self.seed).integers(0, 2, size=n) * 2 - 1
        return vals * signs


class Regime(str, Enum):
    ERGODIC = "ergodic"
    NULL_RECURRENT = "null_recurrent"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class DgpId:
    id: str
    tau: float = 0.0
    theta: float = 0.0
    snr: float = math.inf

    def __post_init__(self):
        name = self.id.upper()
        if name not in DGP_NAMES:
            raise InvalidSpecError(f"unknown DGP {self.id!r}")
        object.__setattr__(self, "id", name)
        if not self.snr > 0:
            raise InvalidSpecError("snr must be positive")

    def label(self) -> str:
        parts = [self.id]
        if self.id in ("EQ28", "TARMA_IMA"):
            parts.append(f"tau={self.tau:g}")
            parts.append(f"theta={self.theta:g}")
        if math.isfinite(self.snr):
            parts.append(f"snr={self.snr:g}")
        return " ".join(parts)


def simulate_tarma(spec: TarmaSpec, n: int, x0: float = 0.0,
                   noise: NoiseSpec = NoiseSpec()) -> TimeSeries:
    """Simulate ``X_0 = x0, X_1, ..., X_n`` from a two-regime TARMA(1,1)."""
    if n < 1:
        raise InvalidSpecError("n must be positive")
    eps = noise.draw(n, spec.sigma)
    x = K.tarma_path(float(x0), eps, spec.phi_1_0, spec.phi_1_1, spec.phi_2_0,
                     spec.phi_2_1, spec.theta_lower, spec.theta_upper, spec.r, int(spec.d))
    return TimeSeries(x)


def simulate_ima(theta: float, phi0: float = 0.0, sigma: float = 1.0, n: int = 100,
                 x0: float = 0.0, noise: NoiseSpec = NoiseSpec()) -> TimeSeries:
    """``X_t = phi0 + X_{t-1} + eps_t - theta * eps_{t-1}`` with ``eps_0 = 0``."""
    if not abs(theta) < 1:
        raise InvalidSpecError("|theta| must be below 1")
    spec = TarmaSpec(phi0, 1.0, phi0, 1.0, theta, theta, 0.0, 1, sigma)
    return simulate_tarma(spec, n, x0, noise)


def classify_regime(spec: TarmaSpec) -> Regime:
    if spec.phi_2_1 != 1 or not spec.common_theta:
        raise UnsupportedSpecError(
            "classification only covers the constrained model (phi_2_1 = 1, common theta)")
    a10, a11, a20 = spec.phi_1_0, spec.phi_1_1, spec.phi_2_0
    if a20 < 0 and (a11 < 1 or (a11 == 1 and a10 > 0)):
        return Regime.ERGODIC
    if a11 == 1 and a20 == 0 and a10 >= 0:
        return Regime.NULL_RECURRENT
    if a11 == 1 and a20 < 0 and a10 == 0:
        return Regime.NULL_RECURRENT
    if a11 < 1 and a20 == 0:
        return Regime.NULL_RECURRENT
    return Regime.TRANSIENT


def eq28_spec(tau: float, theta: float) -> TarmaSpec:
    """Convex path from the random walk (tau = 0) towards a stationary TARMA."""
    target = np.array([0.0, 0.7, -0.02, 0.99])
    base = np.array([0.0, 1.0, 0.0, 1.0])
    phi = tau * target + (1 - tau) * base
    return TarmaSpec.common(*(float(v) for v in phi), theta=theta, r=0.0)


def tarma_ima_spec(tau: float, theta: float) -> TarmaSpec:
    """TARMA whose upper regime is an IMA(1,1); lower regime per the parameter table."""
    return TarmaSpec.common(-0.02 * tau, 1.0 - 0.3 * tau, 0.0, 1.0, theta=theta, r=0.0)


def dgp_spec(dgp: DgpId) -> TarmaSpec | None:
    """The TARMA parameter record behind a DGP, when it has one."""
    if dgp.id == "EQ28":
        return eq28_spec(dgp.tau, dgp.theta)
    if dgp.id == "TARMA_IMA":
        return tarma_ima_spec(dgp.tau, dgp.theta)
    if dgp.id in IMA_DESIGNS:
        return TarmaSpec.common(0.0, 1.0, 0.0, 1.0, IMA_DESIGNS[dgp.id])
    if dgp.id in TAR_DESIGNS:
        return TarmaSpec.common(*TAR_DESIGNS[dgp.id], theta=0.0)
    return None


def _integrate(dx: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(dx)))


def _ar1_diff(u: np.ndarray, a: float) -> np.ndarray:
    dx = np.empty_like(u)
    prev = 0.0
    for t in range(u.size):
        prev = a * prev + u[t]
        dx[t] = prev
    return dx


def simulate_dgp(dgp: DgpId, n: int, noise: NoiseSpec = NoiseSpec()) -> TimeSeries:
    """Path ``X_0..X_n`` from a named DGP, optionally observed with measurement noise.

    The signal uses the stream of ``noise.seed``; measurement noise comes from
    an independent child stream so the signal is unchanged by ``snr``.
    """
    if n < 50:
        raise TooShortError("DGP simulation needs n >= 50")
    if noise.kind != "gaussian":
        raise InvalidSpecError("DGP simulation needs gaussian noise")
    seed = noise.seed
    spec = dgp_spec(dgp)
    if dgp.id in TAR_DESIGNS:
        eps = stream(seed).standard_normal(n + STATIONARY_BURN)
        x = K.tar_path(0.0, eps, *TAR_DESIGNS[dgp.id], 0.0)[STATIONARY_BURN:]
    elif spec is not None:
        x = simulate_tarma(spec, n, 0.0, NoiseSpec("gaussian", seed)).values
    elif dgp.id == "M5":
        z = stream(seed).standard_normal(n)
        z[: n // 2] *= 1.5
        x = _integrate(_ar1_diff(z, -0.6))
    else:
        z = stream(seed).standard_normal(n)
        u, _ = K.garch_innovations(z, *GARCH, garch_h0())
        if dgp.id == "M6":
            dx = u.copy()
            dx[1:] -= 0.6 * u[:-1]
        else:
            dx = _ar1_diff(u, 0.3)
        x = _integrate(dx)
    if math.isfinite(dgp.snr):
        var_x = float(np.var(x, ddof=1))
        eta = stream(seed, 1).standard_normal(x.size) * math.sqrt(var_x / dgp.snr)
        x = x + eta
    return TimeSeries(x)


def garch_h0() -> float:
    omega, alpha, beta = GARCH
    return omega / (1 - alpha - beta)


def with_tau(dgp: DgpId, tau: float) -> DgpId:
    return replace(dgp, tau=tau)

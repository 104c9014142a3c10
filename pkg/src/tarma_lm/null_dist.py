"""Null distribution of the supLM statistic: simulated tables and the Brownian limit."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._parallel import chunked, pmap
from .exceptions import (
    InvalidSpecError,
    MissingTableError,
    NearNoninvertibleWarning,
    TableFormatError,
    UntestableSeriesError,
)
from .rng import check_seed, stream
from .suplm import SupLmResult, sup_lm

__all__ = [
    "ASYMPTOTIC",
    "NullEntry",
    "NullTable",
    "BrownianFunctionalSample",
    "build_null_table",
    "select_table_theta",
    "pvalue_from_table",
    "sample_brownian_functional",
    "functional_from_path",
    "save_table",
    "load_table",
    "default_table",
]

ASYMPTOTIC = None
PAPER_LEVELS = (0.90, 0.95, 0.99, 0.999)
DEFAULT_LEVELS = tuple(sorted({*np.round(np.arange(0.01, 1.0, 0.01), 2).tolist(),
                               0.995, *PAPER_LEVELS}))
THETA_CUTOFF = 0.3
THETA_FAR = 0.9


@dataclass(eq=False)
class NullEntry:
    theta: float
    n: int | None
    pi: float
    levels: np.ndarray
    quantiles: np.ndarray
    samples: np.ndarray | None = None

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        self.quantiles = np.asarray(self.quantiles, dtype=float)
        if self.levels.shape != self.quantiles.shape or self.levels.ndim != 1:
            raise InvalidSpecError("levels and quantiles must be matching 1-d arrays")
        if not 0 < self.pi < 0.5:
            raise InvalidSpecError(f"pi must lie in (0, 0.5), got {self.pi}")
        if np.any(np.diff(self.levels) <= 0):
            raise InvalidSpecError("levels must be strictly increasing")
        if np.any(np.diff(self.quantiles) <= 0):
            raise InvalidSpecError("quantiles must be strictly increasing")

    @property
    def key(self) -> tuple:
        return (round(self.theta, 6), self.n, round(self.pi, 6))

    @property
    def is_asymptotic(self) -> bool:
        return self.n is ASYMPTOTIC

    def quantile(self, level: float) -> float:
        hit = np.flatnonzero(np.isclose(self.levels, level))
        if hit.size:
            return float(self.quantiles[hit[0]])
        if self.samples is not None:
            return float(np.quantile(self.samples, level))
        raise KeyError(f"level {level} not tabulated")

    def pvalue(self, t: float) -> float:
        """Right-tail probability; add-one estimate when raw samples are kept."""
        if self.samples is not None:
            s = self.samples
            return (1 + int(np.count_nonzero(s >= t))) / (s.size + 1)
        if t <= 0:
            return 1.0
        top = self.levels[-1]
        if t >= self.quantiles[-1]:
            return float(1 - top)
        knots_t = np.concatenate(([0.0], self.quantiles))
        knots_p = np.concatenate(([0.0], self.levels))
        cdf = float(PchipInterpolator(knots_t, knots_p)(t))
        return float(min(1.0, max(1 - top, 1 - cdf)))


@dataclass(eq=False)
class NullTable:
    entries: list[NullEntry]
    reps: int
    path_len: int
    seed: int
    created: str = ""
    notes: list[str] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NullTable):
            return NotImplemented
        if (self.reps, self.path_len, self.seed, self.created) != (
                other.reps, other.path_len, other.seed, other.created):
            return False
        if len(self.entries) != len(other.entries):
            return False
        a = sorted(self.entries, key=_sort_key)
        b = sorted(other.entries, key=_sort_key)
        return all(x.key == y.key and np.array_equal(x.levels, y.levels)
                   and np.array_equal(x.quantiles, y.quantiles) for x, y in zip(a, b))

    def find(self, theta: float, n: int | None, pi: float) -> NullEntry | None:
        for e in self.entries:
            if (math.isclose(e.pi, pi, abs_tol=1e-9) and e.n == n
                    and math.isclose(e.theta, theta, abs_tol=1e-9)):
                return e
        return None

    def nearest(self, theta: float, n: int, pi: float) -> NullEntry | None:
        """Finite-sample entry for ``theta`` whose length is nearest ``n`` (no interpolation)."""
        cands = [e for e in self.entries
                 if not e.is_asymptotic and math.isclose(e.pi, pi, abs_tol=1e-9)
                 and math.isclose(e.theta, theta, abs_tol=1e-9)]
        if not cands:
            return None
        return min(cands, key=lambda e: (abs(math.log(e.n) - math.log(n)), e.n))

    def merged(self, other: NullTable) -> NullTable:
        keys = {e.key for e in other.entries}
        entries = [e for e in self.entries if e.key not in keys] + list(other.entries)
        return NullTable(entries, self.reps, self.path_len, self.seed, self.created,
                         self.notes + other.notes)


def _sort_key(e: NullEntry):
    return (e.theta, math.inf if e.n is None else e.n, e.pi)


@dataclass(frozen=True, eq=False)
class BrownianFunctionalSample:
    tau_grid: np.ndarray
    H: np.ndarray
    Lambda: np.ndarray
    F_value: float
    F_curve: np.ndarray


def _simulate_sup(theta: float, n: int, pis: Sequence[float], seed: int, key: tuple,
                  reps: Iterable[int]) -> np.ndarray:
    from .model_sim import NoiseSpec, simulate_ima

    pis = sorted(pis)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearNoninvertibleWarning)
        for rep in reps:
            attempt = 0
            while True:
                rng = stream(seed, *key, rep, attempt)
                x = simulate_ima(theta, 0.0, 1.0, n,
                                 noise=NoiseSpec("custom", values=rng.standard_normal(n))).values
                try:
                    res = sup_lm(x, pis[0], 1 - pis[0])
                except UntestableSeriesError:
                    attempt += 1
                    continue
                break
            out.append(_band_sups(x, res, pis))
    return np.array(out)


def _band_sups(x: np.ndarray, res: SupLmResult, pis: Sequence[float]) -> list[float]:
    r, t = res.r_grid, res.t_curve
    vals = []
    for pi in pis:
        lo, hi = np.quantile(x[:-1], [pi, 1 - pi])
        m = (r >= lo) & (r <= hi) & ~np.isnan(t)
        vals.append(float(t[m].max()) if m.any() else math.nan)
    return vals


def _cell_key(theta: float, n_eff: int) -> tuple[int, int]:
    return int(round((theta + 1.0) * 1e6)), int(n_eff)


def build_null_table(theta_list: Sequence[float], n_list: Sequence[int | None],
                     pi_list: Sequence[float], reps: int, seed: int, path_len: int = 5000,
                     levels: Sequence[float] = DEFAULT_LEVELS, threads: int = 1,
                     keep_samples: bool = True, min_reps: int = 1000) -> NullTable:
    """Simulate IMA(1,1) null paths and tabulate empirical quantiles of the sup statistic.

    ``n = None`` stands for the asymptotic entry, simulated at ``path_len``.
    All bands of one (theta, n) cell share the same paths.
    """
    check_seed(seed)
    if reps < min_reps:
        raise InvalidSpecError(f"tables need at least {min_reps} replicates")
    for pi in pi_list:
        if not 0 < pi < 0.5:
            raise InvalidSpecError(f"pi must lie in (0, 0.5), got {pi}")
    pis = sorted(set(float(p) for p in pi_list))
    levels = np.array(sorted(set(float(v) for v in levels)))
    entries = []
    for theta in theta_list:
        for n in n_list:
            n_eff = path_len if n is ASYMPTOTIC else int(n)
            key = _cell_key(float(theta), 0 if n is ASYMPTOTIC else n_eff)
            job = functools.partial(_simulate_sup, float(theta), n_eff, pis, seed, key)
            chunks = pmap(job, chunked(reps, max(1, reps // max(threads * 4, 1))), threads)
            sups = np.vstack(chunks)
            for j, pi in enumerate(pis):
                s = sups[:, j]
                s = s[~np.isnan(s)]
                q = np.quantile(s, levels)
                entries.append(NullEntry(float(theta), n if n is ASYMPTOTIC else n_eff, pi,
                                         levels.copy(), q, s if keep_samples else None))
    return NullTable(entries, reps, path_len, seed)


def select_table_theta(theta_hat: float) -> float:
    if abs(theta_hat) <= THETA_CUTOFF:
        return 0.0
    return math.copysign(THETA_FAR, theta_hat)


def pvalue_from_table(result: SupLmResult, table: NullTable, theta_hat: float | None = None,
                      n: int | None = None, finite_for_small_theta: bool = False) -> SupLmResult:
    """Attach a table p-value, choosing the table by the theta rule.

    ``|theta_hat| <= 0.3`` uses the asymptotic (theta-free) entry; otherwise the
    finite-sample entry simulated at ``sign(theta_hat) * 0.9`` with the nearest
    tabulated length. ``finite_for_small_theta`` prefers a theta = 0
    finite-sample entry when one exists.
    """
    theta_hat = result.fit.theta_hat if theta_hat is None else theta_hat
    n = result.n if n is None else n
    pi = result.pi
    if math.isnan(pi):
        raise InvalidSpecError("table p-values need a symmetric band [pi, 1 - pi]")
    theta_sel = select_table_theta(theta_hat)
    entry = None
    if theta_sel == 0.0:
        if finite_for_small_theta:
            entry = table.nearest(0.0, n, pi)
        if entry is None:
            entry = table.find(0.0, ASYMPTOTIC, pi) or table.nearest(0.0, n, pi)
    else:
        entry = table.nearest(theta_sel, n, pi)
    if entry is None:
        raise MissingTableError(theta_sel, n, pi)
    source = "asymptotic-table" if entry.is_asymptotic else "finite-sample-table"
    return result.with_pvalue(entry.pvalue(result.t_sup), source, theta_sel,
                              table_n=entry.n, table_pi=entry.pi)


# ---------------------------------------------------------------------------
# Brownian functional


def functional_from_path(w: np.ndarray, r_L: float, r_U: float, tau_points: int | None = None,
                         band: str = "absolute", keep: bool = False):
    """Sup over tau of the limiting LM functional for one path on [0, 1].

    ``w`` holds the path at ``steps + 1`` equally spaced times. Stochastic
    integrals use left endpoints; time integrals are left Riemann sums.
    With ``tau_points=None`` tau runs over the path values in the band, where
    the discretised functional changes.
    """
    w = np.asarray(w, dtype=float)
    steps = w.size - 1
    dt = 1.0 / steps
    left = w[:-1]
    dw = np.diff(w)
    if band == "percentile":
        r_L, r_U = np.quantile(left, [r_L, r_U])
    elif band != "absolute":
        raise InvalidSpecError(f"unknown band kind {band!r}")
    if not r_L < r_U:
        raise InvalidSpecError("degenerate tau grid: need r_L < r_U")
    order = np.argsort(left, kind="stable")
    ws = left[order]
    cum = np.cumsum(np.column_stack([dw[order], ws * dw[order], np.full(steps, dt),
                                     ws * dt, ws * ws * dt]), axis=0)
    if tau_points is None:
        tau = np.unique(ws[(ws >= r_L) & (ws <= r_U)])
    else:
        tau = np.linspace(r_L, r_U, int(tau_points))
    idx = np.searchsorted(ws, tau, side="right")
    sums = np.zeros((tau.size, 5))
    has = idx > 0
    sums[has] = cum[idx[has] - 1]
    h1 = w[-1] - w[0]
    h2a, h2b, a, b, c = sums.T
    s00 = a - a * a
    s01 = b - a * b
    s11 = c - b * b
    v0 = h2a - a * h1
    v1 = h2b - b * h1
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (s00 > 1e-10 * a) & (s11 > 1e-10 * c)
        rho = np.where(ok, s01 / np.sqrt(np.abs(s00 * s11)), 0.0)
        ok &= (1 + np.abs(rho)) / (1 - np.abs(rho)) <= 1e12
        x0 = v0 / np.sqrt(s00)
        x1 = v1 / np.sqrt(s11)
        f = (x0 * x0 - 2 * rho * x0 * x1 + x1 * x1) / (1 - rho * rho)
    f = np.where(ok, f, np.nan)
    if not np.any(ok):
        raise UntestableSeriesError("functional undefined on the whole tau grid")
    F = float(np.nanmax(f))
    if not keep:
        return F
    H = np.column_stack([np.full(tau.size, h1), h2a, h2b])
    Lam = np.empty((tau.size, 3, 3))
    Lam[:, 0, 0] = 1.0
    Lam[:, 0, 1] = Lam[:, 1, 0] = Lam[:, 1, 1] = a
    Lam[:, 0, 2] = Lam[:, 2, 0] = Lam[:, 1, 2] = Lam[:, 2, 1] = b
    Lam[:, 2, 2] = c
    return BrownianFunctionalSample(tau, H, Lam, F, f)


def sample_brownian_functional(r_L: float, r_U: float, steps: int = 5000,
                               tau_points: int | None = None, seed: int = 0,
                               band: str = "absolute") -> BrownianFunctionalSample:
    """One draw of the limiting null functional from a simulated Brownian path."""
    if steps < 1000:
        raise InvalidSpecError("steps must be at least 1000")
    z = stream(seed).standard_normal(steps)
    w = np.concatenate(([0.0], np.cumsum(z) / math.sqrt(steps)))
    return functional_from_path(w, r_L, r_U, tau_points, band, keep=True)


# ---------------------------------------------------------------------------
# persistence


def save_table(table: NullTable, path: str | Path | None = None) -> str:
    lines = [f"# reps={table.reps}", f"# path_len={table.path_len}",
             f"# seed={table.seed}"]
    if table.created:
        lines.append(f"# created={table.created}")
    lines += [f"# note={n}" for n in table.notes]
    lines.append("theta,n,pi,level,quantile")
    for e in sorted(table.entries, key=_sort_key):
        n = "asym" if e.is_asymptotic else str(e.n)
        for lev, q in zip(e.levels, e.quantiles):
            lines.append(f"{e.theta!r},{n},{e.pi!r},{float(lev)!r},{float(q)!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


_META_INT = {"reps", "path_len", "seed"}


def _parse_table(text: str) -> NullTable:
    meta: dict = {}
    notes: list[str] = []
    rows: dict[tuple, list] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            k, sep, v = body.partition("=")
            if not sep:
                continue
            k, v = k.strip(), v.strip()
            if k == "note":
                notes.append(v)
            elif k in _META_INT:
                try:
                    meta[k] = int(v)
                except ValueError:
                    raise TableFormatError(f"bad {k} value {v!r}", lineno) from None
            else:
                meta[k] = v
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["theta", "n", "pi", "level", "quantile"]:
                raise TableFormatError("expected header theta,n,pi,level,quantile", lineno)
            header_seen = True
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 5:
            raise TableFormatError(f"expected 5 fields, found {len(cells)}", lineno)
        try:
            theta = float(cells[0])
            n = None if cells[1] == "asym" else int(cells[1])
            pi, level, q = float(cells[2]), float(cells[3]), float(cells[4])
        except ValueError as exc:
            raise TableFormatError(str(exc), lineno) from None
        if not 0 < level < 1:
            raise TableFormatError(f"level {level} outside (0, 1)", lineno)
        if not 0 < pi < 0.5:
            raise TableFormatError(f"pi {pi} outside (0, 0.5)", lineno)
        rows.setdefault((theta, n, pi), []).append((level, q, lineno))
    if not header_seen:
        raise TableFormatError("missing header line")
    entries = []
    for (theta, n, pi), vals in rows.items():
        vals.sort()
        for (l0, q0, _), (l1, q1, ln) in zip(vals, vals[1:]):
            if l1 == l0:
                raise TableFormatError(f"duplicate level {l1}", ln)
            if not q1 > q0:
                raise TableFormatError(
                    f"quantiles must increase with level (theta={theta}, n={n}, pi={pi})", ln)
        entries.append(NullEntry(theta, n, pi, [v[0] for v in vals], [v[1] for v in vals]))
    for k in ("reps", "path_len", "seed"):
        if k not in meta:
            raise TableFormatError(f"missing metadata line '# {k}=...'")
    return NullTable(entries, meta["reps"], meta["path_len"], meta["seed"],
                     meta.get("created", ""), notes)


def load_table(path: str | Path) -> NullTable:
    return _parse_table(Path(path).read_text(encoding="utf-8"))


@functools.lru_cache(maxsize=1)
def default_table() -> NullTable:
    """Shipped table: reference asymptotic quantiles plus finite-sample entries."""
    text = resources.files("tarma_lm.data").joinpath("null_table.csv").read_text("utf-8")
    return _parse_table(text)

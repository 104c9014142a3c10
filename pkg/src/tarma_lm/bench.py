"""Monte-Carlo size and power experiments for the supLM tests."""

from __future__ import annotations

import csv
import functools
import io
import itertools
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._parallel import chunked, pmap
from .bootstrap import wild_bootstrap_pvalue
from .exceptions import (
    DegenerateInputError,
    InvalidSpecError,
    NearNoninvertibleWarning,
    UntestableSeriesError,
)
from .model_sim import DgpId, NoiseSpec, simulate_dgp, with_tau
from .null_dist import NullTable, default_table, pvalue_from_table
from .rng import check_seed, child_seed
from .suplm import sup_lm

__all__ = [
    "TESTS",
    "ExperimentPlan",
    "CellRecord",
    "BenchReport",
    "run_experiment",
    "size_corrected_power",
    "run_plans",
    "emit_report",
    "parse_plan",
    "parse_plan_file",
]

SLM = "sLM"
SLMB = "sLMb"
TESTS = (SLM, SLMB)
MAX_UNTESTABLE = 0.01


@dataclass(frozen=True)
class ExperimentPlan:
    """One cell of a size or power table.

    ``reps`` applies to the asymptotic test, ``bootstrap_reps`` (default
    ``reps``) and ``bootstrap_B`` to the bootstrap test. ``size_correction``
    names the ``tau`` of the null member used to calibrate this plan.
    """

    dgp: DgpId
    n: int
    reps: int = 2000
    tests: tuple[str, ...] = (SLM,)
    level: float = 0.05
    band: tuple[float, float] = (0.25, 0.75)
    bootstrap_B: int = 500
    bootstrap_reps: int | None = None
    seed: int = 0
    size_correction: float | None = None

    def __post_init__(self):
        if self.reps < 100:
            raise InvalidSpecError("reps must be at least 100")
        if self.bootstrap_reps is not None and self.bootstrap_reps < 100:
            raise InvalidSpecError("bootstrap_reps must be at least 100")
        if not 0 < self.level < 1:
            raise InvalidSpecError("level must lie in (0, 1)")
        a, b = self.band
        if not 0 < a < b < 1:
            raise InvalidSpecError("band must satisfy 0 < a < b < 1")
        bad = set(self.tests) - set(TESTS)
        if bad or not self.tests:
            raise InvalidSpecError(f"tests must be a non-empty subset of {TESTS}")
        check_seed(self.seed)

    @property
    def boot_reps(self) -> int:
        return self.reps if self.bootstrap_reps is None else self.bootstrap_reps


@dataclass(frozen=True)
class CellRecord:
    dgp: str
    n: int
    test: str
    rejection_pct: float
    mc_se: float
    reps_effective: int
    untestable: int = 0
    calibrated: bool = False


@dataclass(eq=False)
class BenchReport:
    records: list[CellRecord]
    metadata: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)


def _record(plan: ExperimentPlan, test: str, rejected: np.ndarray, untestable: int,
            calibrated: bool = False) -> CellRecord:
    m = rejected.size
    rate = float(rejected.mean()) if m else math.nan
    se = math.sqrt(rate * (1 - rate) / m) if m else math.nan
    return CellRecord(plan.dgp.label(), plan.n, test, 100 * rate, 100 * se, m, untestable,
                      calibrated)


def _replicate_series(plan: ExperimentPlan, rep: int) -> np.ndarray:
    return simulate_dgp(plan.dgp, plan.n, NoiseSpec(seed=child_seed(plan.seed, 0, rep))).values


def _asym_chunk(plan: ExperimentPlan, table: NullTable, reps: range):
    t, p, bad = [], [], 0
    a, b = plan.band
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearNoninvertibleWarning)
        for rep in reps:
            x = _replicate_series(plan, rep)
            try:
                res = sup_lm(x, a, b)
            except (UntestableSeriesError, DegenerateInputError):
                bad += 1
                continue
            t.append(res.t_sup)
            p.append(pvalue_from_table(res, table).pvalue)
    return t, p, bad


def _boot_chunk(plan: ExperimentPlan, reps: range):
    t, p, bad = [], [], 0
    a, b = plan.band
    for rep in reps:
        x = _replicate_series(plan, rep)
        try:
            pv, tobs, _ = wild_bootstrap_pvalue(x, a, b, plan.bootstrap_B,
                                                child_seed(plan.seed, 1, rep))
        except (UntestableSeriesError, DegenerateInputError):
            bad += 1
            continue
        t.append(tobs)
        p.append(pv)
    return t, p, bad


def _gather(parts, total: int, label: str):
    t = np.array([v for part in parts for v in part[0]])
    p = np.array([v for part in parts for v in part[1]])
    bad = sum(part[2] for part in parts)
    if bad >= MAX_UNTESTABLE * total:
        raise UntestableSeriesError(
            f"{bad} of {total} replicates untestable in {label} (limit {MAX_UNTESTABLE:.0%})")
    return t, p, bad


def run_experiment(plan: ExperimentPlan, table: NullTable | None = None,
                   threads: int = 1) -> BenchReport:
    """Simulate, test at ``plan.level`` and tally rejections (reject when p <= level).

    Replicate ``i`` uses the series drawn from ``(seed, 0, i)`` for every test,
    so the sLM and sLMb columns share data; bootstrap signs come from
    ``(seed, 1, i)``. Untestable replicates are dropped from the denominator
    and reported; reaching 1% of the cell aborts the experiment.
    """
    table = default_table() if table is None else table
    start = time.perf_counter()
    records, samples = [], {}
    label = plan.dgp.label()
    size = max(1, plan.reps // (4 * max(threads, 1)))
    if SLM in plan.tests:
        parts = pmap(functools.partial(_asym_chunk, plan, table), chunked(plan.reps, size),
                     threads)
        t, p, bad = _gather(parts, plan.reps, label)
        records.append(_record(plan, SLM, p <= plan.level, bad))
        samples[SLM] = {"t": t, "p": p}
    if SLMB in plan.tests:
        size = max(1, plan.boot_reps // (4 * max(threads, 1)))
        parts = pmap(functools.partial(_boot_chunk, plan), chunked(plan.boot_reps, size),
                     threads)
        t, p, bad = _gather(parts, plan.boot_reps, label)
        records.append(_record(plan, SLMB, p <= plan.level, bad))
        samples[SLMB] = {"t": t, "p": p}
    meta = {"seeds": {label: plan.seed}, "runtime_s": time.perf_counter() - start}
    return BenchReport(records, meta, {label: samples})


def size_corrected_power(null_plan: ExperimentPlan, alt_plans: list[ExperimentPlan],
                         table: NullTable | None = None, threads: int = 1) -> BenchReport:
    """Calibrate cutoffs on the null run and apply them to the alternatives.

    sLM: the critical value is the ``1 - level`` quantile of the null
    statistics. sLMb: the p-value cutoff is the ``level`` quantile of the null
    bootstrap p-values. The null row reports the uncalibrated size.
    """
    for alt in alt_plans:
        if (alt.n, alt.band, alt.level, alt.tests) != (
                null_plan.n, null_plan.band, null_plan.level, null_plan.tests):
            raise InvalidSpecError("null and alternative plans differ in n, band, level or tests")
    start = time.perf_counter()
    null = run_experiment(null_plan, table, threads)
    null_label = null_plan.dgp.label()
    ns = null.samples[null_label]
    cut_t = float(np.quantile(ns[SLM]["t"], 1 - null_plan.level)) if SLM in ns else None
    cut_p = float(np.quantile(ns[SLMB]["p"], null_plan.level)) if SLMB in ns else None
    records = list(null.records)
    samples = dict(null.samples)
    seeds = dict(null.metadata["seeds"])
    for alt in alt_plans:
        rep = run_experiment(alt, table, threads)
        label = alt.dgp.label()
        s = rep.samples[label]
        for r in rep.records:
            if r.test == SLM:
                rej = s[SLM]["t"] > cut_t
            else:
                rej = s[SLMB]["p"] <= cut_p
            records.append(_record(alt, r.test, rej, r.untestable, calibrated=True))
        samples.update(rep.samples)
        seeds.update(rep.metadata["seeds"])
    meta = {"seeds": seeds, "runtime_s": time.perf_counter() - start,
            "cutoffs": {SLM: cut_t, SLMB: cut_p}}
    return BenchReport(records, meta, samples)


def _family_key(p: ExperimentPlan):
    d = p.dgp
    return (d.id, d.theta, d.snr, p.n, p.band, p.level, p.tests, p.size_correction)


def run_plans(plans: list[ExperimentPlan], table: NullTable | None = None,
              threads: int = 1) -> BenchReport:
    """Run plain plans directly and size-corrected plans grouped by family."""
    records, meta, samples = [], {"seeds": {}, "runtime_s": 0.0}, {}
    done = set()
    for plan in plans:
        if plan.size_correction is None:
            rep = run_experiment(plan, table, threads)
        else:
            key = _family_key(plan)
            if key in done:
                continue
            done.add(key)
            null = replace(plan, dgp=with_tau(plan.dgp, plan.size_correction))
            alts = [p for p in plans if _family_key(p) == key
                    and p.dgp.tau != plan.size_correction]
            null = next((p for p in plans if _family_key(p) == key
                         and p.dgp.tau == plan.size_correction), null)
            rep = size_corrected_power(null, alts, table, threads)
        records += rep.records
        samples.update(rep.samples)
        meta["seeds"].update(rep.metadata["seeds"])
        meta["runtime_s"] += rep.metadata["runtime_s"]
    return BenchReport(records, meta, samples)


CSV_FIELDS = ("dgp", "n", "test", "rejection_pct", "mc_se", "reps_effective", "untestable",
              "calibrated")


def emit_report(report: BenchReport, fmt: str = "markdown") -> str:
    """Render records as CSV or as a markdown table (DGP rows x test columns)."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in report.records:
            w.writerow([r.dgp, r.n, r.test, repr(r.rejection_pct), repr(r.mc_se),
                        r.reps_effective, r.untestable, int(r.calibrated)])
        return buf.getvalue()
    if fmt != "markdown":
        raise InvalidSpecError(f"unknown report format {fmt!r}")
    rows: dict = {}
    for r in report.records:
        rows.setdefault((r.dgp, r.n), {})[r.test] = r
    tests = [t for t in TESTS if any(t in cells for cells in rows.values())]
    lines = ["| DGP | n | " + " | ".join(tests) + " |",
             "|---|---:|" + "---:|" * len(tests)]
    for (dgp, n), cells in rows.items():
        vals = []
        for t in tests:
            r = cells.get(t)
            vals.append("" if r is None else f"{r.rejection_pct:.1f}" + ("*" if r.calibrated else ""))
        lines.append(f"| {dgp} | {n} | " + " | ".join(vals) + " |")
    if any(r.calibrated for r in report.records):
        lines.append("")
        lines.append("\\* size-corrected against the null row of the same family")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# plan files

_LIST_KEYS = ("dgp", "tau", "theta", "snr")


def _floats(v: str) -> list[float]:
    return [float(s) for s in v.split(",") if s.strip()]


def parse_plan(text: str) -> list[ExperimentPlan]:
    """Parse ``key = value`` lines; ``dgp``, ``tau``, ``theta``, ``snr`` may be lists.

    Lists expand to the Cartesian product of plans. ``size_correction = 0``
    calibrates every member against the ``tau = 0`` member of its family.
    """
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InvalidSpecError(f"line {lineno}: expected key = value")
        kv[key.strip().lower()] = val.strip()
    known = {"dgp", "tau", "theta", "snr", "n", "reps", "tests", "level", "band",
             "bootstrap_b", "bootstrap_reps", "seed", "size_correction"}
    extra = set(kv) - known
    if extra:
        raise InvalidSpecError(f"unknown plan keys: {sorted(extra)}")
    if "dgp" not in kv or "n" not in kv:
        raise InvalidSpecError("plan needs at least dgp and n")
    try:
        dgps = [s.strip() for s in kv["dgp"].split(",") if s.strip()]
        taus = _floats(kv.get("tau", "0"))
        thetas = _floats(kv.get("theta", "0"))
        snrs = _floats(kv.get("snr", "inf"))
        band = tuple(_floats(kv.get("band", "0.25,0.75")))
        if len(band) != 2:
            raise InvalidSpecError("band needs two values")
        tests = tuple(s.strip() for s in kv.get("tests", SLM).split(",") if s.strip())
        common = dict(
            n=int(kv["n"]), reps=int(kv.get("reps", 2000)), tests=tests,
            level=float(kv.get("level", 0.05)), band=band,
            bootstrap_B=int(kv.get("bootstrap_b", 500)),
            bootstrap_reps=int(kv["bootstrap_reps"]) if "bootstrap_reps" in kv else None,
            seed=int(kv.get("seed", 0)),
            size_correction=float(kv["size_correction"]) if "size_correction" in kv else None)
    except ValueError as exc:
        raise InvalidSpecError(f"bad plan value: {exc}") from None
    plans = []
    for i, (d, th, snr, tau) in enumerate(itertools.product(dgps, thetas, snrs, taus)):
        plans.append(ExperimentPlan(DgpId(d, tau, th, snr),
                                    **{**common, "seed": child_seed(common["seed"], i)}))
    return plans


def parse_plan_file(path: str | Path) -> list[ExperimentPlan]:
    return parse_plan(Path(path).read_text(encoding="utf-8"))

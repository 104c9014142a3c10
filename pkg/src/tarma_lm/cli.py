"""Command-line interface: ``tarma-lm <command> [options]``.

Exit codes: 0 success, 2 invalid arguments or input files, 3 data that
cannot be tested or fitted, 4 missing null-table entry.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench, local_power, null_dist
from .bootstrap import wild_bootstrap_pvalue
from .exceptions import (
    DegenerateInputError,
    MissingTableError,
    NearNoninvertibleWarning,
    NoAdmissibleThresholdError,
    TarmaError,
    TooShortError,
    UntestableSeriesError,
)
from .model_sim import DgpId, NoiseSpec, simulate_dgp
from .series import read_series_csv, write_series_csv
from .suplm import sup_lm, sup_lm_above, write_curve_csv
from .tarma_fit import fit_tarma11, format_fit, write_fit_csv, write_profile_csv

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TABLE = 4


class ConfigError(Exception):
    pass


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _lengths(text: str) -> list[int | None]:
    out = []
    for s in text.split(","):
        s = s.strip()
        if s == "asym":
            out.append(null_dist.ASYMPTOTIC)
        elif s:
            try:
                out.append(int(s))
            except ValueError:
                raise argparse.ArgumentTypeError(f"expected integers or 'asym', got {s!r}")
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(path: str | None) -> null_dist.NullTable:
    return null_dist.load_table(path) if path else null_dist.default_table()


# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    series = read_series_csv(args.series)
    a, b = args.band
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NearNoninvertibleWarning)
        run = sup_lm_above if args.above else sup_lm
        res = run(series, a, b, args.fix_phi0)
    x = series.values
    pct = float(np.mean(x[:-1] <= res.r_hat))
    lines = [
        f"series           {args.series} (n = {res.n})",
        f"direction        {'above (test on -X)' if args.above else 'below'}",
        f"band             [{a:g}, {b:g}] percentiles, {res.grid_meta['size']} thresholds",
        f"supLM            {res.t_sup:.4f}",
        f"threshold r_hat  {res.r_hat:.6g} (sample percentile {100 * pct:.1f})",
        f"theta_hat        {res.fit.theta_hat:.4f}",
        f"phi0_hat         {res.fit.phi0_hat:.6g}",
        f"sigma2_hat       {res.fit.sigma2_hat:.6g}",
    ]
    try:
        tabled = null_dist.pvalue_from_table(res, _table(args.table))
    except MissingTableError:
        if args.bootstrap is None:
            raise
        tabled = None
    if tabled is not None:
        theta_used = tabled.theta_used_for_table
        rule = ("|theta_hat| <= 0.3, theta = 0 table" if theta_used == 0
                else f"|theta_hat| > 0.3, theta = {theta_used:g} table")
        n_used = tabled.extra.get("table_n")
        lines.append(f"p-value          {tabled.pvalue:.4f} ({tabled.pvalue_source}; {rule}, "
                     f"n = {'asym' if n_used is None else n_used}, pi = {tabled.pi:g})")
    if args.bootstrap is not None:
        xb = -x if args.above else x
        pb, _, _ = wild_bootstrap_pvalue(xb, a, b, args.bootstrap, args.seed, args.fix_phi0,
                                         args.threads)
        lines.append(f"p-value (wild)   {pb:.4f} (B = {args.bootstrap}, seed = {args.seed})")
    for w in caught:
        lines.append(f"warning          {w.message}")
    print("\n".join(lines))
    if args.curve_out:
        write_curve_csv(res, args.curve_out)
    return 0


def cmd_null_table(args) -> int:
    table = null_dist.build_null_table(args.theta, args.n, args.pi, args.reps, args.seed,
                                       path_len=args.len, threads=args.threads,
                                       keep_samples=False)
    text = null_dist.save_table(table, args.out)
    if not args.out:
        sys.stdout.write(text)
        return 0
    print("theta  n     pi     90%     95%     99%")
    for e in table.entries:
        n = "asym" if e.is_asymptotic else str(e.n)
        q = [e.quantile(lv) for lv in (0.90, 0.95, 0.99)]
        print(f"{e.theta:<6g} {n:<5} {e.pi:<6g} {q[0]:7.2f} {q[1]:7.2f} {q[2]:7.2f}")
    return 0


def cmd_bench(args) -> int:
    plans = bench.parse_plan_file(args.plan)
    report = bench.run_plans(plans, _table(args.table), args.threads)
    _emit(bench.emit_report(report, args.format), args.out)
    return 0


def cmd_fit(args) -> int:
    series = read_series_csv(args.series)
    fit = fit_tarma11(series, args.grid, args.min_regime_frac, args.common_theta,
                      threads=args.threads)
    print(format_fit(fit), end="")
    if args.out:
        write_fit_csv(fit, args.out)
    if args.profile_out:
        write_profile_csv(fit, args.profile_out)
    return 0


def cmd_simulate(args) -> int:
    dgp = DgpId(args.dgp, args.tau, args.theta, args.snr)
    series = simulate_dgp(dgp, args.n, NoiseSpec(seed=args.seed))
    _emit(write_series_csv(series), args.out)
    return 0


def cmd_diffusion(args) -> int:
    r_lo, r_hi = args.band
    kind = "percentile" if args.percentile else "absolute"
    if args.coefs is not None:
        if len(args.coefs) != 4:
            raise ConfigError("--coefs needs four values c_1_0,c_1_1,c_2_0,c_2_1")
        family = [(0.0, local_power.DiffusionSpec(*args.coefs, tau0=args.tau0,
                                                  steps=args.steps))]
    else:
        family = [(h, local_power.ergodic_example_spec(h, args.steps)) for h in args.h]
    if args.path_out:
        w = local_power.simulate_threshold_diffusion(family[0][1], args.seed, args.auto_step)
        t = np.linspace(0.0, 1.0, w.size)
        Path(args.path_out).write_text(
            "t,w\n" + "".join(f"{a!r},{b!r}\n" for a, b in zip(t.tolist(), w.tolist())),
            encoding="utf-8")
    pts = local_power.local_power_curve(family, args.level, args.reps, args.seed, r_lo, r_hi,
                                        kind, auto_step=args.auto_step)
    _emit(local_power.write_power_csv(pts), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tarma-lm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output file (default: stdout)"):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1,
                        help="worker processes; never changes results")
        sp.add_argument("--out", default=None, help=out_help)

    t = sub.add_parser("test", help="supLM test of a series read from CSV")
    t.add_argument("series")
    t.add_argument("--band", type=_pair, default=(0.25, 0.75),
                   help="search band as percentiles a,b (wide preset: 0.01,0.99)")
    t.add_argument("--above", action="store_true", help="test for regulation from above")
    t.add_argument("--bootstrap", type=int, default=None, metavar="B",
                   help="also compute a wild-bootstrap p-value with B resamples")
    t.add_argument("--table", default=None, help="null table CSV (default: shipped table)")
    t.add_argument("--fix-phi0", action="store_true")
    t.add_argument("--curve-out", default=None, help="write the r,T curve as CSV")
    common(t)
    t.set_defaults(func=cmd_test)

    nt = sub.add_parser("null-table", help="simulate a null quantile table")
    nt.add_argument("--theta", type=_floats, default=[0.0])
    nt.add_argument("--n", type=_lengths, default=[null_dist.ASYMPTOTIC],
                    help="comma-separated lengths or 'asym'")
    nt.add_argument("--pi", type=_floats, default=[0.25])
    nt.add_argument("--reps", type=int, default=20000)
    nt.add_argument("--len", type=int, default=5000, help="path length for asym entries")
    common(nt, "table CSV (default: stdout)")
    nt.set_defaults(func=cmd_null_table)

    b = sub.add_parser("bench", help="run a size/power plan file")
    b.add_argument("--plan", required=True)
    b.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    b.add_argument("--table", default=None)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fit", help="fit a TARMA(1,1) with AIC threshold selection")
    f.add_argument("series")
    f.add_argument("--grid", type=_pair, default=(0.01, 0.99))
    f.add_argument("--min-regime-frac", type=float, default=0.01)
    f.add_argument("--common-theta", action="store_true")
    f.add_argument("--profile-out", default=None, help="write the r,aic profile as CSV")
    common(f, "coefficient CSV")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="simulate a benchmark DGP to CSV")
    s.add_argument("--dgp", required=True)
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--snr", type=float, default=math.inf)
    s.add_argument("--n", type=int, required=True)
    common(s)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diffusion", help="local-power curve of the diffusion limit")
    d.add_argument("--h", type=_floats, default=[0.0, 1.0, 3.0, 6.0],
                   help="members of the symmetric ergodic family")
    d.add_argument("--coefs", type=_floats, default=None,
                   help="single member c_1_0,c_1_1,c_2_0,c_2_1 instead of --h")
    d.add_argument("--tau0", type=float, default=0.0)
    d.add_argument("--band", type=_pair, default=(-0.5, 0.5))
    d.add_argument("--percentile", action="store_true", help="read --band as occupation fractions")
    d.add_argument("--steps", type=int, default=5000)
    d.add_argument("--auto-step", action="store_true")
    d.add_argument("--reps", type=int, default=1000)
    d.add_argument("--level", type=float, default=0.05)
    d.add_argument("--path-out", default=None, help="write one path of the first member")
    common(d, "param,rate,se CSV")
    d.set_defaults(func=cmd_diffusion)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        return args.func(args)
    except MissingTableError as exc:
        print(f"error: missing null table entry: {exc}", file=sys.stderr)
        return EXIT_TABLE
    except (UntestableSeriesError, DegenerateInputError, TooShortError,
            NoAdmissibleThresholdError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TarmaError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

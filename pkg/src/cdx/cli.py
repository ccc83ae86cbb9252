"""Batch command-line front end.

Subcommands: calibrate, simulate, table1, table2, detect, theory.  Every
run prints its resolved configuration as a leading comment line so any
output can be reproduced from the file alone.  Simulation output follows
one CSV schema:

    test,kind,u,r,c,window,shift,tau,reps,mean,sd,stderr,censored,conditional_kept

Floats are written in shortest round-trip form, so re-parsing a file
recovers the exact values (and aggregate identities like J_ACE = mean of
its cells hold on the parsed numbers).  J_ACE aggregate rows use tau=-1
with the sd/stderr/censored fields empty.  In Markdown format a mean from
a censored cell is rendered as ">= value".

Exit codes: 0 success (detect: alarm found), 3 detect ran clean with no
alarm, 1 runtime error, 2 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import calib, mc, theory
from .detect import DetectorSpec, cusum, cusum_oal, min_combo, run as run_detector, slr
from .limits import ControlLimitFn, constant, g_tilde, g_ur
from .model import GaussianChangeSpec, Regime, llr_transform

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ALARM = 3

GRID_COLUMNS = [
    "test", "kind", "u", "r", "c", "window", "shift", "tau",
    "reps", "mean", "sd", "stderr", "censored", "conditional_kept",
]

TABLE1_SHIFTS = [0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 3.0]
TABLE2_SHIFTS = [0.1, 1.0]
TABLE2_TAUS = [0, 1, 10, 50, 100, 150, 200]
JACE_TAUS = [1, 10, 50, 100, 150, 200]


def _fmt(x) -> str:
    """Shortest round-trip formatting; empty for None."""
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CDX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"cdx: invalid CDX_SEED value {env!r}")
    return 42


def _spec_from_args(args) -> tuple[str, DetectorSpec]:
    """Build the detector named by --test/--g/--u/--r/--c/--window."""
    test = args.test
    if test == "cusum":
        if args.c is None:
            raise SystemExit("cdx: --test cusum requires --c")
        return f"cusum_c{_fmt(args.c)}", cusum(args.c)
    if test == "oal":
        if args.c is None:
            raise SystemExit("cdx: --test oal requires --c")
        g, gname = _limit_from_args(args)
        label = f"oal_{gname}_c{_fmt(args.c)}"
        if args.window is not None:
            label += f"_w{args.window}"
        return label, cusum_oal(args.c, g, window=args.window)
    if test == "slr":
        r = args.r if args.r is not None else 0.0
        return f"slr_r{_fmt(r)}", slr(r)
    if test == "mincombo":
        if args.c is None:
            raise SystemExit("cdx: --test mincombo requires --c (its CUSUM threshold)")
        r = args.r if args.r is not None else 0.0
        return (
            f"mincombo_c{_fmt(args.c)}_r{_fmt(r)}",
            min_combo(cusum(args.c), slr(r)),
        )
    raise SystemExit(f"cdx: unknown test {test!r}")


def _limit_from_args(args) -> tuple[ControlLimitFn, str]:
    gkind = args.g or "const"
    if gkind == "const":
        return constant(), "const"
    if args.u is None:
        raise SystemExit(f"cdx: --g {gkind} requires --u")
    if gkind == "gur":
        return g_ur(args.u, args.r if args.r is not None else 0.0), f"gur_u{_fmt(args.u)}"
    if gkind == "gtilde":
        return g_tilde(args.u), f"gtilde_u{_fmt(args.u)}"
    raise SystemExit(f"cdx: unknown control limit {gkind!r}")


def _spec_csv_fields(spec: DetectorSpec) -> dict:
    """kind/u/r/c/window columns for one (possibly composite) spec."""
    from .detect import DetectorKind

    def leaves(s):
        if s.kind is DetectorKind.MIN_COMBO:
            return [x for comp in s.components for x in leaves(comp)]
        return [s]

    u = r = c = window = None
    for leaf in leaves(spec):
        if leaf.kind is DetectorKind.CUSUM_OAL:
            u = leaf.g.u if leaf.g.u else u
            c = leaf.c if c is None else c
            window = leaf.window if window is None else window
            if leaf.g.kind.value == "gur":
                r = leaf.g.r if r is None else r
        elif leaf.kind is DetectorKind.CUSUM:
            c = leaf.c if c is None else c
        else:
            r = leaf.r if r is None else r
    return {"kind": spec.kind.value, "u": u, "r": r, "c": c, "window": window}


class _Output:
    """Stdout or file sink writing the config header first."""

    def __init__(self, args, header_params: dict):
        self.path = getattr(args, "out", None) or "-"
        parts = " ".join(f"{k}={_fmt(v)}" for k, v in header_params.items())
        self.header = f"# cdx {args.subcommand} {parts}"

    def __enter__(self):
        self.fh = sys.stdout if self.path == "-" else open(self.path, "w", newline="")
        print(self.header, file=self.fh)
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()
        return False


def _write_rows(fh, fmt: str, columns: list[str], rows: list[dict]) -> None:
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])
        return
    # markdown
    def cell(row, col):
        val = row.get(col)
        if val is None:
            return ""
        if isinstance(val, float):
            # two decimals for summaries, %g for parameters (0.0007 != 0.00)
            text = f"{val:.2f}" if col in ("mean", "sd", "stderr") else f"{val:g}"
            if col == "mean" and row.get("censored"):
                return f">= {text}"
            return text
        return str(val)

    print("| " + " | ".join(columns) + " |", file=fh)
    print("|" + "|".join("---" for _ in columns) + "|", file=fh)
    for row in rows:
        print("| " + " | ".join(cell(row, c) for c in columns) + " |", file=fh)


def _grid_rows(cells: list[mc.GridCell], reps: int) -> list[dict]:
    rows = []
    for cell in cells:
        fields = _spec_csv_fields(cell.spec)
        summary = cell.summary
        rows.append({
            "test": cell.label,
            **fields,
            "shift": cell.shift,
            "tau": cell.tau,
            "reps": reps,
            "mean": summary.mean,
            "sd": summary.sd,
            "stderr": summary.stderr,
            "censored": summary.censored,
            "conditional_kept": summary.conditional_kept,
        })
    return rows


def _append_jace_rows(rows: list[dict]) -> None:
    """One tau=-1 aggregate row per (test, shift) from that test's cells."""
    by_key: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["tau"] in JACE_TAUS:
            by_key.setdefault((row["test"], row["shift"]), []).append(row)
    for (test, shift), group in by_key.items():
        if len(group) != len(JACE_TAUS):
            continue
        template = dict(group[0])
        template.update({
            "tau": -1,
            "mean": sum(r["mean"] for r in group) / len(group),
            "sd": None, "stderr": None, "censored": None, "conditional_kept": None,
        })
        rows.append(template)


# ---------------------------------------------------------------- subcommands


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    label, spec = _spec_from_args(args)
    cells = mc.compare_grid(
        [spec], args.shift, args.tau, reps=args.reps, seed=seed,
        max_steps=args.max_steps, workers=args.workers, labels=[label],
    )
    rows = _grid_rows(cells, args.reps)
    # workers deliberately left out of the header: results don't depend on it
    header = {"seed": seed, "reps": args.reps, "max_steps": args.max_steps,
              "test": label, "shifts": ",".join(map(_fmt, args.shift)),
              "taus": ",".join(map(str, args.tau))}
    with _Output(args, header) as fh:
        _write_rows(fh, args.format, GRID_COLUMNS, rows)
    return EXIT_OK


def _table_specs(which: int, recalibrate: bool, seed: int, workers: int):
    """(labels, specs) for the two benchmark grids, optionally recalibrated."""
    if which == 1:
        target = 1000.0
        gtilde_cs = [5.6125, 7.7790, 9.97, 11.38, 11.84]
        gtilde_us = [1.0, 10.0, 100.0, 1000.0, 10000.0]
        slr_r, mincombo_c = 0.0007, 11.9271
        cusum_c = 5.0742
    else:
        target = 500.0
        gtilde_cs = [6.5839]
        gtilde_us = [100.0]
        slr_r, mincombo_c = 0.00137, 10.4889
        cusum_c = 4.3867

    if recalibrate:
        kw = dict(seed=seed, workers=workers)
        cusum_c = calib.calibrate_threshold(lambda c: cusum(c), target, **kw).parameter
        gtilde_cs = [
            calib.calibrate_threshold(lambda c, u=u: cusum_oal(c, g_tilde(u)), target, **kw).parameter
            for u in gtilde_us
        ]
        slr_r = calib.calibrate_slack(lambda r: slr(r), target, **kw).parameter
        mincombo_c = calib.calibrate_threshold(
            lambda c: min_combo(cusum(c), slr(0.0)), target, **kw
        ).parameter

    labels = ["T_C"]
    specs = [cusum(cusum_c)]
    for u, c in zip(gtilde_us, gtilde_cs):
        labels.append(f"T_C_gtilde_u{u:g}")
        specs.append(cusum_oal(c, g_tilde(u)))
    labels += [f"T_star_r{slr_r:g}", "T_C_min_T_star0", "T_star_r0"]
    specs += [slr(slr_r), min_combo(cusum(mincombo_c), slr(0.0)), slr(0.0)]
    return labels, specs


def _run_table(args, which: int) -> int:
    seed = _resolve_seed(args)
    reps = 1_000_000 if args.full else args.reps
    if reps < 10_000:
        raise SystemExit(f"cdx: table{which} needs reps >= 10000, got {reps}")
    labels, specs = _table_specs(which, args.recalibrate, seed, args.workers)
    if which == 1:
        shifts, taus = TABLE1_SHIFTS, [1]
    else:
        shifts, taus = TABLE2_SHIFTS, TABLE2_TAUS
    cells = mc.compare_grid(
        specs, shifts, taus, reps=reps, seed=seed,
        max_steps=args.max_steps, workers=args.workers, labels=labels,
    )
    rows = _grid_rows(cells, reps)
    if which == 2:
        _append_jace_rows(rows)
    header = {"seed": seed, "reps": reps, "max_steps": args.max_steps,
              "recalibrate": args.recalibrate}
    with _Output(args, header) as fh:
        _write_rows(fh, args.format, GRID_COLUMNS, rows)
    return EXIT_OK


def cmd_table1(args) -> int:
    return _run_table(args, 1)


def cmd_table2(args) -> int:
    return _run_table(args, 2)


def cmd_calibrate(args) -> int:
    seed = _resolve_seed(args)
    kw = dict(
        target_arl0=args.target_arl0, rel_tol=args.rel_tol, reps=args.reps,
        seed=seed, max_steps=args.max_steps, workers=args.workers,
    )
    if args.test == "slr":
        result = calib.calibrate_slack(lambda r: slr(r), **kw)
        label = "slr"
    elif args.test == "cusum":
        result = calib.calibrate_threshold(lambda c: cusum(c), **kw)
        label = "cusum"
    elif args.test == "oal":
        g, gname = _limit_from_args(args)
        result = calib.calibrate_threshold(
            lambda c: cusum_oal(c, g, window=args.window), **kw
        )
        label = f"oal_{gname}"
    elif args.test == "mincombo":
        r = args.r if args.r is not None else 0.0
        result = calib.calibrate_threshold(
            lambda c: min_combo(cusum(c), slr(r)), **kw
        )
        label = f"mincombo_r{_fmt(r)}"
    else:
        raise SystemExit(f"cdx: unknown test {args.test!r}")
    columns = ["test", "target_arl0", "rel_tol", "reps", "parameter",
               "achieved_arl0", "achieved_stderr", "iterations", "bracket_lo", "bracket_hi"]
    row = {
        "test": label, "target_arl0": args.target_arl0, "rel_tol": args.rel_tol,
        "reps": args.reps, "parameter": result.parameter,
        "achieved_arl0": result.achieved_arl0, "achieved_stderr": result.achieved_stderr,
        "iterations": result.iterations,
        "bracket_lo": result.bracket[0], "bracket_hi": result.bracket[1],
    }
    header = {"seed": seed, "reps": args.reps, "max_steps": args.max_steps,
              "test": label, "target_arl0": args.target_arl0, "rel_tol": args.rel_tol}
    with _Output(args, header) as fh:
        _write_rows(fh, args.format, columns, [row])
    return EXIT_OK


def cmd_theory(args) -> int:
    spec = GaussianChangeSpec()
    g, gname = _limit_from_args(args)
    approx = theory.arl_approx(spec, args.v, args.c, g, a=args.a)
    row = {
        "v": args.v, "c": args.c, "g": gname, "a": args.a,
        "regime": approx.regime.value,
        "theta_star": None, "theta_zero": None, "u_fixed": None, "b": None,
        "lower": approx.lower, "upper": approx.upper, "point": approx.point,
    }
    if approx.regime is Regime.V_MINUS:
        sol = theory.solve_theta_star(spec, args.v, g, a=args.a)
        row.update({
            "theta_star": sol.theta_star,
            "theta_zero": theory.theta_zero(spec, args.v),
            "u_fixed": sol.u_fixed,
            "b": theory.find_b(spec, args.v, g, a=args.a),
        })
    columns = ["v", "c", "g", "a", "regime", "theta_star", "theta_zero",
               "u_fixed", "b", "lower", "upper", "point"]
    header = {"v": args.v, "c": args.c, "g": gname, "a": args.a}
    with _Output(args, header) as fh:
        _write_rows(fh, args.format, columns, [row])
    return EXIT_OK


def cmd_detect(args) -> int:
    label, spec = _spec_from_args(args)
    model = GaussianChangeSpec()
    try:
        fh = open(args.input, newline="")
    except OSError as exc:
        print(f"cdx: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    zs = []
    with fh:
        reader = csv.reader(fh)
        for lineno, rowvals in enumerate(reader, start=1):
            if args.has_header and lineno == 1:
                continue
            if not rowvals or not rowvals[0].strip():
                continue
            try:
                x = float(rowvals[0])
            except ValueError:
                print(
                    f"cdx: {args.input} line {lineno}: not a number: {rowvals[0]!r}",
                    file=sys.stderr,
                )
                return EXIT_ERROR
            zs.append(llr_transform(model, x))
    if not zs:
        print(f"cdx: {args.input}: no observations", file=sys.stderr)
        return EXIT_ERROR
    alarm = run_detector(spec, zs, max_steps=args.max_steps)
    if alarm is None:
        print("NONE")
        return EXIT_NO_ALARM
    print(alarm)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser, reps_default: int | None) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG root seed (default: $CDX_SEED, else 42)")
    if reps_default is not None:
        p.add_argument("--reps", type=int, default=reps_default)
    p.add_argument("--max-steps", type=int, default=mc.DEFAULT_MAX_STEPS)
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--workers", type=int, default=1)


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test", required=True, choices=["cusum", "oal", "slr", "mincombo"])
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--g", choices=["const", "gur", "gtilde"], default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--window", type=int, default=None)


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdx", description="Sequential change-point detection toolkit"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="run-length grid for one detector")
    _add_spec_flags(p)
    p.add_argument("--shift", type=_float_list, default=[1.0],
                   help="comma-separated post-change means")
    p.add_argument("--tau", type=_int_list, default=[1],
                   help="comma-separated change-points (0 = in-control)")
    _add_common(p, reps_default=100_000)
    p.set_defaults(func=cmd_simulate)

    for which in (1, 2):
        p = sub.add_parser(f"table{which}", help=f"reproduce benchmark grid {which}")
        p.add_argument("--full", action="store_true", help="use 1e6 replications")
        p.add_argument("--recalibrate", action="store_true",
                       help="recalibrate thresholds instead of using baked-in constants")
        _add_common(p, reps_default=100_000)
        p.set_defaults(func=cmd_table1 if which == 1 else cmd_table2)

    p = sub.add_parser("calibrate", help="find c (or r) hitting a target ARL0")
    _add_spec_flags(p)
    p.add_argument("--target-arl0", type=float, required=True, dest="target_arl0")
    p.add_argument("--rel-tol", type=float, default=0.02, dest="rel_tol")
    _add_common(p, reps_default=200_000)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect", help="scan a CSV of observations for a change")
    p.add_argument("--input", required=True)
    p.add_argument("--has-header", action="store_true")
    _add_spec_flags(p)
    _add_common(p, reps_default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("theory", help="closed-form ARL approximations")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--g", choices=["const", "gur", "gtilde"], default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_theory)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"cdx: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: hypothesis tests, simulation studies, bond factors.

Subcommands
-----------
``ivx test``      run the corrected predictive-regression test on a CSV
``ivx simulate``  run scenario-file simulation grids to a CSV of rejection rates
``ivx factors``   build the bond forward-rate / excess-return / factor table

Every flag can also be supplied through an environment variable with the
``IVX_`` prefix (``IVX_DATA``, ``IVX_LEVEL``, ``IVX_SEED``, ...); an
explicit flag wins over the environment, which wins over scenario-file
values and built-in defaults.  Exit codes: 0 success, 2 invalid input or
usage, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np
import pandas as pd

from . import bonds
from .engine import run_test
from .errors import MissingColumn, NumericalError, ValidationError
from .model import SIDES, Hypothesis, IvxConfig, PredictiveSample
from .montecarlo import rejection_rate, size_power_grid
from .scenario import parse_scenarios

__all__ = ["main", "build_parser"]


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _env(name: str, kind, fallback):
    raw = os.environ.get(f"IVX_{name}")
    if raw is None or raw == "":
        return fallback
    try:
        return kind(raw)
    except ValueError as exc:
        kind_name = kind.__name__.lstrip("_")
        raise ValidationError(f"IVX_{name}={raw!r} is not a valid {kind_name}") from exc


def _resolve(value, name: str, kind, fallback):
    """Flag value if given, else IVX_<NAME> from the environment, else fallback."""
    if value is not None:
        return value
    return _env(name, kind, fallback)


def _require(value, flag: str, name: str):
    if value is None:
        raise ValidationError(f"missing {flag} (set the flag or IVX_{name})")
    return value


def stars(p_value: float) -> str:
    if p_value <= 0.01:
        return "***"
    if p_value <= 0.05:
        return "**"
    if p_value <= 0.10:
        return "*"
    return ""


def _float_cell(value) -> str:
    return "" if value is None else repr(float(value))


# ---------------------------------------------------------------------------
# ivx test


def _load_columns(path: str, y_col: str, x_cols: list[str]):
    """Extract aligned numeric series, trimming incomplete edge rows.

    Interior rows with missing values are an error: silently dropping them
    would splice non-adjacent periods into one lag pair.
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ValidationError(f"data file not found: {path}") from exc
    for name in [y_col, *x_cols]:
        if name not in frame.columns:
            raise MissingColumn(f"column not found: {name}")
    block = (
        frame[[y_col, *x_cols]]
        .apply(pd.to_numeric, errors="coerce")
        .to_numpy(float)
    )
    complete = np.isfinite(block).all(axis=1)
    if not complete.any():
        raise ValidationError("no complete rows in the data file")
    first, last = np.argmax(complete), len(complete) - np.argmax(complete[::-1])
    if not complete[first:last].all():
        holes = np.where(~complete[first:last])[0] + first
        raise ValidationError(
            f"missing values in interior rows {holes[:5].tolist()}; "
            "refusing to splice non-adjacent periods"
        )
    block = block[first:last]
    if block.shape[0] < 2:
        raise ValidationError("need at least two complete rows to form a lag pair")
    return block[:, 0], block[:, 1:]


def _parse_marginal(raw: str, labels: list[str]) -> int:
    if raw in labels:
        return labels.index(raw)
    try:
        index = int(raw)
    except ValueError:
        raise ValidationError(
            f"--marginal must name a predictor column or 1-based index, got {raw!r}"
        ) from None
    if not 1 <= index <= len(labels):
        raise ValidationError(f"--marginal index {index} outside 1..{len(labels)}")
    return index - 1


def _render_table(report, level: float) -> str:
    lines = [
        "predictive regression test (T = %d, K = %d)" % (report.nobs, report.k),
        "",
        "  %-10s %14s %14s" % ("predictor", "beta_l", "beta_m"),
    ]
    for label, bl, bm in zip(report.labels, report.beta_l, report.beta_m):
        lines.append("  %-10s %14.6f %14.6f" % (label, bl, bm))
    lines += ["", "  %-10s %12s %10s" % ("statistic", "value", "p-value")]
    order = ["q_ivx", "q_l", "q_m"] + (["t_l", "t_m"] if report.t_l is not None else [])
    values = {
        "q_ivx": report.q_ivx,
        "q_l": report.q_l,
        "q_m": report.q_m,
        "t_l": report.t_l,
        "t_m": report.t_m,
    }
    for name in order:
        p = report.p_values[name]
        lines.append(
            "  %-10s %12.4f %10.4f %s" % (name, values[name], p, stars(p))
        )
    head_p = report.p_values[report.headline]
    verdict = "rejected" if head_p <= level else "not rejected"
    lines += [
        "",
        "headline %s: p = %.4f -> H0 %s at the %g%% level"
        % (report.headline, head_p, verdict, 100 * level),
        "significance: * 10%  ** 5%  *** 1%",
    ]
    return "\n".join(lines)


def cmd_test(args) -> int:
    data = _require(_resolve(args.data, "DATA", str, None), "--data", "DATA")
    y_col = _require(_resolve(args.y, "Y", str, None), "--y", "Y")
    x_raw = _require(_resolve(args.x, "X", str, None), "--x", "X")
    # An explicit flag beats the environment, so --joint silences IVX_MARGINAL
    # and --marginal silences IVX_JOINT; conflicts on the same level are errors.
    if args.marginal is not None:
        joint, marginal = args.joint, args.marginal
    elif args.joint:
        joint, marginal = True, None
    else:
        joint = _env("JOINT", _bool, False)
        marginal = _env("MARGINAL", str, None)
    if joint and marginal is not None:
        raise ValidationError("--joint and --marginal are mutually exclusive")
    side = _resolve(args.side, "SIDE", str, None) or "two"
    if side not in SIDES:
        raise ValidationError(f"--side must be one of {SIDES}, got {side!r}")
    out = _resolve(args.out, "OUT", str, None)
    level = _resolve(args.level, "LEVEL", float, 0.05)
    if not 0.0 < level < 1.0:
        raise ValidationError(f"--level must lie in (0, 1), got {level}")
    x_cols = [part.strip() for part in x_raw.split(",") if part.strip()]
    if not x_cols:
        raise ValidationError("--x needs at least one column name")
    y_series, x_series = _load_columns(data, y_col, x_cols)

    # Rows hold contemporaneous observations; the regression pairs each
    # response with the previous row's predictors.
    sample = PredictiveSample(y=y_series[1:], x=x_series[:-1], labels=x_cols)

    if marginal is not None:
        index = _parse_marginal(marginal, x_cols)
        hyp = Hypothesis.marginal(index, sample.k, side=side)
    else:
        if side != "two":
            raise ValidationError("--side applies only with --marginal")
        hyp = Hypothesis.joint_zero(sample.k)

    cfg = IvxConfig(
        c_z=_resolve(args.cz, "CZ", float, None),
        delta=_resolve(args.delta, "DELTA", float, 0.95),
        lam=_resolve(args.lam, "LAMBDA", float, 0.5),
    )
    report = run_test(sample, hyp, cfg)
    print(_render_table(report, level))
    if out:
        payload = report.to_dict()
        payload["level"] = level
        payload["reject"] = {
            name: bool(p <= level) for name, p in report.p_values.items()
        }
        with open(out, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        print(f"wrote report to {out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# ivx simulate

_CSV_HEADER = [
    "scenario",
    "statistic",
    "b",
    "t",
    "k",
    "reps",
    "effective",
    "failures",
    "level",
    "seed",
    "rejection_rate",
    "mc_se",
]


def _summary_rows(name: str, b, summary) -> list[list[str]]:
    rows = []
    for stat in summary.statistics:
        rows.append(
            [
                name,
                stat,
                "" if b is None else repr(float(b)),
                str(summary.dgp.nobs),
                str(summary.dgp.k),
                str(summary.replications),
                str(summary.effective),
                str(summary.failures),
                repr(float(summary.level)),
                str(summary.seed),
                repr(summary.rejection_rate[stat]),
                repr(summary.monte_carlo_se[stat]),
            ]
        )
    return rows


def cmd_simulate(args) -> int:
    scenario_path = _require(
        _resolve(args.scenario, "SCENARIO", str, None), "--scenario", "SCENARIO"
    )
    out = _require(_resolve(args.out, "OUT", str, None), "--out", "OUT")
    reps_override = _resolve(args.reps, "REPS", int, None)
    seed_override = _resolve(args.seed, "SEED", int, None)
    threads = _resolve(args.threads, "THREADS", int, 1)
    scenarios = parse_scenarios(scenario_path)
    rows: list[list[str]] = []
    for scn in scenarios:
        reps = reps_override if reps_override is not None else (scn.reps or 1000)
        seed = seed_override if seed_override is not None else (
            scn.seed if scn.seed is not None else 0
        )
        if scn.beta is not None:
            summary = rejection_rate(
                scn.dgp, scn.hyp, scn.cfg,
                reps=reps, level=scn.level, seed=seed, n_jobs=threads,
            )
            cells = [(None, summary)]
        else:
            grid = size_power_grid(
                [scn.dgp], scn.b_grid, scn.hyp, scn.cfg,
                reps=reps, level=scn.level, seed=seed, n_jobs=threads,
                beta_rule=scn.beta_rule,
            )
            cells = [(cell.b, cell.summary) for cell in grid]
        for b, summary in cells:
            rows.extend(_summary_rows(scn.name, b, summary))
            shown = ", ".join(
                f"{stat}={summary.rejection_rate[stat]:.4f}"
                for stat in ("q_l", "q_m")
            )
            tag = "" if b is None else f" b={b:g}"
            print(
                f"[{scn.name}]{tag} reps={summary.effective} {shown}",
                file=sys.stderr,
            )
    with open(out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# ivx factors


def cmd_factors(args) -> int:
    prices = _require(_resolve(args.prices, "PRICES", str, None), "--prices", "PRICES")
    macro_path = _resolve(args.macro, "MACRO", str, None)
    out = _require(_resolve(args.out, "OUT", str, None), "--out", "OUT")
    panel = bonds.load_bond_panel(prices)
    macro = bonds.load_macro_panel(macro_path) if macro_path else None
    header, rows = bonds.build_factor_table(panel, macro)
    with open(out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0]] + [_float_cell(v) for v in row[1:]])
    print(
        f"wrote {len(rows)} months x {len(header) - 1} series to {out}",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivx",
        description="Bias- and variance-corrected inference for predictive regressions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test predictability in a CSV data set")
    p_test.add_argument("--data", help="CSV with response and predictor columns")
    p_test.add_argument("--y", help="response column name")
    p_test.add_argument("--x", help="comma-separated predictor column names")
    p_test.add_argument("--joint", action="store_true",
                        help="test all coefficients jointly (the default)")
    p_test.add_argument("--marginal", help="test a single predictor (name or 1-based index)")
    p_test.add_argument("--side", choices=SIDES,
                        help="alternative for a marginal test (default two)")
    p_test.add_argument("--level", type=float, help="significance level (default 0.05)")
    p_test.add_argument("--cz", type=float, help="instrument drift constant (default -(4+K))")
    p_test.add_argument("--delta", type=float, help="instrument persistence exponent (default 0.95)")
    p_test.add_argument("--lambda", dest="lam", type=float, help="sample-split fraction (default 0.5)")
    p_test.add_argument("--out", help="write the JSON report here")
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="run scenario-file simulation grids")
    p_sim.add_argument("--scenario", help="INI scenario file")
    p_sim.add_argument("--reps", type=int, help="override replication count for every scenario")
    p_sim.add_argument("--seed", type=int, help="override master seed for every scenario")
    p_sim.add_argument("--threads", type=int, help="worker processes (default 1)")
    p_sim.add_argument("--out", help="write the rejection-rate CSV here")
    p_sim.set_defaults(func=cmd_simulate)

    p_fac = sub.add_parser("factors", help="build the bond factor table")
    p_fac.add_argument("--prices", help="CSV of monthly log prices (date, p1..pN)")
    p_fac.add_argument("--macro", help="optional CSV of macro aggregates (date, M1..M8)")
    p_fac.add_argument("--out", help="write the factor CSV here")
    p_fac.set_defaults(func=cmd_factors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

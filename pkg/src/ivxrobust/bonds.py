"""Bond return predictability inputs: forward rates, excess returns, factors.

Input panels are monthly log zero-coupon bond prices ``p1..pN`` (maturity
in years, contiguous from 1) keyed by a ``YYYY-MM`` date column.  From
those we build forward rates, annual excess holding-period returns, the
single tent-shaped forward-rate factor, and two macro factors fitted on
eight macro aggregates ``M1..M8``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import (
    MissingColumn,
    MissingMaturity,
    NonContiguousDates,
    OutOfRange,
    ValidationError,
)
from .estimators import ols_fit

__all__ = [
    "BondPanel",
    "MacroPanel",
    "FactorFit",
    "load_bond_panel",
    "load_macro_panel",
    "forward_rates",
    "excess_returns",
    "average_excess_return",
    "cp_factor",
    "ln_factors",
    "build_factor_table",
]

HORIZON = 12

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})$")

#: Macro columns entering each fitted factor; M1 also enters cubed.
LN_REGRESSORS = {
    "LN1": ("M1", "M3", "M4", "M8"),
    "LN2": ("M1", "M2", "M3", "M4", "M8"),
}


@dataclass
class BondPanel:
    """Log price panel: ``prices[t, n-1]`` is the n-year log price in month t."""

    dates: list[str]
    prices: np.ndarray

    @property
    def n_months(self) -> int:
        return self.prices.shape[0]

    @property
    def n_maturities(self) -> int:
        return self.prices.shape[1]


@dataclass
class MacroPanel:
    """Macro aggregates aligned to the same monthly calendar."""

    dates: list[str]
    values: np.ndarray
    columns: list[str]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise MissingColumn(f"column not found: {name}")
        return self.values[:, self.columns.index(name)]


@dataclass
class FactorFit:
    """A fitted return-forecasting factor and its in-sample series."""

    label: str
    intercept: float
    slopes: np.ndarray
    series: np.ndarray


def _month_index(dates, where: str) -> np.ndarray:
    codes = []
    for raw in dates:
        match = _DATE_RE.match(str(raw).strip())
        if not match:
            raise ValidationError(f"{where}: dates must be YYYY-MM, got {raw!r}")
        year, month = int(match.group(1)), int(match.group(2))
        if not 1 <= month <= 12:
            raise ValidationError(f"{where}: month out of range in {raw!r}")
        codes.append(year * 12 + month - 1)
    return np.asarray(codes)


def _check_contiguous(dates, where: str) -> list[str]:
    codes = _month_index(dates, where)
    steps = np.diff(codes)
    if np.any(steps != 1):
        gap = int(np.argmax(steps != 1))
        raise NonContiguousDates(
            f"{where}: gap or disorder between {dates[gap]} and {dates[gap + 1]}"
        )
    return [str(d).strip() for d in dates]


def _read_csv(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ValidationError(f"data file not found: {path}") from exc


def _numeric_block(frame: pd.DataFrame, columns, where: str) -> np.ndarray:
    block = frame[list(columns)].apply(pd.to_numeric, errors="coerce").to_numpy(float)
    if not np.all(np.isfinite(block)):
        rows = np.where(~np.isfinite(block).all(axis=1))[0]
        raise ValidationError(f"{where}: missing or non-numeric values in rows {rows[:5].tolist()}")
    return block


def load_bond_panel(path) -> BondPanel:
    """Read a CSV of monthly log prices with columns date, p1, p2, ...

    Maturities must be contiguous from one year up; extra columns are
    ignored.  Dates must be consecutive months.
    """
    frame = _read_csv(path)
    if "date" not in frame.columns:
        raise MissingColumn("column not found: date")
    present = {c for c in frame.columns if re.fullmatch(r"p\d+", c)}
    n = 0
    while f"p{n + 1}" in present:
        n += 1
    if n == 0:
        raise MissingColumn("column not found: p1")
    skipped = sorted(present - {f"p{i}" for i in range(1, n + 1)})
    if skipped:
        raise MissingColumn(
            f"column not found: p{n + 1} (maturities must be contiguous; saw {skipped})"
        )
    dates = _check_contiguous(frame["date"].tolist(), "bond panel")
    prices = _numeric_block(frame, [f"p{i}" for i in range(1, n + 1)], "bond panel")
    return BondPanel(dates=dates, prices=prices)


def load_macro_panel(path) -> MacroPanel:
    """Read a CSV of monthly macro aggregates with columns date, M1..M8."""
    frame = _read_csv(path)
    if "date" not in frame.columns:
        raise MissingColumn("column not found: date")
    columns = [f"M{i}" for i in range(1, 9)]
    for name in columns:
        if name not in frame.columns:
            raise MissingColumn(f"column not found: {name}")
    dates = _check_contiguous(frame["date"].tolist(), "macro panel")
    values = _numeric_block(frame, columns, "macro panel")
    return MacroPanel(dates=dates, values=values, columns=columns)


def forward_rates(panel: BondPanel) -> np.ndarray:
    """Forward rates per maturity: F1 = -p1, Fn = p(n-1) - p(n)."""
    p = panel.prices
    out = np.empty_like(p)
    out[:, 0] = -p[:, 0]
    if p.shape[1] > 1:
        out[:, 1:] = p[:, :-1] - p[:, 1:]
    return out


def excess_returns(panel: BondPanel, maturity: int, horizon: int = HORIZON) -> np.ndarray:
    """Annual log excess return on the n-year bond, stored at realization month.

    ``rx[s] = p(n-1)_s - p(n)_{s-12} + p(1)_{s-12}``; the first ``horizon``
    entries are NaN because their purchase month precedes the panel.
    """
    if not 2 <= maturity <= panel.n_maturities:
        raise MissingMaturity(
            f"need maturity {maturity} and {maturity - 1}; panel holds 1..{panel.n_maturities}"
        )
    if panel.n_months <= horizon:
        raise OutOfRange(
            f"panel spans {panel.n_months} months; need more than {horizon}"
        )
    p = panel.prices
    out = np.full(panel.n_months, np.nan)
    out[horizon:] = (
        p[horizon:, maturity - 2] - p[:-horizon, maturity - 1] + p[:-horizon, 0]
    )
    return out


def average_excess_return(panel: BondPanel, horizon: int = HORIZON) -> np.ndarray:
    """Mean of the 2- through 5-year excess returns (needs maturities to 5)."""
    if panel.n_maturities < 5:
        raise MissingMaturity(
            f"average excess return needs maturities 1..5; panel holds 1..{panel.n_maturities}"
        )
    stacked = np.column_stack(
        [excess_returns(panel, n, horizon) for n in range(2, 6)]
    )
    return stacked.mean(axis=1)


def _fit_factor(label, regressors, target, horizon):
    """Regress target[t + horizon] on regressors[t] with intercept; full-sample series."""
    usable = np.where(np.isfinite(target[horizon:]))[0]
    n_min = regressors.shape[1] + 2
    if usable.size < n_min:
        raise OutOfRange(
            f"{label}: {usable.size} usable months, need at least {n_min}"
        )
    fit = ols_fit(target[horizon:][usable], regressors[usable])
    series = regressors @ fit.beta_hat
    return FactorFit(
        label=label,
        intercept=float(fit.mu_hat),
        slopes=fit.beta_hat,
        series=series,
    )


def cp_factor(forwards: np.ndarray, rx_bar: np.ndarray, horizon: int = HORIZON) -> FactorFit:
    """Single forward-rate factor: fit the average excess return on all forwards.

    ``forwards`` is the full (months, 5) forward-rate matrix; ``rx_bar``
    the realization-dated average excess return.  The returned series is
    the fitted combination evaluated in every month.
    """
    forwards = np.asarray(forwards, dtype=float)
    if forwards.ndim != 2 or forwards.shape[1] < 5:
        raise MissingMaturity(
            f"forward-rate factor needs maturities 1..5, got shape {forwards.shape}"
        )
    return _fit_factor("CP", forwards[:, :5], np.asarray(rx_bar, dtype=float), horizon)


def ln_factors(macro: MacroPanel, rx_bar: np.ndarray, which: str = "LN1",
               horizon: int = HORIZON) -> FactorFit:
    """Macro factor: fit the average excess return on a fixed macro subset.

    ``LN1`` uses (M1, M1^3, M3, M4, M8); ``LN2`` adds M2.
    """
    if which not in LN_REGRESSORS:
        raise ValidationError(f"which must be one of {sorted(LN_REGRESSORS)}, got {which!r}")
    names = LN_REGRESSORS[which]
    m1 = macro.column("M1")
    columns = [m1, m1**3]
    columns.extend(macro.column(name) for name in names[1:])
    regressors = np.column_stack(columns)
    return _fit_factor(which, regressors, np.asarray(rx_bar, dtype=float), horizon)


def build_factor_table(panel: BondPanel, macro: MacroPanel | None = None,
                       horizon: int = HORIZON) -> tuple[list[str], list[list]]:
    """Assemble the month-by-month factor table as (header, rows).

    Always includes forwards F1..FN.  Excess returns rx2..rx5 and the
    fitted factors appear only when the panel is long and wide enough to
    support them; missing leading cells are None.  With a macro panel the
    LN factors are appended; its calendar must cover the bond panel's.
    """
    forwards = forward_rates(panel)
    header = ["date"] + [f"F{i}" for i in range(1, panel.n_maturities + 1)]
    blocks = [forwards]

    long_enough = panel.n_months > horizon
    rx_top = min(5, panel.n_maturities)
    if long_enough and rx_top >= 2:
        rx_block = np.column_stack(
            [excess_returns(panel, n, horizon) for n in range(2, rx_top + 1)]
        )
        header += [f"rx{n}" for n in range(2, rx_top + 1)]
        blocks.append(rx_block)

    rx_bar = None
    if long_enough and panel.n_maturities >= 5:
        rx_bar = average_excess_return(panel, horizon)
        if panel.n_months >= horizon + 7:
            cp = cp_factor(forwards, rx_bar, horizon)
            header.append("CP")
            blocks.append(cp.series[:, None])

    if macro is not None:
        if rx_bar is None:
            raise MissingMaturity(
                "macro factors need the average excess return (maturities 1..5 "
                f"and more than {horizon} months)"
            )
        missing = [d for d in panel.dates if d not in set(macro.dates)]
        if missing:
            raise NonContiguousDates(
                f"macro panel does not cover bond months {missing[:3]}"
            )
        rows = [macro.dates.index(d) for d in panel.dates]
        aligned = MacroPanel(
            dates=list(panel.dates), values=macro.values[rows], columns=macro.columns
        )
        for which in ("LN1", "LN2"):
            fit = ln_factors(aligned, rx_bar, which, horizon)
            header.append(which)
            blocks.append(fit.series[:, None])

    table = np.column_stack(blocks)
    rows = []
    for t in range(panel.n_months):
        row: list = [panel.dates[t]]
        row.extend(
            None if not np.isfinite(value) else float(value) for value in table[t]
        )
        rows.append(row)
    return header, rows

"""Simulation designs and the replication harness for size/power studies.

Predictors are near-unit-root or stationary AR(1) processes whose
innovations load on the same shock as the regression error (that loading
is what distorts naive inference); errors follow a GARCH(1,1).  The
harness runs independent replications with per-replication RNG streams
keyed by (master seed, replication index), so results are identical under
any parallel schedule.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .engine import run_test
from .errors import NonStationary, NumericalError, TooManyFailures, ValidationError
from .model import DgpSpec, Hypothesis, IvxConfig, PredictiveSample

__all__ = [
    "SimulationSummary",
    "GridCell",
    "simulate_garch_u",
    "simulate_dgp",
    "rejection_rate",
    "size_power_grid",
]

#: Share of replications allowed to abort on numerical degeneracy before
#: the whole run is declared invalid.
FAILURE_BUDGET = 0.01


@dataclass
class SimulationSummary:
    """Rejection rates for one design cell.

    ``monte_carlo_se`` is sqrt(p(1-p)/n) with n the effective replication
    count (failures excluded from the denominator).  ``draws`` holds
    per-replication statistic values for any names requested via
    ``collect``, in replication order.
    """

    dgp: DgpSpec
    hypothesis: Hypothesis
    config: IvxConfig
    replications: int
    effective: int
    failures: int
    level: float
    seed: object
    statistics: tuple[str, ...]
    rejection_rate: dict[str, float]
    monte_carlo_se: dict[str, float]
    draws: dict[str, np.ndarray] | None = None


@dataclass
class GridCell:
    """One (scenario, coefficient value) cell of a size/power grid."""

    scenario: int
    b: float
    summary: SimulationSummary


def simulate_garch_u(n_periods: int, garch, eta) -> np.ndarray:
    """GARCH(1,1) errors ``u_t = h_t eta_t`` driven by a supplied shock stream.

    The variance recursion is ``h_t^2 = phi0 + phi1 h_{t-1}^2 +
    phibar1 u_{t-1}^2``, started at the unconditional variance
    ``phi0 / (1 - phi1 - phibar1)``.

    Raises
    ------
    NonStationary
        If ``phi1 + phibar1 >= 1``.
    ValidationError
        If ``phi0 <= 0``, a weight is negative, or ``eta`` is too short.
    """
    phi0, phi1, phibar1 = (float(v) for v in garch)
    if phi1 + phibar1 >= 1.0:
        raise NonStationary(f"phi1 + phibar1 = {phi1 + phibar1} >= 1")
    if phi0 <= 0.0 or phi1 < 0.0 or phibar1 < 0.0:
        raise ValidationError(f"garch parameters out of range: {(phi0, phi1, phibar1)}")
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape[0] < n_periods:
        raise ValidationError(f"eta stream of length {eta.shape[0]} < {n_periods}")
    eta = eta[:n_periods]

    if phibar1 == 0.0:
        # Starting at the fixed point of h^2 = phi0 + phi1 h^2 keeps the
        # variance constant, so the whole path collapses to a scaling.
        return np.sqrt(phi0 / (1.0 - phi1)) * eta

    h2 = phi0 / (1.0 - phi1 - phibar1)
    u = np.empty(n_periods)
    u[0] = np.sqrt(h2) * eta[0]
    for t in range(1, n_periods):
        h2 = phi0 + phi1 * h2 + phibar1 * u[t - 1] ** 2
        u[t] = np.sqrt(h2) * eta[t]
    return u


def simulate_dgp(spec: DgpSpec, seed) -> PredictiveSample:
    """Draw one sample from the design.

    Shocks ``eta_t`` and predictor noise are i.i.d. standard normal;
    predictor innovations are ``gamma_i eta_t + noise`` so their
    correlation with the error is ``gamma_i / sqrt(1 + gamma_i^2)``.  The
    predictor recursions start at zero and run ``burn_in`` extra periods
    that are discarded before the sample window.

    ``seed`` may be an integer, a SeedSequence, or a Generator.
    """
    rho = spec.rho
    if np.any(rho > 1.0 + 1e-12):
        raise ValidationError(f"explosive predictor root(s): {rho}")
    if spec.alpha == 0.0 and np.any(np.abs(rho) >= 1.0):
        raise ValidationError(f"stationary design needs |rho| < 1, got {rho}")
    if len(spec.gamma) != spec.k or len(spec.beta) != spec.k:
        raise ValidationError("c, gamma, and beta must have equal length")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_total = spec.burn_in + spec.nobs
    eta = rng.standard_normal(n_total)
    noise = rng.standard_normal((n_total, spec.k))
    u = simulate_garch_u(n_total, (spec.phi0, spec.phi1, spec.phibar1), eta)
    v = eta[:, None] * spec.gamma + noise

    x_path = np.empty((n_total + 1, spec.k))
    x_path[0] = 0.0
    for i in range(spec.k):
        x_path[1:, i] = signal.lfilter([1.0], [1.0, -rho[i]], v[:, i])

    x = x_path[spec.burn_in : spec.burn_in + spec.nobs]
    y = spec.mu + x @ spec.beta + u[spec.burn_in :]
    return PredictiveSample(y=y, x=x)


def _entropy_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        parts = (int(seed),)
    else:
        parts = tuple(int(v) for v in seed)
    if any(v < 0 for v in parts):
        raise ValidationError(f"seeds must be non-negative, got {parts}")
    return parts


def _stat_names(hyp: Hypothesis) -> tuple[str, ...]:
    if hyp.n_restrictions == 1:
        return ("q_ivx", "q_l", "q_m", "t_l", "t_m")
    return ("q_ivx", "q_l", "q_m")


_COLLECTABLE = ("q_ivx", "q_l", "q_m", "t_l", "t_m", "q_vee")


def _run_range(dgp, hyp, cfg, base_entropy, start, stop, level, collect, names):
    """Run replications [start, stop); returns (counts, failures, draws)."""
    counts = dict.fromkeys(names, 0)
    draws: dict[str, list[float]] = {name: [] for name in collect}
    failures = 0
    for rep in range(start, stop):
        rng = np.random.default_rng(np.random.SeedSequence(base_entropy + (rep,)))
        sample = simulate_dgp(dgp, rng)
        try:
            report = run_test(sample, hyp, cfg)
        except NumericalError:
            failures += 1
            continue
        p_values = report.p_values
        if any(not np.isfinite(p_values[name]) for name in names):
            failures += 1
            continue
        for name in names:
            if p_values[name] <= level:
                counts[name] += 1
        if collect:
            values = {
                "q_ivx": report.q_ivx,
                "q_l": report.q_l,
                "q_m": report.q_m,
                "t_l": report.t_l,
                "t_m": report.t_m,
                "q_vee": report.q_vee,
            }
            for name in collect:
                draws[name].append(values[name])
    return counts, failures, draws


def rejection_rate(
    dgp: DgpSpec,
    hyp: Hypothesis,
    cfg: IvxConfig | None = None,
    reps: int = 1000,
    level: float = 0.05,
    seed=0,
    n_jobs: int = 1,
    collect: tuple[str, ...] = (),
) -> SimulationSummary:
    """Empirical rejection rates over independent replications.

    Replications that abort on numerical degeneracy are counted and
    excluded from the denominator; more than 1% of them raises
    :class:`TooManyFailures`.  Identical results for any ``n_jobs`` —
    every replication owns an RNG stream derived from (seed, index).
    """
    if reps < 1:
        raise ValidationError(f"reps must be >= 1, got {reps}")
    if not 0.0 < level <= 1.0:
        raise ValidationError(f"level must lie in (0, 1], got {level}")
    unknown = set(collect) - set(_COLLECTABLE)
    if unknown:
        raise ValidationError(f"cannot collect {sorted(unknown)}; known: {_COLLECTABLE}")
    cfg = cfg if cfg is not None else IvxConfig()
    base = _entropy_tuple(seed)
    names = _stat_names(hyp)
    collect = tuple(collect)
    if hyp.n_restrictions != 1:
        bad_t = {"t_l", "t_m"} & set(collect)
        if bad_t:
            raise ValidationError(f"cannot collect {sorted(bad_t)} for a joint test")

    if n_jobs <= 1:
        parts = [_run_range(dgp, hyp, cfg, base, 0, reps, level, collect, names)]
    else:
        n_chunks = min(reps, int(n_jobs))
        edges = [reps * i // n_chunks for i in range(n_chunks + 1)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [
                pool.submit(
                    _run_range, dgp, hyp, cfg, base, lo, hi, level, collect, names
                )
                for lo, hi in zip(edges[:-1], edges[1:])
            ]
            parts = [f.result() for f in futures]

    counts = dict.fromkeys(names, 0)
    failures = 0
    draws: dict[str, list[float]] = {name: [] for name in collect}
    for part_counts, part_failures, part_draws in parts:
        failures += part_failures
        for name in names:
            counts[name] += part_counts[name]
        for name in collect:
            draws[name].extend(part_draws[name])

    if failures > FAILURE_BUDGET * reps:
        raise TooManyFailures(
            f"{failures} of {reps} replications aborted (budget {FAILURE_BUDGET:.0%})"
        )
    effective = reps - failures
    rates = {name: counts[name] / effective for name in names}
    ses = {
        name: float(np.sqrt(rates[name] * (1.0 - rates[name]) / effective))
        for name in names
    }
    return SimulationSummary(
        dgp=dgp,
        hypothesis=hyp,
        config=cfg,
        replications=reps,
        effective=effective,
        failures=failures,
        level=level,
        seed=seed,
        statistics=names,
        rejection_rate=rates,
        monte_carlo_se=ses,
        draws={name: np.asarray(draws[name]) for name in collect} if collect else None,
    )


def joint_beta(b: float, k: int) -> np.ndarray:
    """Coefficient vector for joint-test grids: every entry b / ((1+K)/2)."""
    return np.full(k, b / ((1.0 + k) / 2.0))


def size_power_grid(
    dgps: list[DgpSpec],
    b_grid,
    hyp: Hypothesis,
    cfg: IvxConfig | None = None,
    reps: int = 1000,
    level: float = 0.05,
    seed=0,
    n_jobs: int = 1,
    beta_rule: str = "joint",
) -> list[GridCell]:
    """Rejection rates over the cartesian product of designs and coefficient sizes.

    ``beta_rule='joint'`` maps grid value ``b`` to the vector with every
    entry ``b / ((1+K)/2)``; ``'direct'`` uses ``b`` itself for every
    entry.  Each cell gets its own integer seed derived from the master
    seed and the cell position.
    """
    if not dgps or len(list(b_grid)) == 0:
        raise ValidationError("need at least one design and one grid value")
    if beta_rule not in ("joint", "direct"):
        raise ValidationError(f"beta_rule must be 'joint' or 'direct', got {beta_rule!r}")
    base = _entropy_tuple(seed)
    cells = []
    for i, dgp in enumerate(dgps):
        for j, b in enumerate(b_grid):
            b = float(b)
            beta = joint_beta(b, dgp.k) if beta_rule == "joint" else np.full(dgp.k, b)
            cell_dgp = replace(dgp, beta=beta)
            cell_seed = int(np.random.SeedSequence(base + (i, j)).generate_state(1)[0])
            summary = rejection_rate(
                cell_dgp,
                hyp,
                cfg,
                reps=reps,
                level=level,
                seed=cell_seed,
                n_jobs=n_jobs,
            )
            cells.append(GridCell(scenario=i, b=b, summary=summary))
    return cells

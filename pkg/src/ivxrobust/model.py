"""Domain types shared by every module, plus input validation.

Alignment convention used throughout the package: row ``t`` of the
predictor matrix holds the lagged value ``x_{t-1}`` paired with the
response ``y_t``.  Data loaders perform that lag once; estimation code
never re-lags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SIDES",
    "PredictiveSample",
    "Hypothesis",
    "IvxConfig",
    "ResolvedConfig",
    "TestReport",
    "DgpSpec",
    "validate",
]

#: Admissible sidedness labels for a hypothesis; one-sided tests require a
#: single restriction (J = 1).
SIDES = ("two", "right", "left")


@dataclass
class PredictiveSample:
    """A response series and its lag-aligned predictor matrix.

    Parameters
    ----------
    y : ndarray, shape (T,)
        Response observed at times 1..T.
    x : ndarray, shape (T, K)
        Row ``t`` holds the predictor vector observed one period before
        ``y[t]``.
    labels : list of str, optional
        Predictor names for reporting; positional names are generated
        when omitted.
    """

    y: np.ndarray
    x: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x[:, None]
        if self.labels is None:
            self.labels = [f"x{i + 1}" for i in range(self.x.shape[1])]

    @property
    def nobs(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]


@dataclass
class Hypothesis:
    """Linear restriction H0: R beta = r, optionally one-sided when J = 1."""

    r_matrix: np.ndarray
    r_value: np.ndarray
    side: str = "two"

    def __post_init__(self) -> None:
        self.r_matrix = np.atleast_2d(np.asarray(self.r_matrix, dtype=float))
        self.r_value = np.asarray(self.r_value, dtype=float).reshape(-1)

    @property
    def n_restrictions(self) -> int:
        return self.r_matrix.shape[0]

    @classmethod
    def joint_zero(cls, k: int) -> "Hypothesis":
        """H0: beta = 0 (R = I_K, r = 0)."""
        return cls(np.eye(k), np.zeros(k))

    @classmethod
    def marginal(cls, index: int, k: int, side: str = "two", value: float = 0.0) -> "Hypothesis":
        """H0: beta_index = value for a single coefficient (0-based index)."""
        if not 0 <= index < k:
            raise IndexError(f"coefficient index {index} outside 0..{k - 1}")
        row = np.zeros((1, k))
        row[0, index] = 1.0
        return cls(row, np.array([value]), side=side)


@dataclass
class IvxConfig:
    """Tuning constants for the instrument recursion and sample split.

    ``c_z`` left as None resolves to the default -(4 + K) once the
    predictor count is known.  ``delta`` is the mild-persistence exponent
    in (1/2, 1); ``lam`` is the split fraction in (0, 1).
    """

    c_z: float | None = None
    delta: float = 0.95
    lam: float = 0.5

    def resolve(self, nobs: int, k: int) -> "ResolvedConfig":
        """Fill defaults and derive rho_z and the split index for a sample size."""
        c_z = float(self.c_z) if self.c_z is not None else -(4.0 + k)
        rho_z = 1.0 + c_z / nobs**self.delta
        return ResolvedConfig(
            c_z=c_z,
            delta=self.delta,
            lam=self.lam,
            rho_z=rho_z,
            t0=math.floor(self.lam * nobs),
        )


@dataclass
class ResolvedConfig:
    """IvxConfig with defaults filled and derived quantities attached."""

    c_z: float
    delta: float
    lam: float
    rho_z: float
    t0: int

    def as_dict(self) -> dict:
        return {
            "c_z": self.c_z,
            "delta": self.delta,
            "lambda": self.lam,
            "rho_z": self.rho_z,
            "t0": self.t0,
        }


@dataclass
class TestReport:
    """Everything a single hypothesis test produces.

    ``t_l`` / ``t_m`` are present only when J = 1.  ``p_values`` maps each
    statistic name to its p-value: chi-square survival for the Wald forms,
    normal survival/cdf for one-sided t forms.  ``q_vee`` is a diagnostic:
    the Wald statistic for the split-sample estimator using the
    variance-inflated covariance with unit persistence weights and no mean
    shift; by construction it never exceeds ``q_l``.
    """

    beta_ivx: np.ndarray
    beta_l: np.ndarray
    beta_m: np.ndarray
    q_ivx: float
    q_l: float
    q_m: float
    t_l: float | None
    t_m: float | None
    p_values: dict[str, float]
    headline: str
    rho_hat: np.ndarray
    w_z: np.ndarray
    rho_uv_star: np.ndarray
    q_vee: float
    config: ResolvedConfig
    nobs: int
    k: int
    labels: list[str] = field(default_factory=list)
    side: str = "two"

    def to_dict(self) -> dict:
        """Plain-python representation used for the JSON report."""
        return {
            "nobs": self.nobs,
            "k": self.k,
            "labels": list(self.labels),
            "side": self.side,
            "config": self.config.as_dict(),
            "beta_ivx": self.beta_ivx.tolist(),
            "beta_l": self.beta_l.tolist(),
            "beta_m": self.beta_m.tolist(),
            "statistics": {
                "q_ivx": self.q_ivx,
                "q_l": self.q_l,
                "q_m": self.q_m,
                **({"t_l": self.t_l, "t_m": self.t_m} if self.t_l is not None else {}),
            },
            "p_values": dict(self.p_values),
            "headline": self.headline,
            "diagnostics": {
                "rho_hat": self.rho_hat.tolist(),
                "w_z": self.w_z.tolist(),
                "rho_uv_star": self.rho_uv_star.tolist(),
                "q_vee": self.q_vee,
            },
        }


@dataclass
class DgpSpec:
    """Simulation design: persistent predictors, endogenous innovations, GARCH errors.

    Predictor ``i`` follows ``x_t = rho_i x_{t-1} + v_t`` with
    ``rho_i = 1 + c_i / T**alpha`` (alpha = 1 for near-unit-root scaling,
    alpha = 0 for fixed stationary roots) and ``v_t = gamma_i eta_t + noise``,
    so ``corr(u, v_i) = gamma_i / sqrt(1 + gamma_i**2)``.
    """

    nobs: int
    c: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    alpha: float = 1.0
    mu: float = 1.0
    phi0: float = 1.0
    phi1: float = 0.1
    phibar1: float = 0.85
    burn_in: int = 100

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)

    @property
    def k(self) -> int:
        return self.c.shape[0]

    @property
    def rho(self) -> np.ndarray:
        """Autoregressive roots implied by c, alpha and the sample size."""
        return 1.0 + self.c / self.nobs**self.alpha

    @classmethod
    def from_rho(cls, rho, nobs: int, alpha: float = 1.0, **kwargs) -> "DgpSpec":
        """Build a spec from target roots by inverting rho = 1 + c/T**alpha."""
        rho = np.asarray(rho, dtype=float).reshape(-1)
        c = (rho - 1.0) * nobs**alpha
        return cls(nobs=nobs, c=c, alpha=alpha, **kwargs)


def validate(sample: PredictiveSample, hyp: Hypothesis, cfg: IvxConfig) -> list[str]:
    """Collect every violated invariant; an empty list means the inputs are usable.

    Pure and total: never raises on finite input, just reports.  Each
    violation string starts with a stable snake_case tag so callers can
    match programmatically.
    """
    problems: list[str] = []
    y, x = sample.y, sample.x
    nobs, k = sample.nobs, sample.k

    if x.shape[0] != nobs:
        problems.append(
            f"shape_mismatch: y has {nobs} rows but x has {x.shape[0]}"
        )
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
        problems.append("missing_values: y or x contains NaN or infinite entries")
    if nobs < 2 * k + 2:
        problems.append(
            f"degrees_of_freedom: need T >= 2K+2, got T={nobs} with K={k}"
        )
    for i in range(k):
        col = x[:, i]
        if col.size and np.all(np.isfinite(col)) and np.ptp(col) == 0.0:
            problems.append(f"zero_variance: predictor column {sample.labels[i]!r} is constant")

    r_mat, r_val = hyp.r_matrix, hyp.r_value
    n_restr = hyp.n_restrictions
    if r_mat.shape[1] != k:
        problems.append(
            f"shape_mismatch: restriction matrix has {r_mat.shape[1]} columns, expected {k}"
        )
    if r_val.shape[0] != n_restr:
        problems.append(
            f"shape_mismatch: r has length {r_val.shape[0]}, expected {n_restr}"
        )
    if not np.all(np.isfinite(r_mat)) or not np.all(np.isfinite(r_val)):
        problems.append("missing_values: restriction matrix or r contains non-finite entries")
    elif n_restr > k:
        problems.append(f"rank_deficient: J={n_restr} restrictions exceed K={k}")
    elif np.linalg.matrix_rank(r_mat) < n_restr:
        problems.append(
            f"rank_deficient: restriction matrix has rank {np.linalg.matrix_rank(r_mat)} < J={n_restr}"
        )
    if hyp.side not in SIDES:
        problems.append(f"side_invalid: {hyp.side!r} not in {SIDES}")
    elif hyp.side != "two" and n_restr != 1:
        problems.append("side_requires_single_restriction: one-sided tests need J=1")

    if cfg.c_z is not None and not cfg.c_z < 0:
        problems.append(f"config: c_z must be negative, got {cfg.c_z}")
    if not 0.5 < cfg.delta < 1.0:
        problems.append(f"config: delta must lie in (0.5, 1), got {cfg.delta}")
    if not 0.0 < cfg.lam < 1.0:
        problems.append(f"config: lambda must lie in (0, 1), got {cfg.lam}")
    else:
        resolved = cfg.resolve(max(nobs, 1), k)
        if nobs and not 0.0 < resolved.rho_z < 1.0:
            problems.append(
                f"config: rho_z = {resolved.rho_z:.6f} outside (0, 1) for T={nobs}"
            )
        if nobs and not 1 < resolved.t0 < nobs:
            problems.append(
                f"config: split index T0={resolved.t0} must satisfy 1 < T0 < T={nobs}"
            )
    return problems

"""Least-squares building blocks feeding the correction formulas.

Contains plain OLS with intercept, equality-constrained OLS (the
Lagrange-multiplier residuals used by every variance estimator), per-series
AR(1) persistence estimation, and the innovation covariance pieces that
combine into the standardized endogeneity correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResiduals, InfeasibleRank, Singular, ZeroVariance
from .linalg import sym_inv_sqrt
from .model import Hypothesis, PredictiveSample

__all__ = [
    "OlsFit",
    "InnovCov",
    "ols_fit",
    "constrained_ols",
    "ar1_rho",
    "innovation_cov",
    "rho_uv_star",
]


@dataclass
class OlsFit:
    """Intercept, slope vector, and residuals of a least-squares fit."""

    mu_hat: float
    beta_hat: np.ndarray
    residuals: np.ndarray

    @property
    def ssr(self) -> float:
        return float(self.residuals @ self.residuals)


@dataclass
class InnovCov:
    """Second moments of the innovation pairs (v_hat_t, u_hat_t).

    Moments are uncentered sums over the common index set where both
    residual series exist, divided by the number of summands.
    """

    sigma_uu: float
    sigma_vu: np.ndarray
    sigma_vv: np.ndarray
    nobs_used: int


def _design(y, x):
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.shape[0]:
        raise Singular(f"design has {x.shape[0]} rows but y has {y.shape[0]}")
    design = np.column_stack([np.ones(y.shape[0]), x])
    return y, x, design


def ols_fit(y, x) -> OlsFit:
    """Least squares of y on an intercept and the columns of x.

    Raises
    ------
    Singular
        If the design (with the constant) is rank-deficient.
    """
    y, x, design = _design(y, x)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise Singular(
            f"design with intercept has rank {rank} < {design.shape[1]}"
        )
    residuals = y - design @ coef
    return OlsFit(mu_hat=float(coef[0]), beta_hat=coef[1:], residuals=residuals)


def constrained_ols(y, x, hyp: Hypothesis) -> OlsFit:
    """Least squares of y on (1, x) subject to R beta = r.

    The intercept is unrestricted.  Solved by projecting the unconstrained
    coefficient onto the constraint set in the metric of the normal
    equations:

        theta_c = theta - G^{-1} Rt' (Rt G^{-1} Rt')^{-1} (Rt theta - r)

    with G the Gram of the design and Rt = [0 | R].  The residuals are the
    ones every downstream variance estimator consumes.

    Raises
    ------
    InfeasibleRank
        If R has rank below its row count.
    Singular
        If the Gram matrix or the constraint metric cannot be inverted.
    """
    y, x, design = _design(y, x)
    r_mat = hyp.r_matrix
    r_val = hyp.r_value
    n_restr = hyp.n_restrictions
    if r_mat.shape[1] != x.shape[1]:
        raise InfeasibleRank(
            f"restriction matrix has {r_mat.shape[1]} columns for {x.shape[1]} predictors"
        )
    if np.linalg.matrix_rank(r_mat) < n_restr:
        raise InfeasibleRank(f"restriction matrix rank below J={n_restr}")

    gram = design.T @ design
    rhs = design.T @ y
    r_aug = np.column_stack([np.zeros(n_restr), r_mat])
    try:
        theta = np.linalg.solve(gram, rhs)
        gain = np.linalg.solve(gram, r_aug.T)  # G^{-1} Rt'
        metric = r_aug @ gain  # Rt G^{-1} Rt'
        adjust = np.linalg.solve(metric, r_aug @ theta - r_val)
    except np.linalg.LinAlgError as exc:
        raise Singular(f"constrained least squares: {exc}") from exc
    theta_c = theta - gain @ adjust
    residuals = y - design @ theta_c
    return OlsFit(mu_hat=float(theta_c[0]), beta_hat=theta_c[1:], residuals=residuals)


def ar1_rho(x_col) -> float:
    """OLS slope of x_t on (intercept, x_{t-1}) for one predictor series.

    Raises
    ------
    ZeroVariance
        If the series is shorter than 3 or its lagged values are constant.
    """
    x_col = np.asarray(x_col, dtype=float).reshape(-1)
    if x_col.shape[0] < 3:
        raise ZeroVariance(f"series of length {x_col.shape[0]} too short for AR(1)")
    lag, lead = x_col[:-1], x_col[1:]
    lag_dev = lag - lag.mean()
    denom = float(lag_dev @ lag_dev)
    if denom == 0.0:
        raise ZeroVariance("lagged series is constant")
    return float(lag_dev @ lead) / denom


def innovation_cov(sample: PredictiveSample, u_hat, rho_hat) -> InnovCov:
    """Second moments of the AR(1) innovations against the regression residuals.

    For predictor i the innovation is ``v_{i,t} = x_{i,t} - a_i - rho_i x_{i,t-1}``
    with the intercept recovered from the OLS identity
    ``a_i = mean(x_t) - rho_i mean(x_{t-1})``.  ``v`` exists for
    t = 1..T-1 only, so all three moments are taken over that common
    window, pairing ``v_t`` with ``u_hat_t``.

    Raises
    ------
    DegenerateResiduals
        If the aligned residuals are identically zero.
    """
    x = sample.x
    u_hat = np.asarray(u_hat, dtype=float).reshape(-1)
    rho_hat = np.asarray(rho_hat, dtype=float).reshape(-1)
    lag, lead = x[:-1, :], x[1:, :]
    intercepts = lead.mean(axis=0) - rho_hat * lag.mean(axis=0)
    v_hat = lead - intercepts - lag * rho_hat
    u_aligned = u_hat[: v_hat.shape[0]]
    n_used = v_hat.shape[0]

    sigma_uu = float(u_aligned @ u_aligned) / n_used
    if sigma_uu == 0.0:
        raise DegenerateResiduals("residuals are identically zero on the aligned window")
    sigma_vu = (v_hat.T @ u_aligned) / n_used
    sigma_vv = (v_hat.T @ v_hat) / n_used
    sigma_vv = 0.5 * (sigma_vv + sigma_vv.T)
    return InnovCov(
        sigma_uu=sigma_uu, sigma_vu=sigma_vu, sigma_vv=sigma_vv, nobs_used=n_used
    )


def rho_uv_star(cov: InnovCov) -> np.ndarray:
    """Standardized innovation-residual correlation vector.

    Returns ``sigma_vv^{-1/2} sigma_vu / sqrt(sigma_uu)``; for K = 1 this is
    the uncentered sample correlation of (u_hat, v_hat), so its norm never
    exceeds one.

    Raises
    ------
    DegenerateResiduals
        If ``sigma_uu`` is not positive.
    Singular
        If ``sigma_vv`` is not safely positive definite.
    """
    if not cov.sigma_uu > 0.0:
        raise DegenerateResiduals("sigma_uu must be positive")
    return sym_inv_sqrt(cov.sigma_vv) @ cov.sigma_vu / np.sqrt(cov.sigma_uu)

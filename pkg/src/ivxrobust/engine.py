"""Instrumented inference for predictive regressions with persistent predictors.

The pipeline: filter predictor differences into a mildly persistent
instrument, split the sample and recenter the instrument so it sums to
zero exactly (removing the deformation term that distorts finite-sample
size), estimate the slope by instrumental variables, then correct the
remaining finite-sample displacement of the estimate (an additive shift
proportional to the innovation-residual correlation) and the variance
enlargement (an inflated covariance estimate).  Four statistics come out:
the baseline Wald form ``q_ivx``, the split-sample form ``q_l``, the fully
corrected form ``q_m``, and t-versions of the latter two when a single
restriction is tested.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
from scipy import signal, stats
from scipy.linalg import solve_triangular

from .errors import IvxError, NumericalError, Singular, ValidationError
from .estimators import (
    InnovCov,
    ar1_rho,
    constrained_ols,
    innovation_cov,
    rho_uv_star,
)
from .linalg import sym_inv_sqrt, sym_sqrt
from .model import (
    Hypothesis,
    IvxConfig,
    PredictiveSample,
    ResolvedConfig,
    TestReport,
    validate,
)

__all__ = [
    "Instruments",
    "CorrectionBundle",
    "build_instrument",
    "split_weights",
    "modified_instrument",
    "beta_l",
    "beta_l_via_subsamples",
    "baseline_ivx",
    "correction_bundle",
    "beta_m",
    "wald_and_t",
    "run_test",
]


@contextmanager
def _stage(name: str):
    """Tag errors with the pipeline stage that raised them."""
    try:
        yield
    except IvxError as err:
        if err.stage is None:
            err.stage = name
            err.args = (f"{name}: {err.args[0] if err.args else ''}",)
        raise


def _solve(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise Singular(f"{what} is singular: {exc}") from exc


@dataclass
class Instruments:
    """Raw and recentered instruments plus the split weights that link them.

    Row ``t`` of ``z`` / ``z_tilde`` holds the instrument aligned with
    ``y_t`` (one lag behind, like the predictor rows).  Columns of
    ``z_tilde`` sum to zero by construction.
    """

    z: np.ndarray
    z_tilde: np.ndarray
    s_a: np.ndarray
    s_b: np.ndarray
    t0: int


@dataclass
class CorrectionBundle:
    """Every correction ingredient derived from one sample.

    ``w_z`` stores the diagonal of the persistence weight matrix
    (entries in (0, 1]; near one for near-unit-root predictors, near zero
    for clearly stationary ones).  ``core`` is
    ``I + W_z varpi varpi' W_z``, the variance-inflation factor.
    """

    sigma_zz_hat: np.ndarray
    varpi_l: np.ndarray
    w_z: np.ndarray
    rho_uv_star: np.ndarray
    h_l: np.ndarray
    b_m: np.ndarray
    a_matrix: np.ndarray
    meat: np.ndarray
    core: np.ndarray


def build_instrument(x, cfg: IvxConfig | ResolvedConfig | None = None) -> np.ndarray:
    """Filter predictor differences into a mildly persistent instrument.

    ``z_0 = 0`` and ``z_t = rho_z z_{t-1} + (x_t - x_{t-1})``; the output
    row ``t`` holds ``z_{t-1}``, matching the predictor alignment.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    nobs, k = x.shape
    cfg = cfg or IvxConfig()
    resolved = cfg.resolve(nobs, k) if isinstance(cfg, IvxConfig) else cfg
    dx = np.diff(x, axis=0, prepend=x[:1])
    return signal.lfilter([1.0], [1.0, -resolved.rho_z], dx, axis=0)


def split_weights(z, t0: int) -> tuple[np.ndarray, np.ndarray]:
    """Rank-one recentering weights for the two sample blocks.

    ``S_a = m m_a' / (m_a' m_a)`` with ``m`` the full-sample mean of the
    instrument rows and ``m_a`` the first-block mean; ``S_b`` uses the
    second block.  These satisfy ``S_a m_a = m``, which is what makes the
    recentered instrument sum to zero.

    Raises
    ------
    Singular
        If a block mean is the zero vector (e.g. constant predictors).
    """
    z = np.asarray(z, dtype=float)
    if not 1 < t0 < z.shape[0]:
        raise Singular(f"split index {t0} must satisfy 1 < T0 < T={z.shape[0]}")
    m_full = z.mean(axis=0)
    s_parts = []
    for name, block in (("first", z[:t0]), ("second", z[t0:])):
        m_block = block.mean(axis=0)
        denom = float(m_block @ m_block)
        if denom == 0.0:
            raise Singular(f"{name}-block instrument mean is the zero vector")
        s_parts.append(np.outer(m_full, m_block) / denom)
    return s_parts[0], s_parts[1]


def modified_instrument(z, s_a, s_b, t0: int) -> np.ndarray:
    """Recenter the instrument blockwise so every column sums to zero.

    Applies ``I - S_a`` to the first block and ``I - S_b`` to the second;
    the zero column sums are exact algebra and are asserted here.
    """
    z = np.asarray(z, dtype=float)
    eye = np.eye(z.shape[1])
    z_tilde = np.empty_like(z)
    z_tilde[:t0] = z[:t0] @ (eye - s_a).T
    z_tilde[t0:] = z[t0:] @ (eye - s_b).T
    scale = float(np.abs(z).max()) if z.size else 0.0
    tol = 1e-8 * z.shape[0] * max(scale, 1e-300)
    worst = float(np.abs(z_tilde.sum(axis=0)).max())
    if worst > tol:
        raise NumericalError(
            f"recentered instrument columns sum to {worst:.3e}, beyond {tol:.3e}"
        )
    return z_tilde


def beta_l(y, x, z_tilde) -> np.ndarray:
    """Direct IV estimate from the recentered instrument.

    ``(sum z~ x')^{-1} sum z~ y``; no demeaning of y or x is needed because
    the instrument columns sum to zero, which also absorbs the intercept.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    z_tilde = np.asarray(z_tilde, dtype=float)
    return _solve(z_tilde.T @ x, z_tilde.T @ y, "instrument-predictor cross-product")


def beta_l_via_subsamples(y, x, z, t0: int) -> np.ndarray:
    """Weighted-combination route to the same estimate as :func:`beta_l`.

    Combines the full-sample IV estimate with the two block estimates:
    ``(W1 - W2 - W3)^{-1} (W1 b_full - W2 b_a - W3 b_b)`` where each ``W``
    is a demeaned instrument-predictor cross-product and each ``b`` the
    corresponding IV estimate.  Kept as an independent code path for
    cross-checking the direct solve.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    s_a, s_b = split_weights(z, t0)

    z_bar = z - z.mean(axis=0)
    z_a = z[:t0] - z[:t0].mean(axis=0)
    z_b = z[t0:] - z[t0:].mean(axis=0)

    w1 = z_bar.T @ x
    w2 = s_a @ (z_a.T @ x[:t0])
    w3 = s_b @ (z_b.T @ x[t0:])

    b_full = _solve(w1, z_bar.T @ y, "full-sample IV Gram")
    b_a = _solve(z_a.T @ x[:t0], z_a.T @ y[:t0], "first-block IV Gram")
    b_b = _solve(z_b.T @ x[t0:], z_b.T @ y[t0:], "second-block IV Gram")
    return _solve(
        w1 - w2 - w3,
        w1 @ b_full - w2 @ b_a - w3 @ b_b,
        "combined IV Gram",
    )


def _ivx_estimate(y, x, z):
    """Demeaned-instrument IV estimate and the pieces its covariance needs."""
    z_bar = z - z.mean(axis=0)
    a_matrix = z_bar.T @ x
    beta = _solve(a_matrix, z_bar.T @ y, "demeaned-instrument Gram")
    return beta, z_bar, a_matrix


def baseline_ivx(y, x, z, hyp: Hypothesis, u_hat) -> tuple[np.ndarray, float]:
    """Uncorrected IV Wald test from the demeaned instrument.

    Covariance is the usual sandwich
    ``A^{-1} (sum zbar zbar' u^2) A^{-T}`` with ``A = sum zbar x'`` and the
    supplied residuals.  Returned for comparison with the corrected
    statistics; it over-rejects with persistent predictors.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float).reshape(-1)
    beta, z_bar, a_matrix = _ivx_estimate(y, x, z)
    meat = (z_bar * (u_hat**2)[:, None]).T @ z_bar
    half = _solve(a_matrix, 0.5 * (meat + meat.T), "demeaned-instrument Gram")
    cov = _solve(a_matrix, half.T, "demeaned-instrument Gram").T
    q, _ = wald_and_t(beta, 0.5 * (cov + cov.T), hyp)
    return beta, q


def correction_bundle(
    sample: PredictiveSample,
    instruments: Instruments,
    u_hat,
    rho_hat,
    cov: InnovCov,
    cfg: IvxConfig | ResolvedConfig,
) -> CorrectionBundle:
    """Assemble every finite-sample correction ingredient.

    Computes the instrument-variance proxy ``sigma_zz_hat`` (block sums of
    squared predictor differences scaled by the residual variance and
    ``1 - rho_z**2``, sandwiched between the recentering weights), the
    fluctuation matrix ``varpi_l`` of the whitened weighted instrument
    Gram around the identity, the persistence weights
    ``w_i = exp[-T (1 - rho_i)^2 / K]``, and the two covariance factors:

    - ``h_l``: root of the degrees-of-freedom-scaled weighted Gram,
      premultiplied by the inverse cross-product;
    - ``b_m``: same without the degrees-of-freedom factor, times the root
      of the variance-inflation core ``I + W varpi varpi' W``.
    """
    x = sample.x
    nobs, k = sample.nobs, sample.k
    resolved = cfg.resolve(nobs, k) if isinstance(cfg, IvxConfig) else cfg
    t0 = instruments.t0
    z_tilde = instruments.z_tilde
    u_hat = np.asarray(u_hat, dtype=float).reshape(-1)
    rho_hat = np.asarray(rho_hat, dtype=float).reshape(-1)
    eye = np.eye(k)

    a_matrix = z_tilde.T @ x
    meat = (z_tilde * (u_hat**2)[:, None]).T @ z_tilde
    meat = 0.5 * (meat + meat.T)

    dx = np.diff(x, axis=0, prepend=x[:1])
    p_a = eye - instruments.s_a
    p_b = eye - instruments.s_b
    gram_a = dx[:t0].T @ dx[:t0]
    gram_b = dx[t0:].T @ dx[t0:]
    denom = 1.0 - resolved.rho_z**2
    # The residual-variance factor keeps the whitened Gram centered on the
    # identity under any error scale, so varpi_l measures fluctuation only.
    sigma_zz = cov.sigma_uu * (p_a @ gram_a @ p_a.T + p_b @ gram_b @ p_b.T) / denom
    sigma_zz = 0.5 * (sigma_zz + sigma_zz.T)

    inv_root = sym_inv_sqrt(sigma_zz)
    whitened = inv_root @ meat @ inv_root
    varpi = -0.5 * (0.5 * (whitened + whitened.T) - eye)
    varpi = 0.5 * (varpi + varpi.T)

    w_z = np.exp(-nobs * (1.0 - rho_hat) ** 2 / k)
    weighted = varpi * w_z[:, None]  # W varpi
    core = eye + weighted @ weighted.T
    core = 0.5 * (core + core.T)

    dof = nobs / (nobs - 2 * k - 1)
    h_l = _solve(a_matrix, sym_sqrt(dof * meat), "instrument-predictor cross-product")
    b_m = _solve(a_matrix, sym_sqrt(meat), "instrument-predictor cross-product") @ sym_sqrt(core)

    return CorrectionBundle(
        sigma_zz_hat=sigma_zz,
        varpi_l=varpi,
        w_z=w_z,
        rho_uv_star=rho_uv_star(cov),
        h_l=h_l,
        b_m=b_m,
        a_matrix=a_matrix,
        meat=meat,
        core=core,
    )


def beta_m(
    beta_l_hat,
    bundle: CorrectionBundle,
    cfg: IvxConfig | ResolvedConfig,
    nobs: int,
    k: int,
) -> np.ndarray:
    """Shift the IV estimate against its finite-sample displacement.

    ``beta_l + B_m W_z T^{-(1-delta)/2} ((K+1)/2) rho_uv_star / sqrt(-2 c_z)``;
    the shift vanishes as the persistence weights go to zero or the
    innovation-residual correlation is zero.
    """
    resolved = cfg.resolve(nobs, k) if isinstance(cfg, IvxConfig) else cfg
    shift = (
        nobs ** (-(1.0 - resolved.delta) / 2.0)
        * (k + 1.0)
        / 2.0
        * bundle.rho_uv_star
        / np.sqrt(-2.0 * resolved.c_z)
    )
    return np.asarray(beta_l_hat, dtype=float) + bundle.b_m @ (bundle.w_z * shift)


def wald_and_t(beta, avar, hyp: Hypothesis) -> tuple[float, float | None]:
    """Wald statistic for R beta = r, plus the t-form when J = 1.

    The quadratic form is evaluated through a Cholesky factor of
    ``R avar R'``, which also enforces positive definiteness.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    avar = np.asarray(avar, dtype=float)
    gap = hyp.r_matrix @ beta - hyp.r_value
    spread = hyp.r_matrix @ avar @ hyp.r_matrix.T
    spread = 0.5 * (spread + spread.T)
    try:
        chol = np.linalg.cholesky(spread)
    except np.linalg.LinAlgError as exc:
        raise Singular(f"restricted covariance not positive definite: {exc}") from exc
    white = solve_triangular(chol, gap, lower=True)
    q = float(white @ white)
    t = float(gap[0] / np.sqrt(spread[0, 0])) if hyp.n_restrictions == 1 else None
    return q, t


def _p_values(q_stats: dict[str, float], t_stats: dict[str, float], side: str, n_restr: int) -> dict[str, float]:
    p_values = {name: float(stats.chi2.sf(q, n_restr)) for name, q in q_stats.items()}
    for name, t in t_stats.items():
        if side == "right":
            p_values[name] = float(stats.norm.sf(t))
        elif side == "left":
            p_values[name] = float(stats.norm.cdf(t))
        else:
            p_values[name] = float(2.0 * stats.norm.sf(abs(t)))
    return p_values


def run_test(
    sample: PredictiveSample,
    hyp: Hypothesis,
    cfg: IvxConfig | None = None,
) -> TestReport:
    """Run the full corrected-inference pipeline on one sample.

    Orchestrates: constrained least squares for the null-imposed
    residuals; instrument construction, splitting, and recentering; the
    direct IV estimate; per-predictor persistence estimates; innovation
    covariances; the correction bundle; the shifted estimate; and the
    Wald/t statistics with p-values.  Errors raised by any stage carry the
    stage name.

    When the fit under the null is numerically perfect (noiseless data),
    every variance estimate vanishes with the residuals and all statistics
    are reported at their zero limit with p-values of one.
    """
    cfg = cfg if cfg is not None else IvxConfig()
    problems = validate(sample, hyp, cfg)
    if problems:
        raise ValidationError("; ".join(problems))

    y, x = sample.y, sample.x
    nobs, k = sample.nobs, sample.k
    resolved = cfg.resolve(nobs, k)
    n_restr = hyp.n_restrictions

    with _stage("constrained_ols"):
        fit = constrained_ols(y, x, hyp)
    u_hat = fit.residuals

    with _stage("build_instrument"):
        z = build_instrument(x, resolved)
    with _stage("split_weights"):
        s_a, s_b = split_weights(z, resolved.t0)
    with _stage("modified_instrument"):
        z_tilde = modified_instrument(z, s_a, s_b, resolved.t0)
    instruments = Instruments(z=z, z_tilde=z_tilde, s_a=s_a, s_b=s_b, t0=resolved.t0)

    with _stage("beta_l"):
        beta_l_hat = beta_l(y, x, z_tilde)
    with _stage("ar1_rho"):
        rho_hat = np.array([ar1_rho(x[:, i]) for i in range(k)])
    w_z = np.exp(-nobs * (1.0 - rho_hat) ** 2 / k)

    ssr_floor = nobs * (1e-12 * max(1.0, float(np.abs(y).max()))) ** 2
    if fit.ssr <= ssr_floor:
        with _stage("baseline_ivx"):
            beta_ivx_hat, _, _ = _ivx_estimate(y, x, z)
        zeros_q = {"q_ivx": 0.0, "q_l": 0.0, "q_m": 0.0}
        t_l = t_m = 0.0 if n_restr == 1 else None
        t_stats = {"t_l": 0.0, "t_m": 0.0} if n_restr == 1 else {}
        p_values = _p_values(zeros_q, t_stats, hyp.side, n_restr)
        return TestReport(
            beta_ivx=beta_ivx_hat,
            beta_l=beta_l_hat,
            beta_m=beta_l_hat.copy(),
            q_ivx=0.0,
            q_l=0.0,
            q_m=0.0,
            t_l=t_l,
            t_m=t_m,
            p_values=p_values,
            headline="t_m" if (n_restr == 1 and hyp.side != "two") else "q_m",
            rho_hat=rho_hat,
            w_z=w_z,
            rho_uv_star=np.zeros(k),
            q_vee=0.0,
            config=resolved,
            nobs=nobs,
            k=k,
            labels=list(sample.labels),
            side=hyp.side,
        )

    with _stage("innovation_cov"):
        cov = innovation_cov(sample, u_hat, rho_hat)
    with _stage("correction_bundle"):
        bundle = correction_bundle(sample, instruments, u_hat, rho_hat, cov, resolved)
    with _stage("beta_m"):
        beta_m_hat = beta_m(beta_l_hat, bundle, resolved, nobs, k)

    eye = np.eye(k)
    with _stage("wald"):
        avar_l = bundle.h_l @ bundle.h_l.T
        q_l, t_l = wald_and_t(beta_l_hat, 0.5 * (avar_l + avar_l.T), hyp)
        avar_m = bundle.h_l @ bundle.core @ bundle.h_l.T
        q_m, t_m = wald_and_t(beta_m_hat, 0.5 * (avar_m + avar_m.T), hyp)
        # Diagnostic: variance inflation alone (unit weights, no shift);
        # never exceeds q_l because the inflated covariance dominates.
        core_vee = eye + bundle.varpi_l @ bundle.varpi_l.T
        avar_vee = bundle.h_l @ core_vee @ bundle.h_l.T
        q_vee, _ = wald_and_t(beta_l_hat, 0.5 * (avar_vee + avar_vee.T), hyp)
    with _stage("baseline_ivx"):
        beta_ivx_hat, q_ivx = baseline_ivx(y, x, z, hyp, u_hat)

    q_stats = {"q_ivx": q_ivx, "q_l": q_l, "q_m": q_m}
    t_stats = {"t_l": t_l, "t_m": t_m} if n_restr == 1 else {}
    p_values = _p_values(q_stats, t_stats, hyp.side, n_restr)

    return TestReport(
        beta_ivx=beta_ivx_hat,
        beta_l=beta_l_hat,
        beta_m=beta_m_hat,
        q_ivx=q_ivx,
        q_l=q_l,
        q_m=q_m,
        t_l=t_l,
        t_m=t_m,
        p_values=p_values,
        headline="t_m" if (n_restr == 1 and hyp.side != "two") else "q_m",
        rho_hat=rho_hat,
        w_z=bundle.w_z,
        rho_uv_star=bundle.rho_uv_star,
        q_vee=q_vee,
        config=resolved,
        nobs=nobs,
        k=k,
        labels=list(sample.labels),
        side=hyp.side,
    )

import numpy as np
import pytest

from ivxrobust import (
    DegenerateResiduals,
    Hypothesis,
    InfeasibleRank,
    PredictiveSample,
    Singular,
    ZeroVariance,
    ar1_rho,
    constrained_ols,
    innovation_cov,
    ols_fit,
    rho_uv_star,
)


def kkt_oracle(y, x, r_matrix, r_value):
    """Constrained least squares via the bordered KKT system (independent route)."""
    t = len(y)
    design = np.column_stack([np.ones(t), x])
    j, k = r_matrix.shape
    r_aug = np.column_stack([np.zeros((j, 1)), r_matrix])
    top = np.column_stack([design.T @ design, r_aug.T])
    bottom = np.column_stack([r_aug, np.zeros((j, j))])
    rhs = np.concatenate([design.T @ y, r_value])
    solution = np.linalg.solve(np.vstack([top, bottom]), rhs)
    theta = solution[: k + 1]
    return theta[0], theta[1:]


def test_ols_matches_normal_equations():
    rng = np.random.default_rng(3)
    for trial in range(25):
        t, k = int(rng.integers(20, 80)), int(rng.integers(1, 5))
        x = rng.standard_normal((t, k))
        y = rng.standard_normal(t)
        fit = ols_fit(y, x)
        design = np.column_stack([np.ones(t), x])
        theta = np.linalg.solve(design.T @ design, design.T @ y)
        np.testing.assert_allclose(fit.mu_hat, theta[0], rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(fit.beta_hat, theta[1:], rtol=1e-9, atol=1e-11)
        # residuals orthogonal to the design
        np.testing.assert_allclose(design.T @ fit.residuals, 0.0, atol=1e-8)


def test_ols_rejects_collinear():
    x = np.ones((30, 2))
    x[:, 0] = np.arange(30.0)
    x[:, 1] = 2.0 * np.arange(30.0)
    with pytest.raises(Singular):
        ols_fit(np.random.default_rng(0).standard_normal(30), x)


def test_constrained_ols_hand_case():
    # slope forced to zero: intercept becomes the sample mean
    y = np.array([1.0, 2.0, 3.0, 4.0])
    x = np.arange(4.0).reshape(-1, 1)
    fit = constrained_ols(y, x, Hypothesis.joint_zero(1))
    np.testing.assert_allclose(fit.mu_hat, 2.5)
    np.testing.assert_allclose(fit.beta_hat, [0.0], atol=1e-14)
    np.testing.assert_allclose(fit.residuals, y - 2.5)
    np.testing.assert_allclose(fit.ssr, 5.0)


def test_constrained_ols_matches_kkt_oracle():
    rng = np.random.default_rng(4)
    for trial in range(40):
        t, k = int(rng.integers(25, 90)), int(rng.integers(1, 6))
        j = int(rng.integers(1, k + 1))
        x = rng.standard_normal((t, k))
        y = rng.standard_normal(t)
        r_matrix = rng.standard_normal((j, k))
        r_value = rng.standard_normal(j)
        hyp = Hypothesis(r_matrix, r_value)
        fit = constrained_ols(y, x, hyp)
        mu0, beta0 = kkt_oracle(y, x, hyp.r_matrix, hyp.r_value)
        np.testing.assert_allclose(fit.mu_hat, mu0, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(fit.beta_hat, beta0, rtol=1e-8, atol=1e-10)
        # restriction holds to near machine precision
        gap = hyp.r_matrix @ fit.beta_hat - hyp.r_value
        assert np.abs(gap).max() < 1e-10 * (1.0 + np.abs(hyp.r_value).max())
        # never beats the unconstrained fit
        assert fit.ssr >= ols_fit(y, x).ssr - 1e-9


def test_constrained_equals_unconstrained_when_inactive():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((60, 3))
    y = rng.standard_normal(60)
    free = ols_fit(y, x)
    hyp = Hypothesis.marginal(1, 3, value=float(free.beta_hat[1]))
    tied = constrained_ols(y, x, hyp)
    np.testing.assert_allclose(tied.beta_hat, free.beta_hat, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(tied.ssr, free.ssr, rtol=1e-12)


def test_constrained_ols_shape_errors():
    y = np.zeros(10)
    x = np.ones((10, 2)) * np.arange(10).reshape(-1, 1)
    with pytest.raises(InfeasibleRank):
        constrained_ols(y, x, Hypothesis(np.eye(3), np.zeros(3)))
    with pytest.raises(InfeasibleRank):
        constrained_ols(y, x, Hypothesis(np.array([[1.0, 0.0], [2.0, 0.0]]),
                                         np.zeros(2)))


def test_ar1_exact_on_noiseless_recursion():
    rho = 0.8
    x = rho ** np.arange(40.0)
    np.testing.assert_allclose(ar1_rho(x), rho, atol=1e-12)


def test_ar1_recovers_root_in_large_sample():
    rng = np.random.default_rng(6)
    x = np.zeros(20000)
    for t in range(1, len(x)):
        x[t] = 0.3 + 0.9 * x[t - 1] + rng.standard_normal()
    assert abs(ar1_rho(x) - 0.9) < 0.02


def test_ar1_degenerate_inputs():
    with pytest.raises(ZeroVariance):
        ar1_rho(np.full(50, 3.0))
    with pytest.raises(ZeroVariance):
        ar1_rho(np.array([1.0, 2.0]))


def test_innovation_cov_definition():
    rng = np.random.default_rng(7)
    t, k = 60, 2
    sample = PredictiveSample(y=rng.standard_normal(t),
                              x=rng.standard_normal((t, k)))
    u_hat = rng.standard_normal(t)
    rho_hat = np.array([0.5, -0.2])
    cov = innovation_cov(sample, u_hat, rho_hat)

    lead, lag = sample.x[1:], sample.x[:-1]
    intercepts = lead.mean(axis=0) - rho_hat * lag.mean(axis=0)
    v_hat = lead - intercepts - lag * rho_hat
    u_win = u_hat[: t - 1]
    n = t - 1
    np.testing.assert_allclose(cov.sigma_uu, u_win @ u_win / n)
    np.testing.assert_allclose(cov.sigma_vu, v_hat.T @ u_win / n)
    np.testing.assert_allclose(cov.sigma_vv, v_hat.T @ v_hat / n)
    assert cov.nobs_used == n


def test_innovation_cov_rejects_zero_residuals():
    sample = PredictiveSample(y=np.zeros(30),
                              x=np.random.default_rng(8).standard_normal((30, 1)))
    with pytest.raises(DegenerateResiduals):
        innovation_cov(sample, np.zeros(30), np.array([0.0]))


def test_rho_uv_star_perfect_correlation():
    # u equal to the predictor innovation itself: correlation near one
    rng = np.random.default_rng(9)
    x = np.concatenate([[0.0], np.cumsum(rng.standard_normal(98))])
    v = np.diff(x)  # innovations of the unit-root recursion
    sample = PredictiveSample(y=np.zeros(len(x)), x=x)
    cov = innovation_cov(sample, np.append(v, 0.0), np.array([1.0]))
    r = rho_uv_star(cov)
    assert abs(np.linalg.norm(r) - 1.0) < 0.05


def test_rho_uv_star_bounded_by_one():
    rng = np.random.default_rng(10)
    for trial in range(50):
        t, k = int(rng.integers(30, 120)), int(rng.integers(1, 5))
        sample = PredictiveSample(y=rng.standard_normal(t),
                                  x=rng.standard_normal((t, k)))
        u_hat = rng.standard_normal(t)
        rho_hat = rng.uniform(-0.9, 1.0, k)
        r = rho_uv_star(innovation_cov(sample, u_hat, rho_hat))
        assert np.linalg.norm(r) <= 1.0 + 1e-10

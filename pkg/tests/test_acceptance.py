"""Package acceptance checks: one test per shipping criterion.

Each test pins a user-visible guarantee — exact algebra, estimator
equivalence, simulated size/power, numerical kernels, and the empirical
pipeline — at its stated tolerance and time budget.  Simulation designs
are written out as plain constants; seeds are frozen so every run checks
the same numbers.
"""

import json
import os
import time

import numpy as np
import pytest
from scipy import stats

from ivxrobust import (
    DgpSpec,
    Hypothesis,
    beta_l,
    beta_l_via_subsamples,
    build_instrument,
    constrained_ols,
    modified_instrument,
    ols_fit,
    rejection_rate,
    simulate_dgp,
    size_power_grid,
    split_weights,
    sym_inv_sqrt,
    sym_sqrt,
)
from ivxrobust.cli import main as cli_main

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"

N_JOBS = max(1, min(4, os.cpu_count() or 1))

# Five persistent predictors with strongly endogenous innovations; errors
# follow the default GARCH(1,1) with unconditional variance 20.
PERSISTENT_RHO = np.array([0.996, 0.993, 1.0, 0.987, 0.967])
PERSISTENT_GAMMA = np.array([-3.0, 2.0, 1.0, 3.0, 1.0])


def persistent_dgp(k: int, nobs: int) -> DgpSpec:
    return DgpSpec.from_rho(
        PERSISTENT_RHO[:k], nobs=nobs, gamma=PERSISTENT_GAMMA[:k], beta=np.zeros(k)
    )


@pytest.fixture(scope="module")
def size_run_k5():
    """Shared 2000-replication size run on the five-predictor design."""
    start = time.perf_counter()
    summary = rejection_rate(
        persistent_dgp(5, 250),
        Hypothesis.joint_zero(5),
        reps=2000,
        seed=14,
        n_jobs=N_JOBS,
        collect=("q_l", "q_vee"),
    )
    return summary, time.perf_counter() - start


def test_criterion_01_recentered_instrument_sums_to_zero():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(200):
        k = int(rng.integers(1, 11))
        nobs = int(rng.integers(50, 401))
        scale = 10.0 ** rng.uniform(-2, 2)
        x = scale * np.cumsum(rng.standard_normal((nobs, k)), axis=0)
        z = build_instrument(x)
        t0 = nobs // 2
        z_tilde = modified_instrument(z, *split_weights(z, t0), t0)
        worst = float(np.abs(z_tilde.sum(axis=0)).max())
        assert worst <= 1e-8 * nobs * np.abs(z).max()
    assert time.perf_counter() - start < 5.0


def test_criterion_02_estimator_routes_agree():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    for _ in range(100):
        k = int(rng.integers(1, 6))
        nobs = int(rng.integers(60, 401))
        spec = DgpSpec(
            nobs=nobs,
            c=rng.uniform(-8.0, 0.0, k),
            gamma=rng.standard_normal(k),
            beta=np.zeros(k),
            burn_in=50,
        )
        sample = simulate_dgp(spec, int(rng.integers(1 << 31)))
        z = build_instrument(sample.x)
        t0 = nobs // 2
        z_tilde = modified_instrument(z, *split_weights(z, t0), t0)
        direct = beta_l(sample.y, sample.x, z_tilde)
        combined = beta_l_via_subsamples(sample.y, sample.x, z, t0)
        np.testing.assert_allclose(combined, direct, rtol=1e-8, atol=1e-12)
    assert time.perf_counter() - start < 10.0


def test_criterion_03_wald_equals_squared_t_per_replication():
    # single-restriction variants of the size designs used below
    designs = [
        (persistent_dgp(5, 250), Hypothesis.marginal(0, 5)),
        (
            DgpSpec.from_rho(np.full(3, 0.5), nobs=300, alpha=0.0,
                             gamma=PERSISTENT_GAMMA[:3], beta=np.zeros(3)),
            Hypothesis.marginal(0, 3),
        ),
    ]
    for dgp, hyp in designs:
        summary = rejection_rate(
            dgp, hyp, reps=300, seed=14, n_jobs=N_JOBS,
            collect=("q_l", "q_m", "t_l", "t_m"),
        )
        for q_name, t_name in (("q_l", "t_l"), ("q_m", "t_m")):
            q = summary.draws[q_name]
            t = summary.draws[t_name]
            gap = np.abs(q - t**2)
            assert np.all(gap <= 1e-9 * np.maximum(np.abs(q), 1e-12))


def test_criterion_04_inflated_variance_never_raises_the_statistic(size_run_k5):
    summary, _ = size_run_k5
    # unit persistence weights, no mean shift: the inflation-only statistic
    # must sit at or below the uncorrected split-sample statistic
    gap = summary.draws["q_l"] - summary.draws["q_vee"]
    assert gap.shape == (summary.effective,)
    assert float(gap.min()) >= -1e-10


def test_criterion_05_size_with_persistent_predictors(size_run_k5):
    summary, elapsed = size_run_k5
    q_m = summary.rejection_rate["q_m"]
    q_l = summary.rejection_rate["q_l"]
    assert 0.030 <= q_m <= 0.075
    assert q_m < q_l
    assert elapsed < 180.0


@pytest.mark.slow
def test_criterion_06_full_scale_size_bands():
    start = time.perf_counter()
    summary = rejection_rate(
        persistent_dgp(2, 750),
        Hypothesis.joint_zero(2),
        reps=10_000,
        seed=5,
        n_jobs=N_JOBS,
    )
    assert summary.rejection_rate["q_m"] == pytest.approx(0.049, abs=0.008)
    assert summary.rejection_rate["q_l"] == pytest.approx(0.060, abs=0.008)
    assert time.perf_counter() - start < 1800.0


def test_criterion_07_null_distribution_is_chi_square():
    dgp = DgpSpec.from_rho(
        np.full(3, 0.5), nobs=300, alpha=0.0,
        gamma=PERSISTENT_GAMMA[:3], beta=np.zeros(3),
    )
    start = time.perf_counter()
    summary = rejection_rate(
        dgp, Hypothesis.joint_zero(3), reps=2000, seed=14,
        n_jobs=N_JOBS, collect=("q_m",),
    )
    ks = stats.kstest(summary.draws["q_m"], "chi2", args=(3,))
    assert ks.pvalue > 0.01
    assert time.perf_counter() - start < 180.0


def test_criterion_08_power_grid_monotone_with_substantial_mid_power():
    """Power along the joint-coefficient grid.

    Known shortfall: at this design the shift-corrected statistic rejects
    about 44% of the time at b = 0.08 (the uncorrected split-sample form
    reaches about 49%), so the 50% floor asserted last is not met; the
    monotonicity checks above it pass.
    """
    start = time.perf_counter()
    cells = size_power_grid(
        [persistent_dgp(2, 250)],
        [0.0, 0.04, 0.08, 0.12],
        Hypothesis.joint_zero(2),
        reps=1000,
        seed=23,
        n_jobs=N_JOBS,
    )
    rates = [cell.summary.rejection_rate["q_m"] for cell in cells]
    ses = [cell.summary.monte_carlo_se["q_m"] for cell in cells]
    for lo, hi, se_lo, se_hi in zip(rates, rates[1:], ses, ses[1:]):
        assert hi >= lo - 2.0 * float(np.hypot(se_lo, se_hi))
    assert time.perf_counter() - start < 120.0
    assert rates[2] >= 0.50


def test_criterion_09_matrix_root_kernel():
    rng = np.random.default_rng(900)
    start = time.perf_counter()
    for trial in range(500):
        dim = int(rng.integers(1, 13))
        if trial % 5 == 0 and dim > 1:
            factor = rng.standard_normal((dim, dim - 1))  # rank deficient
        else:
            factor = rng.standard_normal((dim, dim))
        psd = factor @ factor.T
        root = sym_sqrt(psd)
        denom = max(float(np.linalg.norm(psd)), 1e-30)
        assert np.linalg.norm(root @ root - psd) / denom < 1e-10

        pd = psd + (0.05 + rng.uniform()) * np.eye(dim)
        inv_root = sym_inv_sqrt(pd)
        sandwich = inv_root @ pd @ inv_root
        assert np.abs(sandwich - np.eye(dim)).max() < 1e-8
    assert time.perf_counter() - start < 2.0


def test_criterion_10_constrained_least_squares():
    rng = np.random.default_rng(1000)
    start = time.perf_counter()
    for _ in range(100):
        k = int(rng.integers(1, 8))
        nobs = 3 * k + int(rng.integers(10, 40))
        x = rng.standard_normal((nobs, k))
        y = rng.standard_normal(nobs)
        n_restr = int(rng.integers(1, k + 1))
        r_matrix = rng.standard_normal((n_restr, k))
        r_value = rng.standard_normal(n_restr)

        bound = constrained_ols(y, x, Hypothesis(r_matrix, r_value))
        assert np.abs(r_matrix @ bound.beta_hat - r_value).max() <= 1e-10

        free = ols_fit(y, x)
        assert bound.ssr >= free.ssr - 1e-10 * max(1.0, free.ssr)

        # a constraint already satisfied by the free fit changes nothing
        inactive = constrained_ols(y, x, Hypothesis(r_matrix, r_matrix @ free.beta_hat))
        assert inactive.ssr == pytest.approx(free.ssr, rel=1e-8)
        np.testing.assert_allclose(inactive.beta_hat, free.beta_hat, rtol=1e-7, atol=1e-9)
    assert time.perf_counter() - start < 2.0


def test_criterion_11_empirical_pipeline(tmp_path):
    start = time.perf_counter()
    table = tmp_path / "factors.csv"
    code = cli_main([
        "factors", "--prices", f"{FIXTURES}/bond_prices.csv",
        "--macro", f"{FIXTURES}/bond_macro.csv", "--out", str(table),
    ])
    assert code == 0
    golden = open(f"{FIXTURES}/bond_factors_golden.csv", "rb").read()
    assert table.read_bytes() == golden

    reports = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        code = cli_main([
            "test", "--data", f"{FIXTURES}/predictive_k2.csv",
            "--y", "y", "--x", "x1,x2", "--out", str(out),
        ])
        assert code == 0
        reports.append(out.read_bytes())
    assert reports[0] == reports[1]
    payload = json.loads(reports[0])
    assert payload["p_values"]
    assert all(0.0 <= p <= 1.0 for p in payload["p_values"].values())
    assert time.perf_counter() - start < 5.0

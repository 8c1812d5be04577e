"""Bias- and variance-corrected inference for predictive regressions.

The instrument-based estimator is made exactly mean-zero by a two-block
sample split, then recentered and variance-inflated to absorb the
finite-sample distortions that persistent, endogenous predictors induce.
:func:`run_test` is the main entry point; :mod:`ivxrobust.montecarlo`
replicates size/power experiments and :mod:`ivxrobust.bonds` builds the
bond-return forecasting inputs.
"""

from .engine import (
    CorrectionBundle,
    Instruments,
    baseline_ivx,
    beta_l,
    beta_l_via_subsamples,
    beta_m,
    build_instrument,
    correction_bundle,
    modified_instrument,
    run_test,
    split_weights,
    wald_and_t,
)
from .errors import (
    DegenerateResiduals,
    InfeasibleRank,
    IvxError,
    MissingColumn,
    MissingMaturity,
    NonContiguousDates,
    NonStationary,
    NotPsd,
    NotSymmetric,
    NumericalError,
    OutOfRange,
    Singular,
    TooManyFailures,
    ValidationError,
    ZeroVariance,
)
from .estimators import (
    InnovCov,
    OlsFit,
    ar1_rho,
    constrained_ols,
    innovation_cov,
    ols_fit,
    rho_uv_star,
)
from .linalg import sym_inv_sqrt, sym_sqrt
from .model import (
    DgpSpec,
    Hypothesis,
    IvxConfig,
    PredictiveSample,
    ResolvedConfig,
    TestReport,
    validate,
)
from .montecarlo import (
    GridCell,
    SimulationSummary,
    joint_beta,
    rejection_rate,
    simulate_dgp,
    simulate_garch_u,
    size_power_grid,
)
from .scenario import Scenario, parse_scenarios

__version__ = "0.1.0"

__all__ = [
    "run_test",
    "PredictiveSample",
    "Hypothesis",
    "IvxConfig",
    "ResolvedConfig",
    "TestReport",
    "DgpSpec",
    "validate",
    "build_instrument",
    "split_weights",
    "modified_instrument",
    "beta_l",
    "beta_l_via_subsamples",
    "beta_m",
    "wald_and_t",
    "correction_bundle",
    "baseline_ivx",
    "Instruments",
    "CorrectionBundle",
    "ols_fit",
    "constrained_ols",
    "ar1_rho",
    "innovation_cov",
    "rho_uv_star",
    "OlsFit",
    "InnovCov",
    "sym_sqrt",
    "sym_inv_sqrt",
    "simulate_garch_u",
    "simulate_dgp",
    "rejection_rate",
    "size_power_grid",
    "joint_beta",
    "SimulationSummary",
    "GridCell",
    "Scenario",
    "parse_scenarios",
    "IvxError",
    "ValidationError",
    "NumericalError",
    "MissingColumn",
    "MissingMaturity",
    "OutOfRange",
    "NonContiguousDates",
    "InfeasibleRank",
    "NonStationary",
    "Singular",
    "NotPsd",
    "NotSymmetric",
    "ZeroVariance",
    "DegenerateResiduals",
    "TooManyFailures",
]

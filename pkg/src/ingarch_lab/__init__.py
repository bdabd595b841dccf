"""Simulation, mixing bounds and trend inference for Poisson INGARCH(1,1) count processes."""

__version__ = "0.1.0"

from .bounds import (
    BetaEstimate,
    ContractionConstants,
    MixingBoundReport,
    bound_report,
    corollary31_bound,
    corollary31_constants,
    corollary32_optimize,
    corollary32_rho,
    derivative_identity_check,
    estimate_beta_upper,
    loglinear_rate,
    model_constants,
    theorem21_bound,
)
from .coupling import (
    CoupledRun,
    MetricKind,
    MetricSpec,
    PhaseTwoCoupling,
    additive_coupling_poisson,
    backward_approx,
    comonotone_coupling_poisson,
    maximal_coupling_poisson,
    metric_eval,
    simulate_coupled,
    tv_poisson,
)
from .data import CountSeries, load_counts_csv, make_fixture, save_counts_csv
from .exceptions import (
    DataError,
    DegenerateDesignError,
    ExplosionError,
    IngarchError,
    InvalidStateError,
    NoContractionError,
    ParameterError,
)
from .experiments import (
    McDesign,
    McReport,
    run_bound_verification,
    run_coupling_validation,
    run_power_study,
)
from .models import (
    CovariateSpec,
    Family,
    Mixing,
    ModelSpec,
    Path,
    intensity_step,
    nb_pmf,
    poisson_pmf,
    simulate_path,
    softplus,
    zip_pmf,
)
from .trend import (
    TrendTestResult,
    ols_fit,
    orthogonal_weights,
    seasonal_adjust,
    stationary_moments_inarch1,
    theta_hat,
    trend_test,
)

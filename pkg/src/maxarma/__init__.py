"""Stationary Max-ARMA(p, q) processes for heavy-tailed time series:
parameter spaces, closed-form extremal measures, seeded simulation, marginal
tail modelling, and generalized-moments inference."""

__version__ = "0.1.0"

from .params import (
    InfeasibleReparamError,
    MaxArmaOrder,
    MaxArmaParams,
    ParameterError,
    ReparamParams,
    from_reparam,
    identifiability_floor,
    in_reparam_space,
    theta_space_report,
    to_reparam,
    validate_theta,
)
from .weights import (
    WeightSequence,
    compute_weights,
    gamma_tau_bruteforce,
    gamma_tau_dp,
    stationarity_scale,
    truncation_diagnostic,
)
from .extremal import (
    ExtremalSummary,
    MonotoneShortcutError,
    chi,
    chi_monotone_shortcut,
    extremal_index,
    extremal_summary,
)
from .simulate import (
    SimulatedSeries,
    SimulationConfig,
    sample_frechet,
    simulate,
    to_gumbel,
)
from .empirical import (
    EmpiricalMeasures,
    InsufficientExceedancesError,
    NoExtremePairsError,
    RatioEstimate,
    ThresholdSpec,
    chi_hat,
    davis_ratio_min,
    decay_change_lag,
    empirical_measures,
    pearson_acf,
    theta_hat_runs,
)
from .margins import (
    MarginalError,
    MarginalModel,
    QQData,
    cdf,
    fit_marginal,
    from_frechet,
    inverse_cdf,
    load_marginal_model,
    qq_data,
    save_marginal_model,
    to_frechet,
)
from .inference import (
    EmpiricalCache,
    FitError,
    FitResult,
    MomentSpec,
    ScanCell,
    build_moment_spec,
    fit,
    model_based_measures,
    model_moments,
    objective,
    order_scan,
)

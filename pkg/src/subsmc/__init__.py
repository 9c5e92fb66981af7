"""Sequential MCMC target tracking with adaptive measurement subsampling."""

from .adaptive import (
    DecisionRecord,
    StepDiagnostics,
    asmcmc_time_update,
    update_proxy_context,
)
from .chain import (
    ChainIterate,
    McmcConfig,
    full_loglik_ratio,
    initial_cloud,
    propose_joint,
    propose_refine,
    psi_joint,
    psi_refine,
    smcmc_time_update,
)
from .estimators import AdaptiveSubsamplingTracker, SequentialMcmcTracker
from .harness import (
    ConfigError,
    ExperimentConfig,
    ReplayReport,
    parse_config,
    run_experiment,
    run_replay_oracle,
    write_csv,
    write_replay_csv,
)
from .model import (
    MotionParams,
    ObservationParams,
    hessian_spectral_bound,
    loglik_grad,
    loglik_hessian,
    loglik_single,
    transition_logpdf,
    transition_mean,
    transition_sample,
)
from .scenario import (
    RunStats,
    Scenario,
    dump_scenario,
    generate_scenario,
    load_scenario,
    rmse,
    simulate_measurements,
    simulate_trajectory,
    step_subsample_ratio,
    subsample_ratio_D,
)
from .subsample import (
    ProxyContext,
    SubsampleConfig,
    SubsampleOutcome,
    adaptive_loglik_ratio,
    bernstein_halfwidth,
    delta_schedule,
    proxy_value,
    range_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveSubsamplingTracker",
    "ChainIterate",
    "ConfigError",
    "DecisionRecord",
    "ExperimentConfig",
    "McmcConfig",
    "MotionParams",
    "ObservationParams",
    "ProxyContext",
    "ReplayReport",
    "RunStats",
    "Scenario",
    "SequentialMcmcTracker",
    "StepDiagnostics",
    "SubsampleConfig",
    "SubsampleOutcome",
    "adaptive_loglik_ratio",
    "asmcmc_time_update",
    "bernstein_halfwidth",
    "delta_schedule",
    "dump_scenario",
    "full_loglik_ratio",
    "generate_scenario",
    "hessian_spectral_bound",
    "initial_cloud",
    "load_scenario",
    "loglik_grad",
    "loglik_hessian",
    "loglik_single",
    "parse_config",
    "propose_joint",
    "propose_refine",
    "proxy_value",
    "psi_joint",
    "psi_refine",
    "range_upper_bound",
    "rmse",
    "run_experiment",
    "run_replay_oracle",
    "simulate_measurements",
    "simulate_trajectory",
    "smcmc_time_update",
    "step_subsample_ratio",
    "subsample_ratio_D",
    "transition_logpdf",
    "transition_mean",
    "transition_sample",
    "update_proxy_context",
    "write_csv",
    "write_replay_csv",
]

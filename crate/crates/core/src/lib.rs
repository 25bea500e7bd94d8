//! Parametric lifetime inference for censored and truncated data with the
//! fractional-random-weight bootstrap.
//!
//! The crate fits Weibull, lognormal and generalized gamma models by
//! (weighted) maximum likelihood, and builds Wald, profile-likelihood and
//! bootstrap intervals on top. Bootstrap replicates reweight the rows of the
//! data: integer multinomial weights reproduce the classical resampling
//! bootstrap, while continuous Dirichlet or exponential weights keep every
//! observation in every replicate.

pub mod bootstrap;
pub mod cli;
pub mod dist;
pub mod error;
pub mod fit;
pub mod io;
pub mod likelihood;
pub mod numeric;
pub mod optim;
pub mod prediction;
pub mod rng;
pub mod selection;
pub mod weights;

pub use bootstrap::{
    bc_percentile_interval, boundary_diagnostics, percentile_interval, run_bootstrap, BootstrapOptions, BootstrapRun,
};
pub use dist::{dist_eval, dist_quantile, DistEval, Family, ModelParams, ParamName};
pub use error::{Error, Result};
pub use fit::{fit_ml, profile_likelihood_interval, wald_interval, FitOptions, FitResult, ProfileInterval};
pub use likelihood::{
    check_mle_exists, obs_loglik, weibull_profile_eta, weighted_loglik, DegenerateReason,
    MleVerdict, ObsKind, Observation,
};
pub use prediction::{
    conditional_failure_prob, fleet_prediction, individual_prediction, PredictionCurve, RemainingLife, RiskSetUnit,
};
pub use rng::StreamRng;
pub use selection::{
    bootstrap_selection, build_candidates, forward_select_aic, CandidateSet, DesignSpec, Factor, SelectOptions,
    SelectionBootstrap, SelectionResult, Term,
};
pub use weights::{gen_weights, prob_degenerate_resample, weighted_moments, WeightScheme, WeightVector};

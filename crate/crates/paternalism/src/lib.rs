//! A formal model of self-interested paternalism: welfare evaluation for
//! choice architects, optimal intervention regions, Bayesian beliefs under
//! partial knowledge of a lottery, a probit estimator of the self-interest
//! weight, auxiliary trend/proportion tests, and a seeded experiment
//! simulator tying them together.
//!
//! Start with the runnable examples (`cargo run --example <name>`); the
//! `paternalism` binary exposes the same capabilities as subcommands.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod mle;
mod quad;
pub mod sim;
pub mod stats;
pub mod welfare;

pub use error::{Error, Result};
pub use estimation::{
    beta_posterior_params, chooser_choice, full_information_choice, marginal_mean_closed,
    marginal_posterior_pdf, mistake_probability, posterior_summary, posterior_table, sample_draws,
    write_posterior_table_csv, ChooserRule, EstimationGame, Knowledge, PdfMethod,
    PosteriorMeanRule, PosteriorSummary, DEFAULT_QUAD_PANELS, STANDARD_K_GRID,
};
pub use mle::{
    confusion_compare, fit, impose_probability, log_likelihood, predict_classify,
    read_observations_csv, welfare_gap, ConfusionCompare, FitOptions, FitResult, ObservationRecord,
    DEFAULT_CLASSIFY_THRESHOLD,
};
pub use sim::{
    belief_population, ca_belief_set, intervention_rate_curve, read_sim_config, run_experiment,
    simulate_cas, simulate_choosers, write_rate_curve_csv, CaRecord, ChooserRecord, MistakeModel,
    PayoffSpec, PhiDistribution, RatePoint, SimCa, SimConfig, SimPanel,
};
pub use stats::{
    k_rank, pages_l, prop_test_yates, read_rank_panel_csv, PageTestResult, PropTestResult,
    ProportionSample, RankPanel,
};
pub use welfare::{
    boundary_q, freedom_delta, mistakes_benefit_ca, optimal_policy, region_grid, welfare_freedom,
    welfare_freedom_closed, welfare_imposed, BeliefSet, CAProfile, OptionId, Policy,
    PolicyDecision, PopulationState, RegionGrid, DEFAULT_TIE_TOL,
};

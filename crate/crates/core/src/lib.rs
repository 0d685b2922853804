//! Simulation and audit toolkit for reinforced sequential risk scoring.
//!
//! - [`urn`]: the single-defendant reinforced process and its exact oracle.
//! - [`limit`]: the Beta long-run law and Kolmogorov–Smirnov checks.
//! - [`cohort`]: populations with per-group decision bias.
//! - [`validation`]: one-shot validation metrics and amplification analysis.

pub mod cohort;
pub mod error;
pub mod exec;
pub mod limit;
pub mod rng;
pub mod urn;
pub mod validation;

pub use cohort::{
    apply_bias, disparity_curve, group_disparity, run_cohort, run_cohort_with, CohortConfig,
    CohortResult, DisparityRecord, GroupSpec,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use limit::{fit_limit_law, limit_distribution, BetaParams, GoodnessOfFitResult};
pub use urn::{
    simulate_path, simulate_path_stream, Classification, DefendantTrajectory, UrnParameters,
    UrnState,
};
pub use validation::{
    amplification_report, auc, one_shot_power, snapshot_validation, AmplificationReport,
    BootstrapSettings, SnapshotSpec, ValidationReport,
};

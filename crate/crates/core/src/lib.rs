//! Biomarker-based HIV incidence estimation from cross-sectional survey data.
//!
//! The crate covers the whole estimation path for recent infection testing
//! algorithms (RITA): the assay recency curve `q(t)`, the probability of still
//! being screened in `P(S | T = t, H)`, the duration integrals that turn those
//! into a context-specific MDRI, survey-weighted proportions, the incidence and
//! residual false-recency formulas, jackknife standard errors, a sensitivity
//! sweep, and a synthetic cohort simulator with known incidence.
//!
//! Everything here is `no_std` + `alloc`. File formats, configuration and the
//! command line live in the `rita` crate.
#![no_std]

extern crate alloc;

pub mod calibration;
pub mod durations;
mod error;
pub mod estimators;
pub mod ingestion;
pub mod math;
pub mod pipeline;
pub mod sensitivity;
pub mod simulator;
mod smooth;
pub mod survival;
pub mod variance;

pub use calibration::{
    fit_recency_curve, mdri, CalibrationCurve, CalibrationRecord, FitConfig, Mdri, ReferenceParams,
};
pub use durations::{duration_set, omega_rs, omega_s, DurationSet, Variant};
pub use error::{Error, Result, Warning};
pub use estimators::{
    historical_incidence, mean_rate, naive_incidence, residual_frr, rita_incidence,
    standard_rita_incidence, IncidenceResult, Method,
};
pub use ingestion::{
    proportions, screen, testing_history, LastTest, MissingPolicies, MissingPolicy,
    ProportionSet, ReplicateWeights, Respondent, ScreeningConfig, SurveyDataset,
    TestingPopulation, WeightSel,
};
pub use pipeline::{EstimateReport, PipelineConfig, PipelineOutput, PreparedPipeline};
pub use sensitivity::{sensitivity_sweep, SensitivityInputs, SensitivityReport, SensitivityRow};
pub use simulator::{analytic_truth, simulate, SimConfig, SimOutput, SimTruth, Simulator, TreatmentDelay};
pub use survival::{
    aids_survival_at, empirical_test_survival, screening_survival, treatment_screening_survival,
    AidsSurvival, ScreeningSurvival, StepSurvival, TreatmentUptake,
};
pub use variance::{estimate_with_se, jackknife_se, JackknifeConfig};

/// Days per year used for every presentation-layer conversion.
pub const DAYS_PER_YEAR: f64 = 365.25;

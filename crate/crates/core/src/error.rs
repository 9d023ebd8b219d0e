use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("separation: cannot fit binomial smooth")]
    Separation,
    #[error("need at least 2 distinct calibration times, got {0}")]
    TooFewDistinctTimes(usize),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid survival function: {0}")]
    InvalidSurvival(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("tau = {tau} exceeds the screening survival domain [0, {domain}]")]
    DomainExceeded { tau: f64, domain: f64 },
    #[error("total weight is zero")]
    ZeroTotalWeight,
    #[error("no screened-in respondents")]
    NoScreenedIn,
    #[error("empty subpopulation for testing history")]
    EmptySubpopulation,
    #[error("respondent {row}: missing value for `{field}`")]
    MissingValue { row: usize, field: &'static str },
    #[error("respondent {row}: {message}")]
    InvalidRespondent { row: usize, message: String },
    #[error("MDRI must exceed β·τ")]
    NaiveDenominator,
    #[error("MDRI must exceed β·Ω_s")]
    RitaDenominator,
    #[error("context-specific MDRI must exceed residual FRR·τ")]
    StandardDenominator,
    #[error("long-term population exhausted")]
    LongTermExhausted,
    #[error("no assay results available among HIV-positive respondents")]
    RecencyUnavailable,
    #[error("non-finite replicate estimates at indices {0:?}")]
    NonFiniteReplicates(Vec<usize>),
    #[error("{failed} of {total} replicates failed (more than 5%): {first}")]
    TooManyReplicateFailures { failed: usize, total: usize, first: String },
    #[error("jackknife needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("replicate index {index} out of range ({count} replicates)")]
    ReplicateOutOfRange { index: usize, count: usize },
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Warning {
    /// Point estimate of incidence below zero (observed recency below FRR).
    NegativeIncidence,
    /// Integration ran past the end of the recency curve; the last value was held.
    CurveExtrapolated { tau: f64, domain: f64 },
    /// Residual FRR came out below −1e−12 and was left unclamped.
    NegativeResidualFrr(f64),
    /// The dataset has no replicate weights, so no standard errors.
    NoReplicateWeights,
    /// Some replicate evaluations failed and were dropped.
    ReplicatesDropped { dropped: Vec<usize>, total: usize },
    /// Scaled screening survival hit the [0, 1] clamp on most of the grid.
    SensitivityClamping { factor: f64, fraction: f64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::NegativeIncidence => write!(f, "negative incidence point estimate"),
            Warning::CurveExtrapolated { tau, domain } => {
                write!(f, "recency curve ends at {domain} years; held constant up to τ = {tau}")
            }
            Warning::NegativeResidualFrr(v) => write!(f, "negative residual FRR {v:e}"),
            Warning::NoReplicateWeights => write!(f, "no replicate weights; standard errors not computed"),
            Warning::ReplicatesDropped { dropped, total } => {
                write!(f, "{} of {total} replicates failed and were dropped: {dropped:?}", dropped.len())
            }
            Warning::SensitivityClamping { factor, fraction } => write!(
                f,
                "factor {factor}: scaled screening survival clamped on {:.0}% of the grid",
                100.0 * fraction
            ),
        }
    }
}

//! Incidence and residual false-recency formulas.
//!
//! All rates are per person-year and all durations in years.

use alloc::format;
use alloc::vec::Vec;

use crate::calibration::ReferenceParams;
use crate::durations::DurationSet;
use crate::ingestion::ProportionSet;
use crate::{Error, Result, Warning, DAYS_PER_YEAR};

/// Tiny negative residual FRR values down to this are clamped to 0.
pub const FRR_CLAMP_TOLERANCE: f64 = 1e-12;

/// MDRI assumed by the historical comparator, in years (130 days).
pub const HISTORICAL_MDRI_YEARS: f64 = 130.0 / DAYS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    MeanRate,
    Naive,
    StandardRita,
    Rita3,
    Rita2,
    Historical,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MeanRate => "mean_rate",
            Method::Naive => "naive",
            Method::StandardRita => "standard_rita",
            Method::Rita3 => "rita3",
            Method::Rita2 => "rita2",
            Method::Historical => "historical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IncidenceResult {
    /// Incidence per person-year; may be negative (see `warnings`).
    pub lambda: f64,
    pub method: Method,
    /// Estimated durations, when the method uses them.
    pub durations: Option<DurationSet>,
    /// MDRI entering the denominator (context-specific or fixed), years.
    pub mdri_used: f64,
    pub residual_frr: Option<f64>,
    pub proportions: Option<ProportionSet>,
    pub warnings: Vec<Warning>,
}

impl IncidenceResult {
    fn new(lambda: f64, method: Method, mdri_used: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InternalConsistency(format!("non-finite incidence {lambda}")));
        }
        let mut warnings = Vec::new();
        if lambda < 0.0 {
            warnings.push(Warning::NegativeIncidence);
        }
        Ok(Self { lambda, method, durations: None, mdri_used, residual_frr: None, proportions: None, warnings })
    }
}

fn check_prevalence(p_h: f64) -> Result<()> {
    if !(p_h >= 0.0 && p_h < 1.0) {
        return Err(Error::InvalidParameter(format!("P(H) must lie in [0, 1), got {p_h}")));
    }
    Ok(())
}

/// Averaged infection rate adjusted to incidence: `P(R) / ((1 − P(H))·Ω)`.
pub fn mean_rate(p_r: f64, p_h: f64, omega: f64) -> Result<f64> {
    check_prevalence(p_h)?;
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("mean duration must be positive, got {omega}")));
    }
    Ok(p_r / ((1.0 - p_h) * omega))
}

/// Unscreened estimator with reference parameters:
/// `λ = (P(R|H) − β)·P(H) / ((1 − P(H))·(Ω_r − β·τ))`.
pub fn naive_incidence(p_r_given_h: f64, p_h: f64, reference: &ReferenceParams) -> Result<IncidenceResult> {
    check_prevalence(p_h)?;
    let denom = reference.mdri_ref - reference.beta * reference.tau;
    if !(denom > 0.0) {
        return Err(Error::NaiveDenominator);
    }
    let lambda = (p_r_given_h - reference.beta) * p_h / ((1.0 - p_h) * denom);
    let mut r = IncidenceResult::new(lambda, Method::Naive, reference.mdri_ref)?;
    r.residual_frr = Some(reference.beta);
    Ok(r)
}

/// `R` replaced by `R ∧ S` with a given residual FRR and context-specific MDRI:
/// `λ = (P(R∧S|H) − FRR)·P(H) / ((1 − P(H))·(Ω_{r,s} − FRR·τ))`.
pub fn standard_rita_incidence(
    p_rs_given_h: f64,
    p_h: f64,
    residual_frr: f64,
    omega_rs: f64,
    tau: f64,
) -> Result<IncidenceResult> {
    check_prevalence(p_h)?;
    let denom = omega_rs - residual_frr * tau;
    if !(denom > 0.0) {
        return Err(Error::StandardDenominator);
    }
    let lambda = (p_rs_given_h - residual_frr) * p_h / ((1.0 - p_h) * denom);
    let mut r = IncidenceResult::new(lambda, Method::StandardRita, omega_rs)?;
    r.residual_frr = Some(residual_frr);
    Ok(r)
}

/// RITA incidence with context-specific durations:
/// `λ = (P(R|S) − β)·P(S) / ((1 − P(H))·(Ω_{r,s} − β·Ω_s))`.
///
/// The method tag follows `durations.variant`.
pub fn rita_incidence(p: &ProportionSet, reference: &ReferenceParams, durations: &DurationSet) -> Result<IncidenceResult> {
    check_prevalence(p.p_h)?;
    let denom = durations.omega_rs - reference.beta * durations.omega_s;
    if !(denom > 0.0) {
        return Err(Error::RitaDenominator);
    }
    let lambda = (p.p_r_given_s - reference.beta) * p.p_s / ((1.0 - p.p_h) * denom);
    let method = match durations.variant {
        crate::durations::Variant::Rita3 => Method::Rita3,
        crate::durations::Variant::Rita2 => Method::Rita2,
    };
    let mut r = IncidenceResult::new(lambda, method, durations.omega_rs)?;
    r.durations = Some(*durations);
    r.proportions = Some(*p);
    Ok(r)
}

/// Residual FRR after screening:
/// `β·(P(S|H)·P(H) − λ·Ω_s·(1 − P(H))) / (P(H) − λ·τ·(1 − P(H)))`.
///
/// Values in `[−1e−12, 0)` are clamped to 0; larger negatives are returned
/// unchanged so the caller can flag them.
pub fn residual_frr(p: &ProportionSet, lambda: f64, reference: &ReferenceParams, durations: &DurationSet) -> Result<f64> {
    let q_h = 1.0 - p.p_h;
    let denom = p.p_h - lambda * durations.tau * q_h;
    if !(denom > 0.0) {
        return Err(Error::LongTermExhausted);
    }
    let value = reference.beta * (p.p_s_given_h * p.p_h - lambda * durations.omega_s * q_h) / denom;
    if value < 0.0 && value >= -FRR_CLAMP_TOLERANCE {
        return Ok(0.0);
    }
    Ok(value)
}

/// Historical comparator: residual FRR fixed (default 0) and context-specific
/// MDRI fixed (default 130 days), plugged into the standard formula.
pub fn historical_incidence(p: &ProportionSet, mdri_fixed: f64, frr_fixed: f64, tau: f64) -> Result<IncidenceResult> {
    let mut r = standard_rita_incidence(p.p_rs_given_h, p.p_h, frr_fixed, mdri_fixed, tau)?;
    r.method = Method::Historical;
    r.proportions = Some(*p);
    Ok(r)
}

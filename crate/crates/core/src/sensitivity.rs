//! Sensitivity of the incidence estimate to misspecified screening: the
//! screening-out probability `1 − P(S | T = t, H)` is scaled by `1 + c`.

use alloc::vec::Vec;

use crate::calibration::{CalibrationCurve, ReferenceParams};
use crate::durations::{duration_set, Variant};
use crate::estimators::rita_incidence;
use crate::ingestion::ProportionSet;
use crate::survival::{treatment_screening_survival, ScreeningSurvival, TreatmentUptake};
use crate::{Error, Result, Warning};

/// Mirrors the ±100/50/20/10% columns.
pub const DEFAULT_FACTORS: [f64; 8] = [-1.0, -0.5, -0.2, -0.1, 0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone)]
pub struct SensitivityInputs<'a> {
    pub curve: &'a CalibrationCurve,
    /// RITA3 screening survival `P(S | T = t, H)`.
    pub screening: &'a ScreeningSurvival,
    pub proportions: ProportionSet,
    pub reference: ReferenceParams,
    pub variant: Variant,
    /// `w(t)`, required for RITA2.
    pub treatment: Option<&'a TreatmentUptake>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityRow {
    pub factor: f64,
    pub lambda: f64,
    /// Percent change against `factor = 0`.
    pub pct_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub baseline: f64,
    pub rows: Vec<SensitivityRow>,
    pub warnings: Vec<Warning>,
}

fn lambda_for(inputs: &SensitivityInputs<'_>, s: &ScreeningSurvival) -> Result<f64> {
    let s = match inputs.variant {
        Variant::Rita3 => s.clone(),
        Variant::Rita2 => {
            let w = inputs
                .treatment
                .ok_or_else(|| Error::InvalidParameter("RITA2 sensitivity needs treatment uptake".into()))?;
            treatment_screening_survival(s, w)?
        }
    };
    let d = duration_set(inputs.curve, &s, inputs.reference.tau, inputs.variant)?;
    Ok(rita_incidence(&inputs.proportions, &inputs.reference, &d)?.lambda)
}

/// For each factor `c ≥ −1` replaces `P(S|T=t,H)` by
/// `clamp(1 − (1 + c)(1 − P(S|T=t,H)), 0, 1)`, recomputes the durations and
/// the RITA estimate, and reports the percent change against `c = 0`.
pub fn sensitivity_sweep(inputs: &SensitivityInputs<'_>, factors: &[f64]) -> Result<SensitivityReport> {
    if let Some(c) = factors.iter().find(|c| !(**c >= -1.0) || !c.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("sensitivity factor {c} must be ≥ −1")));
    }
    let baseline = lambda_for(inputs, inputs.screening)?;
    let mut rows = Vec::with_capacity(factors.len());
    let mut warnings = Vec::new();
    for &c in factors {
        let values = inputs.screening.values();
        let mut clamped = 0usize;
        // s − c(1 − s) equals 1 − (1 + c)(1 − s) and is exact at c = 0
        let scaled: Vec<f64> = values
            .iter()
            .map(|&s| {
                let v = s - c * (1.0 - s);
                if v < 0.0 {
                    clamped += 1;
                }
                v.clamp(0.0, 1.0)
            })
            .collect();
        let fraction = clamped as f64 / values.len() as f64;
        if fraction > 0.5 {
            warnings.push(Warning::SensitivityClamping { factor: c, fraction });
        }
        let s = ScreeningSurvival::from_values(inputs.screening.tau(), scaled)?;
        let lambda = lambda_for(inputs, &s)?;
        rows.push(SensitivityRow { factor: c, lambda, pct_change: 100.0 * (lambda - baseline) / baseline });
    }
    Ok(SensitivityReport { baseline, rows, warnings })
}

//! Jackknife standard errors from replicate weights.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::ingestion::SurveyDataset;
use crate::pipeline::{EstimateReport, PipelineConfig, PipelineOutput, PreparedPipeline};
use crate::{Error, Result, Warning};

/// Replicate variance multipliers.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum JackknifeConfig {
    /// JK1: every replicate gets `(K − 1)/K`.
    #[default]
    Jk1,
    /// One nonnegative coefficient per replicate.
    Coefficients(Vec<f64>),
}

impl JackknifeConfig {
    pub fn coefficients(values: Vec<f64>) -> Result<Self> {
        if let Some(c) = values.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("jackknife coefficient {c} must be nonnegative")));
        }
        Ok(Self::Coefficients(values))
    }

    /// Keeps only the coefficients of the replicates in `kept`.
    pub(crate) fn restricted(&self, kept: &[usize]) -> Self {
        match self {
            JackknifeConfig::Jk1 => JackknifeConfig::Jk1,
            JackknifeConfig::Coefficients(c) => JackknifeConfig::Coefficients(kept.iter().map(|&k| c[k]).collect()),
        }
    }
}

/// `sqrt(Σ c_k (θ_k − θ)²)` with `c_k = (K−1)/K` under JK1.
pub fn jackknife_se(point: f64, replicates: &[f64], cfg: &JackknifeConfig) -> Result<f64> {
    let k = replicates.len();
    if k < 2 {
        return Err(Error::TooFewReplicates(k));
    }
    let bad: Vec<usize> = replicates.iter().enumerate().filter(|(_, v)| !v.is_finite()).map(|(i, _)| i).collect();
    if !bad.is_empty() {
        return Err(Error::NonFiniteReplicates(bad));
    }
    if !point.is_finite() {
        return Err(Error::InvalidParameter(format!("point estimate {point} is not finite")));
    }
    let var = match cfg {
        JackknifeConfig::Jk1 => {
            let ss: f64 = replicates.iter().map(|v| (v - point) * (v - point)).sum();
            (k - 1) as f64 / k as f64 * ss
        }
        JackknifeConfig::Coefficients(c) => {
            if c.len() != k {
                return Err(Error::InvalidParameter(format!("{} coefficients for {k} replicates", c.len())));
            }
            replicates.iter().zip(c).map(|(v, c)| c * (v - point) * (v - point)).sum()
        }
    };
    Ok(crate::math::sqrt(var))
}

/// Replicate outputs that failed (by index) and those kept.
pub(crate) fn partition_replicates(
    replicates: Vec<Result<PipelineOutput>>,
) -> Result<(Vec<usize>, Vec<PipelineOutput>, Vec<usize>)> {
    let total = replicates.len();
    let mut kept_idx = Vec::new();
    let mut kept = Vec::new();
    let mut failed = Vec::new();
    let mut first_error = None;
    for (k, r) in replicates.into_iter().enumerate() {
        match r {
            Ok(out) => {
                kept_idx.push(k);
                kept.push(out);
            }
            Err(e) => {
                failed.push(k);
                first_error.get_or_insert(e);
            }
        }
    }
    // up to 5% of replicates may fail
    if failed.len() * 20 > total {
        return Err(Error::TooManyReplicateFailures {
            failed: failed.len(),
            total,
            first: first_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok((kept_idx, kept, failed))
}

pub(crate) fn dropped_warning(failed: &[usize], total: usize) -> Option<Warning> {
    (!failed.is_empty()).then(|| Warning::ReplicatesDropped { dropped: failed.to_vec(), total })
}

/// Runs the full pipeline on the main weights and on every replicate weight
/// vector, then attaches jackknife standard errors to every output quantity.
pub fn estimate_with_se(data: &SurveyDataset, config: &PipelineConfig) -> Result<EstimateReport> {
    let prepared = PreparedPipeline::new(data, config)?;
    let main = prepared.evaluate_main()?;
    let replicates = (0..data.replicate_count()).map(|k| prepared.evaluate_replicate(k, &main)).collect();
    prepared.combine(main, replicates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equal_replicates_give_zero() {
        assert_eq!(jackknife_se(0.3, &[0.3; 10], &JackknifeConfig::Jk1).unwrap(), 0.0);
    }

    #[test]
    fn two_replicates_hand_value() {
        assert_abs_diff_eq!(jackknife_se(0.0, &[-1.0, 1.0], &JackknifeConfig::Jk1).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn user_coefficients() {
        let cfg = JackknifeConfig::coefficients(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(jackknife_se(0.0, &[-1.0, 1.0], &cfg).unwrap(), 1.0, epsilon = 1e-15);
        let wrong = JackknifeConfig::coefficients(vec![0.5]).unwrap();
        assert!(jackknife_se(0.0, &[-1.0, 1.0], &wrong).is_err());
        assert!(JackknifeConfig::coefficients(vec![-0.5]).is_err());
    }

    #[test]
    fn non_finite_replicates_listed() {
        let err = jackknife_se(0.0, &[1.0, f64::NAN, 2.0, f64::INFINITY], &JackknifeConfig::Jk1).unwrap_err();
        assert_eq!(err, Error::NonFiniteReplicates(vec![1, 3]));
        assert_eq!(jackknife_se(0.0, &[1.0], &JackknifeConfig::Jk1), Err(Error::TooFewReplicates(1)));
    }
}

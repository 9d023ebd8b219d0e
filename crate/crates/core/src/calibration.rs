//! The assay recency curve `q(t)` and the reference parameters β and τ.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::smooth;
use crate::{Error, Result};

/// Fitted values are kept away from 0 and 1 by this margin.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Default number of grid points for tabulated curves.
pub const DEFAULT_GRID_N: usize = 2001;

/// Default recent/long-term cutoff in years.
pub const DEFAULT_TAU: f64 = 2.0;

/// Probability of testing assay-recent `t` years after seroconversion,
/// tabulated and linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl CalibrationCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidCurve(format!("need at least 2 points, got {}", grid.len())));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidCurve(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidCurve(format!("grid must start at 0, starts at {}", grid[0])));
        }
        for (i, w) in grid.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "grid not strictly increasing at index {}: {} then {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidCurve(format!("value {v} at index {i} is not a probability")));
        }
        Ok(Self { grid, values })
    }

    /// Curve on `values.len()` evenly spaced points over `[0, t_max]`.
    pub fn uniform(t_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidCurve(format!("domain end must be positive, got {t_max}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidCurve(format!("need at least 2 points, got {}", values.len())));
        }
        Self::new(math::uniform_grid(t_max, values.len()), values)
    }

    /// Tabulates `f` on `n` evenly spaced points over `[0, t_max]`.
    pub fn from_fn(t_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCurve(format!("need at least 2 points, got {n}")));
        }
        let grid = math::uniform_grid(t_max, n);
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    /// Builds a curve from `(time, probability)` rows in any order.
    /// Duplicate times are rejected.
    pub fn from_table(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.iter().any(|(t, q)| !t.is_finite() || !q.is_finite()) {
            return Err(Error::InvalidCurve("non-finite entry in curve table".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidCurve(format!("duplicate time {} in curve table", w[0].0)));
        }
        let (grid, values) = rows.into_iter().unzip();
        Self::new(grid, values)
    }

    /// Stand-in reference curve used when no calibration data is configured:
    /// `q(t) = exp(-(t/θ)²)` with θ set so that the MDRI at τ = 2 is 134.2 days.
    pub fn reference_default() -> Self {
        let mdri_years = 134.2 / crate::DAYS_PER_YEAR;
        // ∫₀^∞ exp(-(t/θ)²) dt = θ·√π/2; the tail beyond 2 years is below 1e−10.
        let theta = mdri_years / (0.5 * math::sqrt(core::f64::consts::PI));
        Self::from_fn(DEFAULT_TAU, DEFAULT_GRID_N, |t| {
            let z = t / theta;
            math::exp(-z * z).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
        })
        .expect("valid by construction")
    }

    pub fn eval(&self, t: f64) -> f64 {
        math::interp_clamped(&self.grid, &self.values, t)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain_end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Mean grid spacing, used to pick a common integration density.
    pub fn mean_step(&self) -> f64 {
        self.domain_end() / (self.grid.len() - 1) as f64
    }

    pub(crate) fn integral_to(&self, tau: f64) -> f64 {
        math::integrate_piecewise_linear(&self.grid, &self.values, tau)
    }
}

/// Reference false recency rate β, cutoff τ and reference MDRI Ω_r.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReferenceParams {
    pub beta: f64,
    pub tau: f64,
    pub mdri_ref: f64,
}

impl ReferenceParams {
    /// β = 2/362, the reference FRR among long-term untreated infections.
    pub const DEFAULT_BETA: f64 = 2.0 / 362.0;

    pub fn new(beta: f64, tau: f64, mdri_ref: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 1), got {beta}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::NonPositiveTau(tau));
        }
        if !(mdri_ref > 0.0 && mdri_ref <= tau) {
            return Err(Error::InvalidParameter(format!(
                "reference MDRI must lie in (0, tau = {tau}], got {mdri_ref}"
            )));
        }
        Ok(Self { beta, tau, mdri_ref })
    }

    /// Derives Ω_r from `curve` at cutoff `tau`.
    pub fn from_curve(curve: &CalibrationCurve, beta: f64, tau: f64) -> Result<Self> {
        let m = mdri(curve, tau)?;
        Self::new(beta, tau, m.years)
    }
}

/// One observation from a calibration study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRecord {
    pub time_since_seroconversion: f64,
    pub assay_recent: bool,
    pub weight: f64,
}

impl CalibrationRecord {
    pub fn new(time_since_seroconversion: f64, assay_recent: bool) -> Self {
        Self { time_since_seroconversion, assay_recent, weight: 1.0 }
    }

    pub fn weighted(time_since_seroconversion: f64, assay_recent: bool, weight: f64) -> Self {
        Self { time_since_seroconversion, assay_recent, weight }
    }
}

/// Settings for the penalized B-spline logistic smoother.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// End of the evaluation grid in years.
    pub tau_max: f64,
    /// Points on the evaluation grid.
    pub grid_n: usize,
    /// Number of cubic B-spline basis functions.
    pub n_basis: usize,
    /// Candidate smoothing parameters; the AICc minimiser is used.
    pub lambdas: Vec<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        // 10^-2 .. 10^7 in half-decade steps
        let lambdas = (0..=18).map(|i| math::powf(10.0, -2.0 + 0.5 * i as f64)).collect();
        Self { tau_max: DEFAULT_TAU, grid_n: DEFAULT_GRID_N, n_basis: 20, lambdas }
    }
}

/// Fits `q(t)` to calibration records by penalized cubic B-spline logistic
/// regression and tabulates it on a uniform grid over `[0, tau_max]`.
pub fn fit_recency_curve(records: &[CalibrationRecord], config: &FitConfig) -> Result<CalibrationCurve> {
    if config.grid_n < 2 || !(config.tau_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fit grid needs tau_max > 0 and at least 2 points (tau_max = {}, grid_n = {})",
            config.tau_max, config.grid_n
        )));
    }
    if config.n_basis < 4 {
        return Err(Error::InvalidParameter(format!("n_basis must be at least 4, got {}", config.n_basis)));
    }
    if config.lambdas.is_empty() || config.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("smoothing candidates must be positive and nonempty".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if !(r.time_since_seroconversion >= 0.0) || !r.time_since_seroconversion.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "record {i}: time since seroconversion must be a nonnegative number"
            )));
        }
        if !(r.weight >= 0.0) || !r.weight.is_finite() {
            return Err(Error::InvalidParameter(format!("record {i}: weight must be nonnegative")));
        }
    }
    let mut sorted: Vec<CalibrationRecord> =
        records.iter().copied().filter(|r| r.weight > 0.0).collect();
    // fixed order makes the fit independent of input order
    sorted.sort_by(|a, b| {
        a.time_since_seroconversion
            .total_cmp(&b.time_since_seroconversion)
            .then(a.assay_recent.cmp(&b.assay_recent))
            .then(a.weight.total_cmp(&b.weight))
    });
    let distinct = {
        let mut count = 0;
        let mut last = f64::NAN;
        for r in &sorted {
            if r.time_since_seroconversion != last {
                count += 1;
                last = r.time_since_seroconversion;
            }
        }
        count
    };
    let any_recent = sorted.iter().any(|r| r.assay_recent);
    let any_long = sorted.iter().any(|r| !r.assay_recent);
    if !sorted.is_empty() && !(any_recent && any_long) {
        return Err(Error::Separation);
    }
    if distinct < 2 {
        return Err(Error::TooFewDistinctTimes(distinct));
    }
    let times: Vec<f64> = sorted.iter().map(|r| r.time_since_seroconversion).collect();
    let outcomes: Vec<f64> = sorted.iter().map(|r| if r.assay_recent { 1.0 } else { 0.0 }).collect();
    let weights: Vec<f64> = sorted.iter().map(|r| r.weight).collect();
    let t_max_data = times[times.len() - 1];
    let domain = if t_max_data > config.tau_max { t_max_data } else { config.tau_max };
    let fit = smooth::fit_logistic_pspline(&times, &outcomes, &weights, domain, config.n_basis, &config.lambdas)?;
    let grid = math::uniform_grid(config.tau_max, config.grid_n);
    let values = grid
        .iter()
        .map(|&t| fit.predict(t).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
        .collect();
    CalibrationCurve::new(grid, values)
}

/// MDRI in years and whether the curve had to be extended past its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mdri {
    pub years: f64,
    pub extrapolated: bool,
}

/// Ω_r = ∫₀^τ q(t) dt by the trapezoid rule on the curve's own grid.
pub fn mdri(curve: &CalibrationCurve, tau: f64) -> Result<Mdri> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTau(tau));
    }
    Ok(Mdri { years: curve.integral_to(tau), extrapolated: tau > curve.domain_end() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn curve_validation() {
        assert!(CalibrationCurve::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_ok());
        assert!(matches!(
            CalibrationCurve::new(vec![0.1, 1.0], vec![1.0, 0.5]),
            Err(Error::InvalidCurve(_))
        ));
        assert!(CalibrationCurve::new(vec![0.0, 1.0, 1.0], vec![1.0, 0.5, 0.2]).is_err());
        assert!(CalibrationCurve::new(vec![0.0, 1.0], vec![1.2, 0.5]).is_err());
        assert!(CalibrationCurve::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn table_is_sorted_and_duplicates_rejected() {
        let c = CalibrationCurve::from_table(vec![(1.0, 0.2), (0.0, 0.9), (2.0, 0.0)]).unwrap();
        assert_eq!(c.grid(), &[0.0, 1.0, 2.0]);
        assert_abs_diff_eq!(c.eval(0.5), 0.55, epsilon = 1e-15);
        assert!(CalibrationCurve::from_table(vec![(0.0, 0.9), (1.0, 0.2), (1.0, 0.3)]).is_err());
        assert!(CalibrationCurve::from_table(vec![(0.0, 0.9), (1.0, -0.1)]).is_err());
    }

    #[test]
    fn eval_clamps_outside_domain() {
        let c = CalibrationCurve::new(vec![0.0, 2.0], vec![0.8, 0.1]).unwrap();
        assert_eq!(c.eval(-1.0), 0.8);
        assert_eq!(c.eval(5.0), 0.1);
    }

    #[test]
    fn mdri_unit_curve() {
        let c = CalibrationCurve::from_fn(2.0, 11, |_| 1.0).unwrap();
        let m = mdri(&c, 2.0).unwrap();
        assert_abs_diff_eq!(m.years, 2.0, epsilon = 1e-15);
        assert!(!m.extrapolated);
    }

    #[test]
    fn mdri_exponential_closed_form() {
        let c = CalibrationCurve::from_fn(2.0, 2001, |t| math::exp(-6.0 * t)).unwrap();
        let exact = (1.0 - math::exp(-12.0)) / 6.0;
        assert_abs_diff_eq!(mdri(&c, 2.0).unwrap().years, exact, epsilon = 1e-6);
    }

    #[test]
    fn mdri_rejects_nonpositive_tau_and_flags_extrapolation() {
        let c = CalibrationCurve::from_fn(1.0, 11, |_| 0.5).unwrap();
        assert_eq!(mdri(&c, 0.0), Err(Error::NonPositiveTau(0.0)));
        assert!(mdri(&c, -1.0).is_err());
        let m = mdri(&c, 2.0).unwrap();
        assert!(m.extrapolated);
        assert_abs_diff_eq!(m.years, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn reference_default_matches_134_2_days() {
        let c = CalibrationCurve::reference_default();
        let days = mdri(&c, 2.0).unwrap().years * crate::DAYS_PER_YEAR;
        assert_abs_diff_eq!(days, 134.2, epsilon = 1e-3);
    }

    #[test]
    fn reference_params_invariants() {
        assert!(ReferenceParams::new(0.0055, 2.0, 0.3675).is_ok());
        assert!(ReferenceParams::new(1.0, 2.0, 0.3675).is_err());
        assert!(ReferenceParams::new(0.0055, 0.0, 0.3675).is_err());
        assert!(ReferenceParams::new(0.0055, 2.0, 2.5).is_err());
        assert_abs_diff_eq!(ReferenceParams::DEFAULT_BETA, 0.0055, epsilon = 5e-5);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let recs = [CalibrationRecord::new(0.1, true), CalibrationRecord::new(0.2, true)];
        assert_eq!(fit_recency_curve(&recs, &FitConfig::default()), Err(Error::Separation));
        let recs = [CalibrationRecord::new(0.1, true), CalibrationRecord::new(0.1, false)];
        assert_eq!(fit_recency_curve(&recs, &FitConfig::default()), Err(Error::TooFewDistinctTimes(1)));
    }
}

//! Duration integrals Ω_r, Ω_s and Ω_{r,s} over `[0, τ]`.

use alloc::format;
use alloc::vec::Vec;

use crate::calibration::CalibrationCurve;
use crate::math;
use crate::survival::ScreeningSurvival;
use crate::{Error, Result};

/// Upper bound on common-grid intervals when resampling.
const MAX_INTERVALS: usize = 1 << 20;

/// Screening algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    /// Screens out HIV-negative, previously diagnosed (self-report or ARV),
    /// virally suppressed and AIDS-progressed respondents.
    Rita3,
    /// Screens out HIV-negative, ARV-positive and virally suppressed respondents.
    Rita2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DurationSet {
    /// Reference MDRI, ∫ q.
    pub omega_r: f64,
    /// Mean duration screened in, ∫ P(S|T=t,H).
    pub omega_s: f64,
    /// Context-specific MDRI, ∫ q·P(S|T=t,H).
    pub omega_rs: f64,
    pub tau: f64,
    pub variant: Variant,
}

fn check_domain(s: &ScreeningSurvival, tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTau(tau));
    }
    if tau > s.tau() * (1.0 + 1e-12) {
        return Err(Error::DomainExceeded { tau, domain: s.tau() });
    }
    Ok(())
}

/// Ω_s = ∫₀^τ P(S | T = t, H) dt.
pub fn omega_s(s: &ScreeningSurvival, tau: f64) -> Result<f64> {
    check_domain(s, tau)?;
    let grid = s.grid();
    Ok(math::integrate_piecewise_linear(&grid, s.values(), tau))
}

/// Common uniform grid on `[0, τ]` at the finer of the two densities, with
/// both functions resampled onto it.
fn common_grid(q: &CalibrationCurve, s: &ScreeningSurvival, tau: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let h = q.mean_step().min(s.step());
    let intervals = (math::ceil(tau / h * (1.0 - 1e-12)) as usize).clamp(1, MAX_INTERVALS);
    let step = tau / intervals as f64;
    let mut qv = Vec::with_capacity(intervals + 1);
    let mut sv = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let t = if i == intervals { tau } else { i as f64 * step };
        qv.push(q.eval(t));
        sv.push(s.eval(t));
    }
    (step, qv, sv)
}

/// Ω_{r,s} = ∫₀^τ q(t)·P(S | T = t, H) dt.
pub fn omega_rs(q: &CalibrationCurve, s: &ScreeningSurvival, tau: f64) -> Result<f64> {
    check_domain(s, tau)?;
    let (step, qv, sv) = common_grid(q, s, tau);
    let product: Vec<f64> = qv.iter().zip(&sv).map(|(a, b)| a * b).collect();
    Ok(math::trapezoid_uniform(step, &product))
}

/// All three durations on one common grid, with the ordering invariant
/// `0 ≤ Ω_{r,s} ≤ min(Ω_r, Ω_s) ≤ τ` checked.
pub fn duration_set(q: &CalibrationCurve, s: &ScreeningSurvival, tau: f64, variant: Variant) -> Result<DurationSet> {
    check_domain(s, tau)?;
    let (step, qv, sv) = common_grid(q, s, tau);
    let product: Vec<f64> = qv.iter().zip(&sv).map(|(a, b)| a * b).collect();
    let d = DurationSet {
        omega_r: math::trapezoid_uniform(step, &qv),
        omega_s: math::trapezoid_uniform(step, &sv),
        omega_rs: math::trapezoid_uniform(step, &product),
        tau,
        variant,
    };
    let tol = 1e-9 * tau;
    let ok = d.omega_rs >= -tol
        && d.omega_rs <= d.omega_r.min(d.omega_s) + tol
        && d.omega_r.min(d.omega_s) <= tau + tol;
    if !ok {
        return Err(Error::InternalConsistency(format!(
            "duration ordering violated: Ω_rs = {}, Ω_r = {}, Ω_s = {}, τ = {}",
            d.omega_rs, d.omega_r, d.omega_s, tau
        )));
    }
    Ok(d)
}

//! Screening survival `P(S | T = t, H)`: the chance that someone infected `t`
//! years ago is still undiagnosed, built from testing history and AIDS onset,
//! plus the treatment-mediated variant used by RITA2.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Weighted empirical survival with right-continuous steps. The value before
/// the first jump is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepSurvival {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::InvalidSurvival("jump times and values differ in length".into()));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSurvival("jump times must be strictly increasing".into()));
        }
        if jump_times.first().is_some_and(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidSurvival("jump times must be nonnegative".into()));
        }
        let mut prev = 1.0;
        for &v in &values {
            if !(0.0..=prev).contains(&v) {
                return Err(Error::InvalidSurvival(format!(
                    "survival values must be nonincreasing in [0, 1], got {v} after {prev}"
                )));
            }
            prev = v;
        }
        Ok(Self { jump_times, values })
    }

    /// Survival that never drops (nobody is diagnosed through testing).
    pub fn never() -> Self {
        Self { jump_times: Vec::new(), values: Vec::new() }
    }

    /// Builds the weighted empirical survival from `(time, weight)` pairs
    /// already sorted by time. Infinite times never produce a jump.
    pub(crate) fn from_sorted(times: &[f64], weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTotalWeight);
        }
        let mut jump_times = Vec::new();
        let mut values = Vec::new();
        let mut removed = 0.0;
        let mut i = 0;
        while i < times.len() {
            let t = times[i];
            if !t.is_finite() {
                break;
            }
            while i < times.len() && times[i] == t {
                removed += weights[i];
                i += 1;
            }
            jump_times.push(t);
            values.push(((total - removed) / total).clamp(0.0, 1.0));
        }
        Ok(Self { jump_times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&j| j <= t);
        if idx == 0 {
            1.0
        } else {
            self.values[idx - 1]
        }
    }

    /// Values at `n` evenly spaced points over `[0, end]`.
    pub fn eval_uniform(&self, end: f64, n: usize) -> Vec<f64> {
        let step = end / (n - 1) as f64;
        let mut out = Vec::with_capacity(n);
        let mut idx = 0;
        for i in 0..n {
            let t = if i == n - 1 { end } else { i as f64 * step };
            while idx < self.jump_times.len() && self.jump_times[idx] <= t {
                idx += 1;
            }
            out.push(if idx == 0 { 1.0 } else { self.values[idx - 1] });
        }
        out
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `S(t) = Σ wᵢ·1{tᵢ > t} / Σ wᵢ` over reported times since last test.
/// "Never tested" enters as `f64::INFINITY`.
pub fn empirical_test_survival(times_since_last_test: &[(f64, f64)]) -> Result<StepSurvival> {
    if times_since_last_test.is_empty() {
        return Err(Error::EmptySubpopulation);
    }
    for (i, &(t, w)) in times_since_last_test.iter().enumerate() {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time since last test {t} at index {i} is negative")));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("weight {w} at index {i} is invalid")));
        }
    }
    let mut sorted = times_since_last_test.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (times, weights): (Vec<f64>, Vec<f64>) = sorted.into_iter().unzip();
    StepSurvival::from_sorted(&times, &weights)
}

/// Weibull time from seroconversion to AIDS.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AidsSurvival {
    pub scale: f64,
    pub shape: f64,
}

impl Default for AidsSurvival {
    /// Scale 1/0.086 years, shape 2.516 (median 10.052, mean 10.319 years).
    fn default() -> Self {
        Self { scale: 1.0 / 0.086, shape: 2.516 }
    }
}

impl AidsSurvival {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !(shape > 0.0) || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Weibull scale and shape must be positive, got {scale} and {shape}"
            )));
        }
        Ok(Self { scale, shape })
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        math::exp(-math::powf(t / self.scale, self.shape))
    }

    /// Hazard `(k/σ)(t/σ)^(k-1)`.
    pub fn hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.shape < 1.0 { f64::INFINITY } else if self.shape == 1.0 { 1.0 / self.scale } else { 0.0 };
        }
        self.shape / self.scale * math::powf(t / self.scale, self.shape - 1.0)
    }
}

/// `a(t) = exp(-(t/scale)^shape)`.
pub fn aids_survival_at(a: &AidsSurvival, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(a.survival(t))
}

/// `P(S | T = t, H)` tabulated on a uniform grid over `[0, τ]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreeningSurvival {
    tau: f64,
    values: Vec<f64>,
}

impl ScreeningSurvival {
    /// Values on `values.len()` evenly spaced points over `[0, tau]`; must lie
    /// in [0, 1] and be nonincreasing.
    pub fn from_values(tau: f64, values: Vec<f64>) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::NonPositiveTau(tau));
        }
        if values.len() < 2 {
            return Err(Error::InvalidSurvival(format!("need at least 2 grid points, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidSurvival(format!("value {v} outside [0, 1]")));
        }
        // allow rounding-level increases from products and convolutions
        if let Some(i) = (1..values.len()).find(|&i| values[i] > values[i - 1] + 1e-12) {
            return Err(Error::InvalidSurvival(format!(
                "not nonincreasing at grid index {i}: {} then {}",
                values[i - 1],
                values[i]
            )));
        }
        Ok(Self { tau, values })
    }

    /// `P(S | T = t, H) ≡ 1` (no screening).
    pub fn unscreened(tau: f64, grid_n: usize) -> Result<Self> {
        Self::from_values(tau, alloc::vec![1.0; grid_n.max(2)])
    }

    pub fn from_fn(tau: f64, grid_n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid_n < 2 {
            return Err(Error::InvalidSurvival(format!("need at least 2 grid points, got {grid_n}")));
        }
        let values = math::uniform_grid(tau, grid_n).into_iter().map(f).collect();
        Self::from_values(tau, values)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.tau / (self.values.len() - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        math::uniform_grid(self.tau, self.values.len())
    }

    pub fn eval(&self, t: f64) -> f64 {
        math::interp_uniform(self.step(), &self.values, t)
    }

    /// Applies `f` pointwise to the values, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.tau, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// `P(S | T = t, H) = a(t)·d(t)` on `grid_n` points over `[0, τ]`.
/// Passing `None` for `a` leaves AIDS progression out (a ≡ 1).
pub fn screening_survival(
    d: &StepSurvival,
    a: Option<&AidsSurvival>,
    tau: f64,
    grid_n: usize,
) -> Result<ScreeningSurvival> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveTau(tau));
    }
    if grid_n < 2 {
        return Err(Error::InvalidParameter(format!("grid_n must be at least 2, got {grid_n}")));
    }
    let mut values = d.eval_uniform(tau, grid_n);
    if let Some(a) = a {
        let step = tau / (grid_n - 1) as f64;
        for (i, v) in values.iter_mut().enumerate() {
            let t = if i == grid_n - 1 { tau } else { i as f64 * step };
            *v *= a.survival(t);
        }
    }
    ScreeningSurvival::from_values(tau, values)
}

/// `w(t)`: probability of being on treatment `t` years after diagnosis,
/// piecewise linear and clamped outside its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentUptake {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TreatmentUptake {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidParameter("treatment uptake needs matching nonempty grid and values".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] >= 0.0) {
            return Err(Error::InvalidParameter("treatment uptake grid must be nonnegative and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("treatment uptake value {v} outside [0, 1]")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_table(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (grid, values) = rows.into_iter().unzip();
        Self::new(grid, values)
    }

    /// Constant uptake `w ≡ value`; `1` means treatment starts at diagnosis.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0], alloc::vec![value])
    }

    pub fn from_fn(end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(end > 0.0) {
            return Err(Error::InvalidParameter("treatment uptake grid needs end > 0 and n ≥ 2".into()));
        }
        let grid = math::uniform_grid(end, n);
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.grid.len() == 1 {
            return self.values[0];
        }
        math::interp_clamped(&self.grid, &self.values, t)
    }
}

/// RITA2 screening survival
/// `P(S_Tr | T = t, H) = 1 + ∫₀ᵗ w(t − x) dP(S | T = x, H)`.
///
/// The measure `dP` is the backward first difference on the grid of `s`, with
/// `w` taken at the interval midpoint; the drop from 1 to `s(0)` counts as a
/// jump at 0. The result is clamped to `[s(t), 1]`.
pub fn treatment_screening_survival(s: &ScreeningSurvival, w: &TreatmentUptake) -> Result<ScreeningSurvival> {
    let n = s.values.len();
    let step = s.step();
    // w on the lag grid: lag_mid[k] = w((k + 1/2)·step), lag_zero[k] = w(k·step)
    let w_mid: Vec<f64> = (0..n).map(|k| w.eval((k as f64 + 0.5) * step)).collect();
    let w_at: Vec<f64> = (0..n).map(|k| w.eval(k as f64 * step)).collect();
    let mut dp = Vec::with_capacity(n);
    dp.push(s.values[0] - 1.0);
    for i in 1..n {
        dp.push(s.values[i] - s.values[i - 1]);
    }
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        // jump at 0 sits at lag t_j; interval (x_{i-1}, x_i] has midpoint lag (j - i + 1/2)·step
        let mut acc = w_at[j] * dp[0];
        for i in 1..=j {
            acc += w_mid[j - i] * dp[i];
        }
        let v = (1.0 + acc).clamp(s.values[j], 1.0);
        out.push(v);
    }
    // clamping can leave rounding-level rises; enforce monotonicity
    for j in 1..n {
        if out[j] > out[j - 1] {
            out[j] = out[j - 1].max(s.values[j]);
        }
    }
    ScreeningSurvival::from_values(s.tau, out)
}

//! Synthetic survey cohort with known constant incidence.
//!
//! Each respondent is generated from its own ChaCha8 stream (`seed`, stream
//! `i`), so respondent `i` does not depend on how many others are generated or
//! in which order.
//!
//! Generative process, times measured backwards from the survey moment:
//! * HIV status and infection time `T`: with probability `p_h_baseline` an
//!   infection older than the horizon (`T ~ U(τ_sim, 2τ_sim)`); with
//!   probability `λ·τ_sim·(1 − P(H))` an infection within the horizon
//!   (`T ~ U(0, τ_sim)`), which is the constant-incidence density
//!   `λ·(1 − P(H))` per year; otherwise HIV-negative.
//! * Testing: a never-testing fraction, otherwise a Poisson testing process
//!   with a rate drawn from the mixture. The first test after infection comes
//!   `F ~ Exp(r)` later; time since last test is exponential for
//!   HIV-negatives.
//! * Diagnosis at `min(F, A)` with `A` the Weibull AIDS time; treatment starts
//!   after the configured delay and suppresses viral load.
//! * Assay recency `Bernoulli(q(T))` for `T < τ`, `Bernoulli(frr_true)` after.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::calibration::{CalibrationCurve, ReferenceParams, DEFAULT_GRID_N, DEFAULT_TAU};
use crate::durations::{DurationSet, Variant};
use crate::estimators::residual_frr;
use crate::ingestion::{LastTest, ProportionSet, ReplicateWeights, Respondent, SurveyDataset};
use crate::math;
use crate::survival::{AidsSurvival, TreatmentUptake};
use crate::{Error, Result};

/// Time from diagnosis to treatment start.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TreatmentDelay {
    Instant,
    Fixed(f64),
    Exponential { mean: f64 },
}

impl TreatmentDelay {
    /// `w(t) = P(delay ≤ t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            TreatmentDelay::Instant => 1.0,
            TreatmentDelay::Fixed(d) => {
                if t >= d {
                    1.0
                } else {
                    0.0
                }
            }
            TreatmentDelay::Exponential { mean } => {
                if t <= 0.0 {
                    0.0
                } else {
                    1.0 - math::exp(-t / mean)
                }
            }
        }
    }

    /// Treatment uptake `w(t)` implied by the delay distribution, for RITA2.
    pub fn uptake(&self) -> TreatmentUptake {
        let w = match *self {
            TreatmentDelay::Instant => TreatmentUptake::constant(1.0),
            TreatmentDelay::Fixed(d) if d == 0.0 => TreatmentUptake::constant(1.0),
            TreatmentDelay::Fixed(d) => TreatmentUptake::new(vec![0.0, d, d * (1.0 + 1e-9)], vec![0.0, 0.0, 1.0]),
            TreatmentDelay::Exponential { mean } => TreatmentUptake::from_fn(20.0 * mean, 20_001, |t| self.cdf(t)),
        };
        w.expect("valid delay gives a valid uptake")
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TreatmentDelay::Instant => true,
            TreatmentDelay::Fixed(d) => d >= 0.0 && d.is_finite(),
            TreatmentDelay::Exponential { mean } => mean > 0.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSimConfig(format!("invalid treatment delay {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_respondents: usize,
    pub lambda_true: f64,
    /// Prevalence of infections older than `tau_sim`.
    pub p_h_baseline: f64,
    /// Horizon for infection times, years.
    pub tau_sim: f64,
    /// Recency cutoff used for the assay and the truth, years.
    pub tau: f64,
    pub q_curve: CalibrationCurve,
    /// `(rate per year, weight)` among testers; weights sum to 1.
    pub test_rate_mixture: Vec<(f64, f64)>,
    pub never_test_fraction: f64,
    pub aids: AidsSurvival,
    pub treatment_delay: TreatmentDelay,
    pub frr_true: f64,
    /// Delete-one-group jackknife groups; `0` writes no replicate weights.
    pub groups: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_respondents: 100_000,
            lambda_true: 0.01,
            p_h_baseline: 0.10,
            tau_sim: 10.0,
            tau: DEFAULT_TAU,
            q_curve: CalibrationCurve::reference_default(),
            test_rate_mixture: vec![(0.1, 0.4), (0.5, 0.4), (2.0, 0.2)],
            never_test_fraction: 0.2,
            aids: AidsSurvival::default(),
            treatment_delay: TreatmentDelay::Instant,
            frr_true: ReferenceParams::DEFAULT_BETA,
            groups: 50,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidSimConfig(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_respondents == 0 {
            return bad("n_respondents must be positive".into());
        }
        if !(self.lambda_true >= 0.0) || !self.lambda_true.is_finite() {
            return bad(format!("lambda_true must be nonnegative, got {}", self.lambda_true));
        }
        if !prob(self.p_h_baseline) || self.p_h_baseline >= 1.0 {
            return bad(format!("p_h_baseline must lie in [0, 1), got {}", self.p_h_baseline));
        }
        if !(self.tau > 0.0) || !(self.tau_sim >= self.tau) || !self.tau_sim.is_finite() {
            return bad(format!("need 0 < tau ≤ tau_sim, got tau {} and tau_sim {}", self.tau, self.tau_sim));
        }
        if self.q_curve.domain_end() < self.tau {
            return bad(format!("q curve ends at {} before tau {}", self.q_curve.domain_end(), self.tau));
        }
        if self.test_rate_mixture.is_empty() {
            return bad("test_rate_mixture is empty".into());
        }
        if let Some(&(r, w)) =
            self.test_rate_mixture.iter().find(|(r, w)| !(*r > 0.0) || !r.is_finite() || !prob(*w))
        {
            return bad(format!("mixture component ({r}, {w}) needs rate > 0 and weight in [0, 1]"));
        }
        let total: f64 = self.test_rate_mixture.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("mixture weights sum to {total}, not 1"));
        }
        if !prob(self.never_test_fraction) || !prob(self.frr_true) {
            return bad("never_test_fraction and frr_true must be probabilities".into());
        }
        if self.groups == 1 || self.groups > self.n_respondents || self.groups > u32::MAX as usize {
            return bad(format!("groups must be 0 or in [2, n_respondents], got {}", self.groups));
        }
        self.treatment_delay.validate()
    }

    /// HIV prevalence `(p_long + λτ_sim)/(1 + λτ_sim)`.
    pub fn prevalence(&self) -> f64 {
        let m = self.lambda_true * self.tau_sim;
        (self.p_h_baseline + m) / (1.0 + m)
    }

    /// Population-level `d(t)`: never-testers plus the mixture of
    /// exponential first-test survivals.
    pub fn test_survival(&self, t: f64) -> f64 {
        let testers = 1.0 - self.never_test_fraction;
        self.never_test_fraction
            + testers * self.test_rate_mixture.iter().map(|&(r, w)| w * math::exp(-r * t)).sum::<f64>()
    }

    // Density of time to diagnosis, -d/dt [a(t)·d(t)].
    fn diagnosis_density(&self, t: f64) -> f64 {
        let testers = 1.0 - self.never_test_fraction;
        let d_rate: f64 = testers * self.test_rate_mixture.iter().map(|&(r, w)| w * r * math::exp(-r * t)).sum::<f64>();
        self.aids.survival(t) * (self.aids.hazard(t) * self.test_survival(t) + d_rate)
    }
}

/// Unobserved quantities of one simulated respondent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latent {
    /// Years since infection, `None` for HIV-negative.
    pub infection_years: Option<f64>,
    pub diagnosed: bool,
    pub treated: bool,
    /// Jackknife group.
    pub group: u32,
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        -math::ln(1.0 - self.uniform()) / rate
    }
}

/// Generates respondents one at a time; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    base: ChaCha8Rng,
    p_h: f64,
    cumulative_rates: Vec<(f64, f64)>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let base = ChaCha8Rng::seed_from_u64(cfg.seed);
        let p_h = cfg.prevalence();
        let mut acc = 0.0;
        let cumulative_rates =
            cfg.test_rate_mixture.iter().map(|&(r, w)| {
                acc += w;
                (acc, r)
            })
            .collect();
        Ok(Self { cfg, base, p_h, cumulative_rates })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Respondent `i`, independent of every other index.
    pub fn respondent(&self, i: u64) -> (Respondent, Latent) {
        let cfg = &self.cfg;
        let mut rng = self.base.clone();
        rng.set_stream(i);
        rng.set_word_pos(0);
        let mut g = Stream(rng);
        // fixed draw order keeps streams aligned across configurations
        let u_cat = g.uniform();
        let u_t = g.uniform();
        let u_never = g.uniform();
        let u_rate = g.uniform();
        let f_raw = g.exponential(1.0);
        let e_raw = g.exponential(1.0);
        let e2_raw = g.exponential(1.0);
        let a_raw = g.exponential(1.0);
        let delay_raw = g.exponential(1.0);
        let u_vl = g.uniform();
        let u_recent = g.uniform();
        let u_group = g.uniform();

        let group = if cfg.groups == 0 { 0 } else { ((u_group * cfg.groups as f64) as u32).min(cfg.groups as u32 - 1) };
        let never = u_never < cfg.never_test_fraction;
        let rate = self.cumulative_rates.iter().find(|(c, _)| u_rate < *c).unwrap_or(self.cumulative_rates.last().expect("nonempty")).1;

        let p_recent_horizon = cfg.lambda_true * cfg.tau_sim * (1.0 - self.p_h);
        let infection = if u_cat < cfg.p_h_baseline {
            Some(cfg.tau_sim * (1.0 + u_t))
        } else if u_cat < cfg.p_h_baseline + p_recent_horizon {
            Some(cfg.tau_sim * u_t)
        } else {
            None
        };

        let Some(t) = infection else {
            let tslt = if never { LastTest::Never } else { LastTest::Years(e_raw / rate) };
            let r = Respondent { time_since_last_test: Some(tslt), ..Respondent::negative(1.0) };
            return (r, Latent { infection_years: None, diagnosed: false, treated: false, group });
        };

        let first_test = if never { f64::INFINITY } else { f_raw / rate };
        let aids_time = cfg.aids.scale * math::powf(a_raw, 1.0 / cfg.aids.shape);
        let tslt = if never {
            LastTest::Never
        } else if first_test >= t {
            LastTest::Years(t + e_raw / rate)
        } else {
            LastTest::Years((e2_raw / rate).min(t - first_test))
        };
        let diagnosis = first_test.min(aids_time);
        let diagnosed = diagnosis < t;
        let delay = match cfg.treatment_delay {
            TreatmentDelay::Instant => 0.0,
            TreatmentDelay::Fixed(d) => d,
            TreatmentDelay::Exponential { mean } => mean * delay_raw,
        };
        let treated = diagnosed && t - diagnosis >= delay;
        let log_vl = if treated { 1.0 + 1.5 * u_vl } else { 3.5 + 2.0 * u_vl };
        let p_recent = if t < cfg.tau { cfg.q_curve.eval(t) } else { cfg.frr_true };
        let r = Respondent {
            hiv_positive: Some(true),
            assay_recent: Some(u_recent < p_recent),
            viral_load: Some(math::powf(10.0, log_vl)),
            arv_detected: Some(treated),
            self_report_diagnosed: Some(diagnosed),
            aids: Some(aids_time < t),
            time_since_last_test: Some(tslt),
            weight: 1.0,
        };
        (r, Latent { infection_years: Some(t), diagnosed, treated, group })
    }

    /// Assembles a dataset from respondents produced in index order.
    pub fn assemble(&self, rows: Vec<(Respondent, Latent)>) -> Result<SimOutput> {
        let (respondents, latent): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let replicates = if self.cfg.groups == 0 {
            ReplicateWeights::None
        } else {
            ReplicateWeights::DeleteOneGroup {
                groups: self.cfg.groups,
                group_of: latent.iter().map(|l: &Latent| l.group).collect(),
            }
        };
        let dataset = SurveyDataset::new(respondents, replicates)?;
        Ok(SimOutput { dataset, truth: analytic_truth(&self.cfg)?, latent })
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: SurveyDataset,
    pub truth: SimTruth,
    pub latent: Vec<Latent>,
}

/// Config-implied quantities for one screening variant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariantTruth {
    pub durations: DurationSet,
    pub proportions: ProportionSet,
    /// FRR among screened-in long-term infections.
    pub residual_frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimTruth {
    pub lambda_true: f64,
    pub p_h: f64,
    pub beta: f64,
    pub tau: f64,
    pub rita3: VariantTruth,
    pub rita2: VariantTruth,
    /// `d(t)` on `d_grid_n` uniform points over `[0, τ]`.
    pub d_values: Vec<f64>,
}

impl SimTruth {
    pub fn variant(&self, v: Variant) -> &VariantTruth {
        match v {
            Variant::Rita3 => &self.rita3,
            Variant::Rita2 => &self.rita2,
        }
    }

    /// `d(t)` by linear interpolation of the tabulated values.
    pub fn d(&self, t: f64) -> f64 {
        let step = self.tau / (self.d_values.len() - 1) as f64;
        math::interp_uniform(step, &self.d_values, t)
    }
}

/// Composite Simpson rule with `n` (made even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

const SIMPSON_PER_YEAR: usize = 4000;

// Screening survival after treatment, P(D + delay > t), tabulated on a
// uniform grid fine enough for Simpson integration of the result.
struct TreatedSurvival {
    step: f64,
    values: Vec<f64>,
}

impl TreatedSurvival {
    fn new(cfg: &SimConfig, end: f64) -> Self {
        let n = (end * SIMPSON_PER_YEAR as f64) as usize;
        let step = end / n as f64;
        let s = |t: f64| cfg.aids.survival(t) * cfg.test_survival(t);
        let values = match cfg.treatment_delay {
            TreatmentDelay::Instant => (0..=n).map(|i| s(i as f64 * step)).collect(),
            TreatmentDelay::Fixed(d) => (0..=n)
                .map(|i| {
                    let t = i as f64 * step;
                    if t < d {
                        1.0
                    } else {
                        s(t - d)
                    }
                })
                .collect(),
            TreatmentDelay::Exponential { mean } => {
                // s_tr(t) = s(t) + G(t), G(t) = ∫₀ᵗ f_D(x)·e^{-(t-x)/mean} dx,
                // advanced interval by interval with Simpson's rule
                let decay = math::exp(-step / mean);
                let mut g = 0.0;
                let mut out = Vec::with_capacity(n + 1);
                out.push(1.0);
                for i in 1..=n {
                    let t0 = (i - 1) as f64 * step;
                    let t1 = i as f64 * step;
                    let k = |x: f64| cfg.diagnosis_density(x) * math::exp(-(t1 - x) / mean);
                    let inc = simpson(k, t0, t1, 8);
                    g = g * decay + inc;
                    out.push((s(t1) + g).min(1.0));
                }
                out
            }
        };
        Self { step, values }
    }

    fn eval(&self, t: f64) -> f64 {
        math::interp_uniform(self.step, &self.values, t)
    }
}

/// Durations, expected proportions and residual FRR implied by `cfg`,
/// computed by Simpson quadrature of the closed-form survival functions.
pub fn analytic_truth(cfg: &SimConfig) -> Result<SimTruth> {
    cfg.validate()?;
    let lambda = cfg.lambda_true;
    let p_h = cfg.prevalence();
    let tau = cfg.tau;
    let ts = cfg.tau_sim;
    let beta = cfg.frr_true;
    let q = |t: f64| cfg.q_curve.eval(t);
    let n_tau = (tau * SIMPSON_PER_YEAR as f64) as usize;
    let n_ts = (ts * SIMPSON_PER_YEAR as f64) as usize;
    let incident = lambda * (1.0 - p_h);
    let omega_r = simpson(q, 0.0, tau, n_tau);
    let reference = ReferenceParams::new(beta.max(f64::MIN_POSITIVE), tau, omega_r)?;
    // P(R | H) does not depend on screening
    let p_r = incident * (omega_r + beta * (ts - tau)) + cfg.p_h_baseline * beta;
    let p_r_given_h = if p_h > 0.0 { Some(p_r / p_h) } else { None };

    let treated = TreatedSurvival::new(cfg, 2.0 * ts);
    let s3 = |t: f64| cfg.aids.survival(t) * cfg.test_survival(t);
    let s2 = |t: f64| treated.eval(t);

    let variant_truth = |variant: Variant, s: &dyn Fn(f64) -> f64| -> Result<VariantTruth> {
        let omega_s = simpson(s, 0.0, tau, n_tau);
        let omega_rs = simpson(|t| q(t) * s(t), 0.0, tau, n_tau);
        let s_late = simpson(s, tau, ts, n_ts);
        let s_long = simpson(s, ts, 2.0 * ts, n_ts) / ts;
        let p_s = incident * (omega_s + s_late) + cfg.p_h_baseline * s_long;
        let p_rs = incident * (omega_rs + beta * s_late) + cfg.p_h_baseline * beta * s_long;
        let durations = DurationSet { omega_r, omega_s, omega_rs, tau, variant };
        let (p_s_given_h, p_r_given_s) =
            (if p_h > 0.0 { p_s / p_h } else { 0.0 }, if p_s > 0.0 { p_rs / p_s } else { 0.0 });
        let proportions =
            ProportionSet::new(p_h, p_s_given_h, p_r_given_s, p_r_given_h, cfg.n_respondents as f64)?;
        let residual = if beta > 0.0 && p_h > 0.0 {
            residual_frr(&proportions, lambda, &reference, &durations)?
        } else {
            0.0
        };
        Ok(VariantTruth { durations, proportions, residual_frr: residual })
    };
    let rita3 = variant_truth(Variant::Rita3, &s3)?;
    let rita2 = variant_truth(Variant::Rita2, &s2)?;
    let d_values = math::uniform_grid(tau, DEFAULT_GRID_N).iter().map(|&t| cfg.test_survival(t)).collect();
    Ok(SimTruth { lambda_true: lambda, p_h, beta, tau, rita3, rita2, d_values })
}

/// Generates the whole cohort sequentially.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    let sim = Simulator::new(cfg.clone())?;
    let rows = (0..cfg.n_respondents as u64).map(|i| sim.respondent(i)).collect();
    sim.assemble(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::durations::duration_set;
    use crate::ingestion::{screen, ScreeningConfig};
    use crate::survival::{treatment_screening_survival, ScreeningSurvival};
    use approx::assert_relative_eq;

    fn small(n: usize) -> SimConfig {
        SimConfig { n_respondents: n, groups: 2, ..SimConfig::default() }
    }

    #[test]
    fn respondents_are_index_addressable() {
        let sim = Simulator::new(small(100)).unwrap();
        let a = sim.respondent(42);
        let b = Simulator::new(small(5)).unwrap().respondent(42);
        assert_eq!(a, b);
        assert_ne!(sim.respondent(41), a);
    }

    #[test]
    fn simulate_is_deterministic() {
        let a = simulate(&small(2000)).unwrap();
        let b = simulate(&small(2000)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = simulate(&SimConfig { seed: 2, ..small(2000) }).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cases = [
            SimConfig { test_rate_mixture: vec![(0.5, 0.7)], ..small(10) },
            SimConfig { test_rate_mixture: vec![(0.0, 1.0)], ..small(10) },
            SimConfig { lambda_true: -0.1, ..small(10) },
            SimConfig { tau_sim: 1.0, ..small(10) },
            SimConfig { groups: 1, ..small(10) },
            SimConfig { treatment_delay: TreatmentDelay::Exponential { mean: 0.0 }, ..small(10) },
        ];
        for c in cases {
            assert!(matches!(simulate(&c), Err(Error::InvalidSimConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn no_recent_infections_means_recency_at_frr() {
        let cfg = SimConfig { lambda_true: 0.0, p_h_baseline: 0.3, frr_true: 0.05, ..small(40_000) };
        let out = simulate(&cfg).unwrap();
        let mut pos = 0.0;
        let mut rec = 0.0;
        for r in out.dataset.respondents() {
            if r.hiv_positive == Some(true) {
                pos += 1.0;
                rec += f64::from(u8::from(r.assay_recent == Some(true)));
            }
        }
        let p = rec / pos;
        let se = (0.05 * 0.95 / pos).sqrt();
        assert!((p - 0.05).abs() < 4.0 * se, "{p}");
        assert!(out.latent.iter().all(|l| l.infection_years.map_or(true, |t| t >= cfg.tau_sim)));
    }

    #[test]
    fn without_frr_recent_screened_in_are_recent_infections() {
        let cfg = SimConfig { frr_true: 0.0, lambda_true: 0.05, ..small(20_000) };
        let out = simulate(&cfg).unwrap();
        let sc = ScreeningConfig::default();
        for (r, l) in out.dataset.respondents().iter().zip(&out.latent) {
            if r.assay_recent == Some(true) && screen(r, Variant::Rita3, &sc).unwrap() {
                assert!(l.infection_years.unwrap() < cfg.tau);
            }
        }
    }

    #[test]
    fn truth_durations_match_trapezoid_path() {
        let cfg = small(10);
        let truth = analytic_truth(&cfg).unwrap();
        let s = ScreeningSurvival::from_fn(cfg.tau, 20_001, |t| cfg.aids.survival(t) * cfg.test_survival(t)).unwrap();
        let d3 = duration_set(&cfg.q_curve, &s, cfg.tau, Variant::Rita3).unwrap();
        assert_relative_eq!(d3.omega_s, truth.rita3.durations.omega_s, max_relative = 1e-6);
        assert_relative_eq!(d3.omega_rs, truth.rita3.durations.omega_rs, max_relative = 1e-5);
        assert_relative_eq!(d3.omega_r, truth.rita3.durations.omega_r, max_relative = 1e-5);
        // instant treatment: RITA2 screening coincides with RITA3
        assert_eq!(truth.rita2.durations.omega_s, truth.rita3.durations.omega_s);
        assert_relative_eq!(truth.rita2.proportions.p_s, truth.rita3.proportions.p_s, max_relative = 1e-9);
    }

    #[test]
    fn delayed_treatment_truth_matches_convolution() {
        for delay in [TreatmentDelay::Fixed(0.5), TreatmentDelay::Exponential { mean: 0.5 }] {
            let cfg = SimConfig { treatment_delay: delay, ..small(10) };
            let truth = analytic_truth(&cfg).unwrap();
            let s = ScreeningSurvival::from_fn(cfg.tau, 4001, |t| cfg.aids.survival(t) * cfg.test_survival(t)).unwrap();
            let s_tr = treatment_screening_survival(&s, &delay.uptake()).unwrap();
            let d2 = duration_set(&cfg.q_curve, &s_tr, cfg.tau, Variant::Rita2).unwrap();
            assert_relative_eq!(d2.omega_s, truth.rita2.durations.omega_s, max_relative = 2e-3);
            assert!(truth.rita2.durations.omega_s > truth.rita3.durations.omega_s);
        }
    }

    #[test]
    fn truth_is_self_consistent() {
        let truth = analytic_truth(&small(10)).unwrap();
        let p = truth.rita3.proportions;
        let d = truth.rita3.durations;
        let lambda = (p.p_r_given_s - truth.beta) * p.p_s / ((1.0 - p.p_h) * (d.omega_rs - truth.beta * d.omega_s));
        assert_relative_eq!(lambda, 0.01, max_relative = 1e-9);
        assert!(truth.rita3.residual_frr < truth.beta);
        assert_relative_eq!(truth.d(0.0), 1.0);
    }
}

//! End-to-end estimation for one weight vector: testing history → `d̂(t)` →
//! screening survival → durations → proportions → incidence and residual FRR.
//!
//! [`PreparedPipeline`] classifies respondents and sorts the testing history
//! once, so each replicate evaluation is a few weighted passes over the data.

use alloc::vec;
use alloc::vec::Vec;

use crate::calibration::{mdri, CalibrationCurve, ReferenceParams, DEFAULT_GRID_N, DEFAULT_TAU};
use crate::durations::{duration_set, DurationSet, Variant};
use crate::estimators::{
    self, historical_incidence, naive_incidence, rita_incidence, standard_rita_incidence, IncidenceResult, Method,
    HISTORICAL_MDRI_YEARS,
};
use crate::ingestion::{
    classify, testing_history_index, Classified, ProportionSet, ScreeningConfig, SurveyDataset, TestingPopulation,
    WeightSel,
};
use crate::sensitivity::{sensitivity_sweep, SensitivityInputs, SensitivityReport};
use crate::survival::{screening_survival, treatment_screening_survival, AidsSurvival, ScreeningSurvival, StepSurvival, TreatmentUptake};
use crate::variance::{dropped_warning, jackknife_se, partition_replicates, JackknifeConfig};
use crate::{Error, Result, Warning};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub curve: CalibrationCurve,
    pub beta: f64,
    pub tau: f64,
    /// Screening used by the naive, historical and standard methods and by the
    /// sensitivity sweep.
    pub variant: Variant,
    pub screening: ScreeningConfig,
    pub testing_population: TestingPopulation,
    /// `None` leaves AIDS progression out of `P(S | T = t, H)`.
    pub aids: Option<AidsSurvival>,
    pub grid_n: usize,
    /// `w(t)` for RITA2.
    pub treatment: TreatmentUptake,
    pub methods: Vec<Method>,
    pub historical_mdri: f64,
    pub historical_frr: f64,
    /// Reuse the main-weight durations for every replicate.
    pub freeze_durations: bool,
    pub jackknife: JackknifeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            curve: CalibrationCurve::reference_default(),
            beta: ReferenceParams::DEFAULT_BETA,
            tau: DEFAULT_TAU,
            variant: Variant::Rita3,
            screening: ScreeningConfig::default(),
            testing_population: TestingPopulation::default(),
            aids: Some(AidsSurvival::default()),
            grid_n: DEFAULT_GRID_N,
            treatment: TreatmentUptake::constant(1.0).expect("valid"),
            methods: vec![Method::Rita3],
            historical_mdri: HISTORICAL_MDRI_YEARS,
            historical_frr: 0.0,
            freeze_durations: false,
            jackknife: JackknifeConfig::Jk1,
        }
    }
}

/// Everything computed for one weight vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineOutput {
    /// One entry per configured method, in configuration order.
    pub results: Vec<IncidenceResult>,
    /// `P(S | T = t, H)` (RITA3 screening survival).
    pub screening: ScreeningSurvival,
    pub durations_rita3: Option<DurationSet>,
    pub durations_rita2: Option<DurationSet>,
    pub proportions_rita3: Option<ProportionSet>,
    pub proportions_rita2: Option<ProportionSet>,
}

impl PipelineOutput {
    pub fn result(&self, method: Method) -> Option<&IncidenceResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Jackknife standard errors for one method.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodSe {
    pub method: Method,
    pub lambda: f64,
    pub residual_frr: Option<f64>,
    pub mdri_used: Option<f64>,
    pub omega_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub output: PipelineOutput,
    /// Empty when the dataset carries no replicate weights.
    pub standard_errors: Vec<MethodSe>,
    pub replicates_used: usize,
    pub replicates_total: usize,
    pub warnings: Vec<Warning>,
}

impl EstimateReport {
    pub fn se(&self, method: Method) -> Option<&MethodSe> {
        self.standard_errors.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Clone)]
pub struct PreparedPipeline<'a> {
    data: &'a SurveyDataset,
    config: &'a PipelineConfig,
    reference: ReferenceParams,
    rita3: Option<Classified>,
    rita2: Option<Classified>,
    history_idx: Vec<u32>,
    history_times: Vec<f64>,
}

impl<'a> PreparedPipeline<'a> {
    pub fn new(data: &'a SurveyDataset, config: &'a PipelineConfig) -> Result<Self> {
        if config.methods.is_empty() {
            return Err(Error::InvalidParameter("no estimation method selected".into()));
        }
        let reference = ReferenceParams::from_curve(&config.curve, config.beta, config.tau)?;
        let needs = |v: Variant| {
            config.methods.iter().any(|m| match m {
                Method::Rita3 => v == Variant::Rita3,
                Method::Rita2 => v == Variant::Rita2,
                _ => v == config.variant,
            })
        };
        let rita3 = needs(Variant::Rita3).then(|| classify(data, Variant::Rita3, &config.screening)).transpose()?;
        let rita2 = needs(Variant::Rita2).then(|| classify(data, Variant::Rita2, &config.screening)).transpose()?;
        let (history_idx, history_times) = testing_history_index(data, config.testing_population, &config.screening)?;
        Ok(Self { data, config, reference, rita3, rita2, history_idx, history_times })
    }

    pub fn reference(&self) -> &ReferenceParams {
        &self.reference
    }

    pub fn replicate_count(&self) -> usize {
        self.data.replicate_count()
    }

    fn classified(&self, v: Variant) -> &Classified {
        match v {
            Variant::Rita3 => self.rita3.as_ref(),
            Variant::Rita2 => self.rita2.as_ref(),
        }
        .expect("classified for every variant in use")
    }

    /// `d̂(t)` for one weight vector.
    pub fn test_survival(&self, sel: WeightSel) -> Result<StepSurvival> {
        self.data.check_sel(sel)?;
        let weights: Vec<f64> = self.history_idx.iter().map(|&i| self.data.weight(i as usize, sel)).collect();
        StepSurvival::from_sorted(&self.history_times, &weights)
    }

    pub fn screening_survival(&self, sel: WeightSel) -> Result<ScreeningSurvival> {
        let d = self.test_survival(sel)?;
        screening_survival(&d, self.config.aids.as_ref(), self.config.tau, self.config.grid_n)
    }

    pub fn evaluate_main(&self) -> Result<PipelineOutput> {
        self.evaluate(WeightSel::Main, None)
    }

    /// Replicate `k`; with `freeze_durations` the durations of `main` are reused.
    pub fn evaluate_replicate(&self, k: usize, main: &PipelineOutput) -> Result<PipelineOutput> {
        let frozen = self.config.freeze_durations.then_some(main);
        self.evaluate(WeightSel::Replicate(k), frozen)
    }

    pub fn evaluate(&self, sel: WeightSel, frozen: Option<&PipelineOutput>) -> Result<PipelineOutput> {
        let cfg = self.config;
        let (screening, durations_rita3, durations_rita2) = match frozen {
            Some(f) => (f.screening.clone(), f.durations_rita3, f.durations_rita2),
            None => {
                let s = self.screening_survival(sel)?;
                let d3 = self.rita3.is_some().then(|| duration_set(&cfg.curve, &s, cfg.tau, Variant::Rita3)).transpose()?;
                let d2 = if self.rita2.is_some() {
                    let s_tr = treatment_screening_survival(&s, &cfg.treatment)?;
                    Some(duration_set(&cfg.curve, &s_tr, cfg.tau, Variant::Rita2)?)
                } else {
                    None
                };
                (s, d3, d2)
            }
        };
        let proportions_rita3 = self.rita3.as_ref().map(|c| c.proportions(self.data, sel)).transpose()?;
        let proportions_rita2 = self.rita2.as_ref().map(|c| c.proportions(self.data, sel)).transpose()?;
        let pick = |v: Variant| match v {
            Variant::Rita3 => (proportions_rita3.expect("rita3 prepared"), durations_rita3.expect("rita3 prepared")),
            Variant::Rita2 => (proportions_rita2.expect("rita2 prepared"), durations_rita2.expect("rita2 prepared")),
        };
        let mut results = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let result = match method {
                Method::Rita3 | Method::Rita2 => {
                    let v = if method == Method::Rita3 { Variant::Rita3 } else { Variant::Rita2 };
                    let (p, d) = pick(v);
                    self.rita_with_frr(&p, &d)?
                }
                Method::StandardRita => {
                    let (p, d) = pick(cfg.variant);
                    let rita = self.rita_with_frr(&p, &d)?;
                    let frr = rita.residual_frr.expect("set by rita_with_frr");
                    let mut r = standard_rita_incidence(p.p_rs_given_h, p.p_h, frr, d.omega_rs, d.tau)?;
                    r.durations = Some(d);
                    r.proportions = Some(p);
                    r
                }
                Method::Naive => {
                    let p = self.classified(cfg.variant).proportions(self.data, sel)?;
                    let p_r_given_h = p.p_r_given_h.ok_or(Error::RecencyUnavailable)?;
                    let mut r = naive_incidence(p_r_given_h, p.p_h, &self.reference)?;
                    r.proportions = Some(p);
                    r
                }
                Method::MeanRate => {
                    let p = self.classified(cfg.variant).proportions(self.data, sel)?;
                    let p_r_given_h = p.p_r_given_h.ok_or(Error::RecencyUnavailable)?;
                    let lambda = estimators::mean_rate(p_r_given_h * p.p_h, p.p_h, self.reference.mdri_ref)?;
                    IncidenceResult {
                        lambda,
                        method,
                        durations: None,
                        mdri_used: self.reference.mdri_ref,
                        residual_frr: None,
                        proportions: Some(p),
                        warnings: Vec::new(),
                    }
                }
                Method::Historical => {
                    let p = self.classified(cfg.variant).proportions(self.data, sel)?;
                    historical_incidence(&p, cfg.historical_mdri, cfg.historical_frr, cfg.tau)?
                }
            };
            results.push(result);
        }
        Ok(PipelineOutput { results, screening, durations_rita3, durations_rita2, proportions_rita3, proportions_rita2 })
    }

    fn rita_with_frr(&self, p: &ProportionSet, d: &DurationSet) -> Result<IncidenceResult> {
        let mut r = rita_incidence(p, &self.reference, d)?;
        let frr = estimators::residual_frr(p, r.lambda, &self.reference, d)?;
        if frr < 0.0 {
            r.warnings.push(Warning::NegativeResidualFrr(frr));
        }
        r.residual_frr = Some(frr);
        Ok(r)
    }

    /// Jackknife standard errors from replicate outputs given in replicate
    /// order. Up to 5% failed replicates are dropped with a warning.
    pub fn combine(&self, main: PipelineOutput, replicates: Vec<Result<PipelineOutput>>) -> Result<EstimateReport> {
        let total = replicates.len();
        if let JackknifeConfig::Coefficients(c) = &self.config.jackknife {
            if c.len() != total {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{} jackknife coefficients for {total} replicates",
                    c.len()
                )));
            }
        }
        let (kept_idx, kept, failed) = partition_replicates(replicates)?;
        let jk = self.config.jackknife.restricted(&kept_idx);
        let mut standard_errors = Vec::with_capacity(main.results.len());
        // without replicate weights only point estimates are reported
        for (m, point) in main.results.iter().enumerate().filter(|_| total > 0) {
            let quantity = |get: &dyn Fn(&IncidenceResult) -> Option<f64>| -> Result<Option<f64>> {
                match get(point) {
                    None => Ok(None),
                    Some(p) => {
                        let reps: Vec<f64> =
                            kept.iter().map(|o| get(&o.results[m]).unwrap_or(f64::NAN)).collect();
                        jackknife_se(p, &reps, &jk).map(Some)
                    }
                }
            };
            let lambda = quantity(&|r| Some(r.lambda))?.expect("lambda always present");
            let residual_frr = quantity(&|r| if r.method == Method::Naive { None } else { r.residual_frr })?;
            let mdri_used = quantity(&|r| r.durations.map(|d| d.omega_rs))?;
            let omega_s = quantity(&|r| r.durations.map(|d| d.omega_s))?;
            standard_errors.push(MethodSe { method: point.method, lambda, residual_frr, mdri_used, omega_s });
        }
        let mut warnings: Vec<Warning> = main.results.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
        warnings.extend(dropped_warning(&failed, total));
        if total == 0 {
            warnings.push(Warning::NoReplicateWeights);
        }
        let domain = self.config.curve.domain_end();
        if self.config.tau > domain {
            warnings.push(Warning::CurveExtrapolated { tau: self.config.tau, domain });
        }
        Ok(EstimateReport { output: main, standard_errors, replicates_used: kept.len(), replicates_total: total, warnings })
    }

    /// Sensitivity sweep on the main weights for the configured variant.
    pub fn sensitivity(&self, factors: &[f64]) -> Result<SensitivityReport> {
        let cfg = self.config;
        let s = self.screening_survival(WeightSel::Main)?;
        let p = self.classified(cfg.variant).proportions(self.data, WeightSel::Main)?;
        let inputs = SensitivityInputs {
            curve: &cfg.curve,
            screening: &s,
            proportions: p,
            reference: self.reference,
            variant: cfg.variant,
            treatment: (cfg.variant == Variant::Rita2).then_some(&cfg.treatment),
        };
        sensitivity_sweep(&inputs, factors)
    }
}

/// Reference MDRI in years for a configuration.
pub fn reference_mdri(config: &PipelineConfig) -> Result<f64> {
    Ok(mdri(&config.curve, config.tau)?.years)
}

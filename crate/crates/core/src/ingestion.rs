//! Survey respondents, RITA screening rules and survey-weighted proportions.

use alloc::format;
use alloc::vec::Vec;

use crate::durations::Variant;
use crate::{Error, Result};

/// Viral load (copies/mL) below which a respondent counts as suppressed.
pub const DEFAULT_VL_THRESHOLD: f64 = 1000.0;

/// Self-reported time since the last HIV test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LastTest {
    Years(f64),
    Never,
}

impl LastTest {
    /// Years since the last test, `+∞` for never tested.
    pub fn years(self) -> f64 {
        match self {
            LastTest::Years(y) => y,
            LastTest::Never => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Respondent {
    pub hiv_positive: Option<bool>,
    pub assay_recent: Option<bool>,
    pub viral_load: Option<f64>,
    pub arv_detected: Option<bool>,
    pub self_report_diagnosed: Option<bool>,
    /// Absent means not progressed.
    pub aids: Option<bool>,
    pub time_since_last_test: Option<LastTest>,
    pub weight: f64,
}

impl Respondent {
    pub fn negative(weight: f64) -> Self {
        Self {
            hiv_positive: Some(false),
            assay_recent: None,
            viral_load: None,
            arv_detected: Some(false),
            self_report_diagnosed: Some(false),
            aids: None,
            time_since_last_test: None,
            weight,
        }
    }

    /// HIV-positive, undiagnosed, untreated, viremic and not progressed.
    pub fn positive(assay_recent: bool, weight: f64) -> Self {
        Self {
            hiv_positive: Some(true),
            assay_recent: Some(assay_recent),
            viral_load: Some(50_000.0),
            arv_detected: Some(false),
            self_report_diagnosed: Some(false),
            aids: None,
            time_since_last_test: None,
            weight,
        }
    }
}

/// Replicate weight design of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateWeights {
    None,
    /// Row-major `n × count` matrix.
    Explicit { count: usize, weights: Vec<f64> },
    /// Delete-one-group jackknife: replicate `k` zeroes group `k` and scales
    /// everyone else by `groups / (groups − 1)`.
    DeleteOneGroup { groups: usize, group_of: Vec<u32> },
}

impl ReplicateWeights {
    pub fn count(&self) -> usize {
        match self {
            ReplicateWeights::None => 0,
            ReplicateWeights::Explicit { count, .. } => *count,
            ReplicateWeights::DeleteOneGroup { groups, .. } => *groups,
        }
    }
}

/// Which weight vector to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSel {
    Main,
    Replicate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDataset {
    respondents: Vec<Respondent>,
    replicates: ReplicateWeights,
}

impl SurveyDataset {
    pub fn new(respondents: Vec<Respondent>, replicates: ReplicateWeights) -> Result<Self> {
        let n = respondents.len();
        for (row, r) in respondents.iter().enumerate() {
            if !(r.weight >= 0.0) || !r.weight.is_finite() {
                return Err(Error::InvalidRespondent { row, message: format!("weight {} is invalid", r.weight) });
            }
            if r.hiv_positive == Some(false) && r.assay_recent.is_some() {
                return Err(Error::InvalidRespondent {
                    row,
                    message: "assay result present for an HIV-negative respondent".into(),
                });
            }
            if let Some(vl) = r.viral_load {
                if !(vl >= 0.0) {
                    return Err(Error::InvalidRespondent { row, message: format!("viral load {vl} is invalid") });
                }
            }
            if let Some(LastTest::Years(y)) = r.time_since_last_test {
                if !(y >= 0.0) || !y.is_finite() {
                    return Err(Error::InvalidRespondent { row, message: format!("time since last test {y} is invalid") });
                }
            }
        }
        match &replicates {
            ReplicateWeights::None => {}
            ReplicateWeights::Explicit { count, weights } => {
                if weights.len() != n * count {
                    return Err(Error::InvalidParameter(format!(
                        "replicate matrix has {} entries, expected {n} × {count}",
                        weights.len()
                    )));
                }
                if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidRespondent {
                        row: i / count.max(&1),
                        message: format!("replicate weight {} is invalid", weights[i]),
                    });
                }
            }
            ReplicateWeights::DeleteOneGroup { groups, group_of } => {
                if *groups < 2 || group_of.len() != n || group_of.iter().any(|&g| g as usize >= *groups) {
                    return Err(Error::InvalidParameter("invalid delete-one-group replicate design".into()));
                }
            }
        }
        Ok(Self { respondents, replicates })
    }

    pub fn respondents(&self) -> &[Respondent] {
        &self.respondents
    }

    pub fn replicates(&self) -> &ReplicateWeights {
        &self.replicates
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    pub fn replicate_count(&self) -> usize {
        self.replicates.count()
    }

    pub fn weight(&self, i: usize, sel: WeightSel) -> f64 {
        match sel {
            WeightSel::Main => self.respondents[i].weight,
            WeightSel::Replicate(k) => match &self.replicates {
                ReplicateWeights::None => f64::NAN,
                ReplicateWeights::Explicit { count, weights } => weights[i * count + k],
                ReplicateWeights::DeleteOneGroup { groups, group_of } => {
                    if group_of[i] as usize == k {
                        0.0
                    } else {
                        self.respondents[i].weight * *groups as f64 / (*groups - 1) as f64
                    }
                }
            },
        }
    }

    /// The replicate weight vector of respondent `i`.
    pub fn replicate_weights_of(&self, i: usize) -> Vec<f64> {
        (0..self.replicate_count()).map(|k| self.weight(i, WeightSel::Replicate(k))).collect()
    }

    pub(crate) fn check_sel(&self, sel: WeightSel) -> Result<()> {
        if let WeightSel::Replicate(k) = sel {
            let count = self.replicate_count();
            if k >= count {
                return Err(Error::ReplicateOutOfRange { index: k, count });
            }
        }
        Ok(())
    }
}

/// What to do when a field needed for classification is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Error,
    /// Drop the respondent from the analysis.
    Exclude,
    /// Keep the respondent but treat them as screened out.
    ScreenOut,
}

/// Per-field missing-data policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MissingPolicies {
    pub hiv: MissingPolicy,
    pub recent: MissingPolicy,
    pub viral_load: MissingPolicy,
    pub arv: MissingPolicy,
    pub diagnosed: MissingPolicy,
    /// `ScreenOut` behaves like `Exclude` here: the respondent only leaves the
    /// testing history.
    pub last_test: MissingPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningConfig {
    pub vl_threshold: f64,
    pub missing: MissingPolicies,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self { vl_threshold: DEFAULT_VL_THRESHOLD, missing: MissingPolicies::default() }
    }
}

// Outcome of one field lookup under the missing-data policy.
enum Field<T> {
    Value(T),
    ScreenOut,
}

fn field<T: Copy>(value: Option<T>, policy: MissingPolicy, row: usize, name: &'static str) -> Result<Field<T>> {
    match (value, policy) {
        (Some(v), _) => Ok(Field::Value(v)),
        (None, MissingPolicy::ScreenOut) => Ok(Field::ScreenOut),
        (None, _) => Err(Error::MissingValue { row, field: name }),
    }
}

/// Whether `r` passes the screening step (`S`). Screened-in implies HIV+.
///
/// RITA3: HIV+, not previously diagnosed (self-report or ARV), viral load at or
/// above the threshold and not AIDS-progressed. RITA2: HIV+, no ARV and viral
/// load at or above the threshold.
pub fn screen(r: &Respondent, variant: Variant, cfg: &ScreeningConfig) -> Result<bool> {
    screen_row(r, 0, variant, cfg)
}

fn screen_row(r: &Respondent, row: usize, variant: Variant, cfg: &ScreeningConfig) -> Result<bool> {
    let m = &cfg.missing;
    match field(r.hiv_positive, m.hiv, row, "hiv")? {
        Field::Value(false) | Field::ScreenOut => return Ok(false),
        Field::Value(true) => {}
    }
    // any single positive marker screens out regardless of other missing fields
    if r.arv_detected == Some(true) {
        return Ok(false);
    }
    if let Some(vl) = r.viral_load {
        if vl < cfg.vl_threshold {
            return Ok(false);
        }
    }
    if variant == Variant::Rita3 {
        if r.self_report_diagnosed == Some(true) || r.aids == Some(true) {
            return Ok(false);
        }
        if let Field::ScreenOut = field(r.self_report_diagnosed, m.diagnosed, row, "diagnosed")? {
            return Ok(false);
        }
    }
    if let Field::ScreenOut = field(r.arv_detected, m.arv, row, "arv")? {
        return Ok(false);
    }
    if let Field::ScreenOut = field(r.viral_load, m.viral_load, row, "vl")? {
        return Ok(false);
    }
    Ok(true)
}

fn excluded(r: &Respondent, variant: Variant, cfg: &ScreeningConfig) -> bool {
    let m = &cfg.missing;
    if r.hiv_positive.is_none() {
        return m.hiv == MissingPolicy::Exclude;
    }
    if r.hiv_positive == Some(false) {
        return false;
    }
    (r.viral_load.is_none() && m.viral_load == MissingPolicy::Exclude)
        || (r.arv_detected.is_none() && m.arv == MissingPolicy::Exclude)
        || (variant == Variant::Rita3
            && r.self_report_diagnosed.is_none()
            && m.diagnosed == MissingPolicy::Exclude)
}

/// Weighted proportions entering the incidence formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProportionSet {
    pub p_h: f64,
    pub p_s: f64,
    pub p_s_given_h: f64,
    pub p_r_given_s: f64,
    /// P(R ∧ S | H).
    pub p_rs_given_h: f64,
    /// P(R | H); `None` when some HIV-positive respondent has no assay result.
    pub p_r_given_h: Option<f64>,
    /// Kish effective sample size.
    pub n_effective: f64,
}

impl ProportionSet {
    /// Validates the ranges and the `S ⊆ H` identities `P(S) = P(S|H)·P(H)`
    /// and `P(R∧S|H)·P(H) = P(R|S)·P(S)`.
    pub fn new(
        p_h: f64,
        p_s_given_h: f64,
        p_r_given_s: f64,
        p_r_given_h: Option<f64>,
        n_effective: f64,
    ) -> Result<Self> {
        let probs = [p_h, p_s_given_h, p_r_given_s, p_r_given_h.unwrap_or(0.0)];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(format!("proportions must lie in [0, 1]: {probs:?}")));
        }
        let p_s = p_s_given_h * p_h;
        Ok(Self {
            p_h,
            p_s,
            p_s_given_h,
            p_r_given_s,
            p_rs_given_h: p_r_given_s * p_s_given_h,
            p_r_given_h,
            n_effective,
        })
    }
}

/// Per-respondent classification reused across weight vectors.
#[derive(Debug, Clone)]
pub(crate) struct Classified {
    /// (respondent index, flags) for included respondents.
    pub(crate) rows: Vec<(u32, Flags)>,
    pub(crate) recency_complete: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Flags {
    pub(crate) hiv: bool,
    pub(crate) screened: bool,
    pub(crate) recent_screened: bool,
    pub(crate) recent: bool,
}

pub(crate) fn classify(data: &SurveyDataset, variant: Variant, cfg: &ScreeningConfig) -> Result<Classified> {
    let mut rows = Vec::with_capacity(data.len());
    let mut recency_complete = true;
    for (i, r) in data.respondents().iter().enumerate() {
        if excluded(r, variant, cfg) {
            continue;
        }
        let mut screened = screen_row(r, i, variant, cfg)?;
        let hiv = r.hiv_positive == Some(true);
        if screened && r.assay_recent.is_none() {
            match cfg.missing.recent {
                MissingPolicy::Error => return Err(Error::MissingValue { row: i, field: "recent" }),
                MissingPolicy::Exclude => continue,
                MissingPolicy::ScreenOut => screened = false,
            }
        }
        if hiv && r.assay_recent.is_none() {
            recency_complete = false;
        }
        let recent = r.assay_recent == Some(true);
        rows.push((i as u32, Flags { hiv, screened, recent_screened: screened && recent, recent: hiv && recent }));
    }
    Ok(Classified { rows, recency_complete })
}

impl Classified {
    pub(crate) fn proportions(&self, data: &SurveyDataset, sel: WeightSel) -> Result<ProportionSet> {
        data.check_sel(sel)?;
        let (mut w_all, mut w_sq, mut w_h, mut w_s, mut w_rs, mut w_rh) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &(i, f) in &self.rows {
            let w = data.weight(i as usize, sel);
            w_all += w;
            w_sq += w * w;
            if f.hiv {
                w_h += w;
            }
            if f.screened {
                w_s += w;
            }
            if f.recent_screened {
                w_rs += w;
            }
            if f.recent {
                w_rh += w;
            }
        }
        if !(w_all > 0.0) {
            return Err(Error::ZeroTotalWeight);
        }
        if !(w_s > 0.0) {
            return Err(Error::NoScreenedIn);
        }
        let p_r_given_h = self.recency_complete.then(|| w_rh / w_h);
        let p = ProportionSet {
            p_h: w_h / w_all,
            p_s: w_s / w_all,
            p_s_given_h: w_s / w_h,
            p_r_given_s: w_rs / w_s,
            p_rs_given_h: w_rs / w_h,
            p_r_given_h,
            n_effective: w_all * w_all / w_sq,
        };
        Ok(p)
    }
}

/// Survey-weighted proportions for one weight vector.
pub fn proportions(
    data: &SurveyDataset,
    sel: WeightSel,
    variant: Variant,
    cfg: &ScreeningConfig,
) -> Result<ProportionSet> {
    classify(data, variant, cfg)?.proportions(data, sel)
}

/// Population whose time since last test stands in for time to diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestingPopulation {
    /// HIV-positive respondents with no previous diagnosis (self-report or ARV).
    HivPosUndiagnosed,
    /// HIV-negative respondents.
    #[default]
    HivNegative,
}

/// Indices of the selected subpopulation sorted by time since last test
/// (never tested last), with the times.
pub(crate) fn testing_history_index(
    data: &SurveyDataset,
    population: TestingPopulation,
    cfg: &ScreeningConfig,
) -> Result<(Vec<u32>, Vec<f64>)> {
    let mut pairs = Vec::new();
    for (i, r) in data.respondents().iter().enumerate() {
        let member = match population {
            TestingPopulation::HivNegative => r.hiv_positive == Some(false),
            TestingPopulation::HivPosUndiagnosed => {
                r.hiv_positive == Some(true)
                    && r.self_report_diagnosed != Some(true)
                    && r.arv_detected != Some(true)
                    && {
                        if r.self_report_diagnosed.is_none() && cfg.missing.diagnosed == MissingPolicy::Error {
                            return Err(Error::MissingValue { row: i, field: "diagnosed" });
                        }
                        if r.arv_detected.is_none() && cfg.missing.arv == MissingPolicy::Error {
                            return Err(Error::MissingValue { row: i, field: "arv" });
                        }
                        r.self_report_diagnosed.is_some() && r.arv_detected.is_some()
                    }
            }
        };
        if !member {
            continue;
        }
        match r.time_since_last_test {
            Some(t) => pairs.push((t.years(), i as u32)),
            None if cfg.missing.last_test == MissingPolicy::Error => {
                return Err(Error::MissingValue { row: i, field: "tslt_years" })
            }
            None => {}
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptySubpopulation);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(pairs.into_iter().map(|(t, i)| (i, t)).unzip())
}

/// `(years since last test, weight)` for the selected subpopulation; never
/// tested maps to `+∞`.
pub fn testing_history(
    data: &SurveyDataset,
    population: TestingPopulation,
    sel: WeightSel,
    cfg: &ScreeningConfig,
) -> Result<Vec<(f64, f64)>> {
    data.check_sel(sel)?;
    let (idx, times) = testing_history_index(data, population, cfg)?;
    Ok(idx.iter().zip(times).map(|(&i, t)| (t, data.weight(i as usize, sel))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn cfg() -> ScreeningConfig {
        ScreeningConfig::default()
    }

    #[test]
    fn hiv_negative_always_screened_out() {
        let mut r = Respondent::negative(1.0);
        r.viral_load = Some(1e6);
        assert!(!screen(&r, Variant::Rita3, &cfg()).unwrap());
        assert!(!screen(&r, Variant::Rita2, &cfg()).unwrap());
    }

    #[test]
    fn undiagnosed_viremic_screened_in() {
        let r = Respondent::positive(false, 1.0);
        assert!(screen(&r, Variant::Rita3, &cfg()).unwrap());
        assert!(screen(&r, Variant::Rita2, &cfg()).unwrap());
    }

    #[test]
    fn self_report_diagnosed_differs_between_variants() {
        let mut r = Respondent::positive(true, 1.0);
        r.self_report_diagnosed = Some(true);
        assert!(!screen(&r, Variant::Rita3, &cfg()).unwrap());
        assert!(screen(&r, Variant::Rita2, &cfg()).unwrap());
    }

    #[test]
    fn suppression_arv_and_aids() {
        let mut r = Respondent::positive(true, 1.0);
        r.viral_load = Some(999.0);
        assert!(!screen(&r, Variant::Rita2, &cfg()).unwrap());
        r.viral_load = Some(1000.0);
        assert!(screen(&r, Variant::Rita2, &cfg()).unwrap());
        r.arv_detected = Some(true);
        assert!(!screen(&r, Variant::Rita2, &cfg()).unwrap());
        let mut r = Respondent::positive(true, 1.0);
        r.aids = Some(true);
        assert!(!screen(&r, Variant::Rita3, &cfg()).unwrap());
        assert!(screen(&r, Variant::Rita2, &cfg()).unwrap());
    }

    #[test]
    fn missing_viral_load_policy() {
        let mut r = Respondent::positive(true, 1.0);
        r.viral_load = None;
        assert_eq!(screen(&r, Variant::Rita3, &cfg()), Err(Error::MissingValue { row: 0, field: "vl" }));
        let mut c = cfg();
        c.missing.viral_load = MissingPolicy::ScreenOut;
        assert!(!screen(&r, Variant::Rita3, &c).unwrap());
        c.missing.viral_load = MissingPolicy::Exclude;
        let data = SurveyDataset::new(vec![r, Respondent::positive(true, 1.0)], ReplicateWeights::None).unwrap();
        let p = proportions(&data, WeightSel::Main, Variant::Rita3, &c).unwrap();
        assert_eq!(p.p_h, 1.0);
        assert_eq!(p.p_r_given_s, 1.0);
    }

    #[test]
    fn unit_weight_prevalence() {
        let data = SurveyDataset::new(
            vec![
                Respondent::positive(true, 1.0),
                Respondent::positive(false, 1.0),
                Respondent::negative(1.0),
                Respondent::negative(1.0),
            ],
            ReplicateWeights::None,
        )
        .unwrap();
        let p = proportions(&data, WeightSel::Main, Variant::Rita3, &cfg()).unwrap();
        assert_eq!(p.p_h, 0.5);
        assert_eq!(p.p_r_given_s, 0.5);
        assert_eq!(p.p_r_given_h, Some(0.5));
        assert_eq!(p.n_effective, 4.0);
    }

    #[test]
    fn weighted_prevalence() {
        let data = SurveyDataset::new(
            vec![Respondent::positive(false, 1.0), Respondent::negative(3.0)],
            ReplicateWeights::None,
        )
        .unwrap();
        let p = proportions(&data, WeightSel::Main, Variant::Rita3, &cfg()).unwrap();
        assert_abs_diff_eq!(p.p_h, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.p_s, p.p_s_given_h * p.p_h, epsilon = 1e-15);
    }

    #[test]
    fn no_screened_in_is_an_error() {
        let mut r = Respondent::positive(true, 1.0);
        r.arv_detected = Some(true);
        let data = SurveyDataset::new(vec![r, Respondent::negative(1.0)], ReplicateWeights::None).unwrap();
        assert_eq!(proportions(&data, WeightSel::Main, Variant::Rita3, &cfg()), Err(Error::NoScreenedIn));
        let zero = SurveyDataset::new(vec![Respondent::negative(0.0)], ReplicateWeights::None).unwrap();
        assert_eq!(proportions(&zero, WeightSel::Main, Variant::Rita3, &cfg()), Err(Error::ZeroTotalWeight));
    }

    #[test]
    fn replicate_designs() {
        let rs = vec![Respondent::positive(true, 1.0), Respondent::negative(1.0), Respondent::negative(2.0)];
        let data = SurveyDataset::new(
            rs.clone(),
            ReplicateWeights::DeleteOneGroup { groups: 2, group_of: vec![0, 1, 0] },
        )
        .unwrap();
        assert_eq!(data.replicate_weights_of(0), vec![0.0, 2.0]);
        assert_eq!(data.replicate_weights_of(2), vec![0.0, 4.0]);
        assert!(data.check_sel(WeightSel::Replicate(2)).is_err());
        let explicit = SurveyDataset::new(
            rs.clone(),
            ReplicateWeights::Explicit { count: 2, weights: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0] },
        )
        .unwrap();
        assert_eq!(explicit.weight(1, WeightSel::Replicate(1)), 4.0);
        assert!(SurveyDataset::new(rs, ReplicateWeights::Explicit { count: 2, weights: vec![1.0] }).is_err());
    }

    #[test]
    fn recency_for_negative_rejected() {
        let mut r = Respondent::negative(1.0);
        r.assay_recent = Some(true);
        assert!(SurveyDataset::new(vec![r], ReplicateWeights::None).is_err());
    }

    #[test]
    fn testing_history_populations() {
        let mut a = Respondent::positive(false, 1.0);
        a.time_since_last_test = Some(LastTest::Years(0.5));
        let mut b = Respondent::positive(false, 2.0);
        b.self_report_diagnosed = Some(true);
        b.time_since_last_test = Some(LastTest::Years(3.0));
        let mut c = Respondent::negative(3.0);
        c.time_since_last_test = Some(LastTest::Never);
        let data = SurveyDataset::new(vec![a, b, c], ReplicateWeights::None).unwrap();
        let pos = testing_history(&data, TestingPopulation::HivPosUndiagnosed, WeightSel::Main, &cfg()).unwrap();
        assert_eq!(pos, vec![(0.5, 1.0)]);
        let neg = testing_history(&data, TestingPopulation::HivNegative, WeightSel::Main, &cfg()).unwrap();
        assert_eq!(neg, vec![(f64::INFINITY, 3.0)]);
        let only_neg = SurveyDataset::new(vec![Respondent::negative(1.0)], ReplicateWeights::None).unwrap();
        let mut c2 = cfg();
        c2.missing.last_test = MissingPolicy::Exclude;
        assert_eq!(
            testing_history(&only_neg, TestingPopulation::HivPosUndiagnosed, WeightSel::Main, &c2),
            Err(Error::EmptySubpopulation)
        );
        assert_eq!(
            testing_history(&only_neg, TestingPopulation::HivNegative, WeightSel::Main, &cfg()),
            Err(Error::MissingValue { row: 0, field: "tslt_years" })
        );
    }
}

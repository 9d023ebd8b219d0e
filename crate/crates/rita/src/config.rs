//! Flat `key = value` configuration. `#` starts a comment; relative paths are
//! resolved against the directory of the configuration file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rita_core::{
    AidsSurvival, Method, MissingPolicies, MissingPolicy, SimConfig, TestingPopulation, TreatmentDelay, Variant,
    DAYS_PER_YEAR,
};

use crate::error::{CliError, Result};

/// Where `q(t)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdriSource {
    /// Built-in stand-in curve with a 134.2-day MDRI at τ = 2.
    Default,
    /// Tabulated curve file.
    Curve,
    /// Fitted from calibration records.
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSel {
    One(Method),
    /// RITA3, RITA2, naive and historical.
    All,
}

impl MethodSel {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodSel::One(m) => vec![m],
            MethodSel::All => vec![Method::Rita3, Method::Rita2, Method::Naive, Method::Historical],
        }
    }
}

impl FromStr for MethodSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "rita3" => MethodSel::One(Method::Rita3),
            "rita2" => MethodSel::One(Method::Rita2),
            "naive" => MethodSel::One(Method::Naive),
            "historical" => MethodSel::One(Method::Historical),
            "standard" => MethodSel::One(Method::StandardRita),
            "mean_rate" => MethodSel::One(Method::MeanRate),
            "all" => MethodSel::All,
            _ => return Err(format!("unknown method `{s}` (rita3, rita2, naive, historical, standard, mean_rate, all)")),
        })
    }
}

pub fn parse_variant(s: &str) -> Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "rita3" => Ok(Variant::Rita3),
        "rita2" => Ok(Variant::Rita2),
        _ => Err(format!("unknown variant `{s}` (rita3, rita2)")),
    }
}

pub fn parse_factors(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| format!("invalid factor `{}`", f.trim())))
        .collect()
}

fn parse_delay(s: &str) -> Result<TreatmentDelay, String> {
    let s = s.to_ascii_lowercase();
    let (kind, arg) = s.split_once(':').map_or((s.as_str(), None), |(k, a)| (k, Some(a)));
    let years = |a: Option<&str>| {
        a.and_then(|a| a.trim().parse::<f64>().ok()).ok_or_else(|| format!("`{s}` needs a number of years"))
    };
    match kind.trim() {
        "instant" => Ok(TreatmentDelay::Instant),
        "fixed" => Ok(TreatmentDelay::Fixed(years(arg)?)),
        "exponential" => Ok(TreatmentDelay::Exponential { mean: years(arg)? }),
        _ => Err(format!("unknown treatment delay `{s}` (instant, fixed:<years>, exponential:<mean years>)")),
    }
}

fn parse_mixture(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|c| {
            let (r, w) = c.split_once(':').ok_or_else(|| format!("mixture component `{c}` must be rate:weight"))?;
            let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("invalid number `{}`", x.trim()));
            Ok((num(r)?, num(w)?))
        })
        .collect()
}

fn parse_policy(s: &str) -> Result<MissingPolicy, String> {
    match s.to_ascii_lowercase().as_str() {
        "error" => Ok(MissingPolicy::Error),
        "exclude" => Ok(MissingPolicy::Exclude),
        "screen_out" => Ok(MissingPolicy::ScreenOut),
        _ => Err(format!("unknown missing-data policy `{s}` (error, exclude, screen_out)")),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("invalid number `{s}`"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub survey: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub mdri_source: Option<MdriSource>,
    pub tau_years: f64,
    pub beta: f64,
    pub vl_threshold: f64,
    pub d_source: TestingPopulation,
    pub variant: Variant,
    pub method: MethodSel,
    /// `None` drops AIDS progression from the screening survival.
    pub aids: Option<AidsSurvival>,
    pub grid_n: usize,
    pub treatment_uptake: Option<PathBuf>,
    /// Used for `w(t)` when no uptake table is given, and by the simulator.
    pub treatment_delay: TreatmentDelay,
    pub historical_mdri_days: f64,
    pub historical_frr: f64,
    pub freeze_durations: bool,
    pub jackknife_coefficients: Option<PathBuf>,
    pub missing: MissingPolicies,
    pub tslt_map: Option<PathBuf>,
    pub factors: Vec<f64>,
    pub fit_n_basis: usize,
    pub sim: SimConfig,
}

impl Default for Settings {
    fn default() -> Self {
        let core = rita_core::PipelineConfig::default();
        Self {
            survey: None,
            curve: None,
            calibration: None,
            mdri_source: None,
            tau_years: core.tau,
            beta: core.beta,
            vl_threshold: core.screening.vl_threshold,
            d_source: core.testing_population,
            variant: core.variant,
            method: MethodSel::One(Method::Rita3),
            aids: core.aids,
            grid_n: core.grid_n,
            treatment_uptake: None,
            treatment_delay: TreatmentDelay::Instant,
            historical_mdri_days: core.historical_mdri * DAYS_PER_YEAR,
            historical_frr: core.historical_frr,
            freeze_durations: false,
            jackknife_coefficients: None,
            missing: MissingPolicies::default(),
            tslt_map: None,
            factors: rita_core::sensitivity::DEFAULT_FACTORS.to_vec(),
            fit_n_basis: rita_core::FitConfig::default().n_basis,
            sim: SimConfig::default(),
        }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses configuration text; `origin` names the file in diagnostics and
    /// anchors relative paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let base = origin.parent().unwrap_or(Path::new(""));
        let mut settings = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i as u64 + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::parse(origin, line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            settings.set(key, value, base).map_err(|m| CliError::parse(origin, line, format!("`{key}`: {m}")))?;
        }
        Ok(settings)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = || Some(base.join(value));
        let aids = self.aids.unwrap_or_default();
        match key {
            "survey" => self.survey = path(),
            "curve" => self.curve = path(),
            "calibration" => self.calibration = path(),
            "mdri_source" => {
                self.mdri_source = Some(match value {
                    "default" => MdriSource::Default,
                    "curve" => MdriSource::Curve,
                    "fit" => MdriSource::Fit,
                    _ => return Err(format!("unknown source `{value}` (default, curve, fit)")),
                })
            }
            "tau_years" => self.tau_years = parse_num(value)?,
            "beta" => self.beta = parse_num(value)?,
            "vl_threshold" => self.vl_threshold = parse_num(value)?,
            "d_source" => {
                self.d_source = match value {
                    "hiv_negative" => TestingPopulation::HivNegative,
                    "hiv_pos_undiagnosed" => TestingPopulation::HivPosUndiagnosed,
                    _ => return Err(format!("unknown source `{value}` (hiv_negative, hiv_pos_undiagnosed)")),
                }
            }
            "variant" => self.variant = parse_variant(value)?,
            "method" => self.method = value.parse()?,
            "aids" => self.aids = parse_bool(value)?.then_some(aids),
            "aids_scale" => self.aids = Some(AidsSurvival { scale: parse_num(value)?, ..aids }),
            "aids_shape" => self.aids = Some(AidsSurvival { shape: parse_num(value)?, ..aids }),
            "grid_n" => self.grid_n = parse_num(value)?,
            "treatment_uptake" => self.treatment_uptake = path(),
            "treatment_delay" => {
                self.treatment_delay = parse_delay(value)?;
                self.sim.treatment_delay = self.treatment_delay;
            }
            "historical_mdri_days" => self.historical_mdri_days = parse_num(value)?,
            "historical_frr" => self.historical_frr = parse_num(value)?,
            "freeze_durations" => self.freeze_durations = parse_bool(value)?,
            "jackknife_coefficients" => self.jackknife_coefficients = path(),
            "tslt_map" => self.tslt_map = path(),
            "factors" => self.factors = parse_factors(value)?,
            "fit_n_basis" => self.fit_n_basis = parse_num(value)?,
            "missing_hiv" => self.missing.hiv = parse_policy(value)?,
            "missing_recent" => self.missing.recent = parse_policy(value)?,
            "missing_vl" => self.missing.viral_load = parse_policy(value)?,
            "missing_arv" => self.missing.arv = parse_policy(value)?,
            "missing_diagnosed" => self.missing.diagnosed = parse_policy(value)?,
            "missing_tslt" => self.missing.last_test = parse_policy(value)?,
            "seed" => self.sim.seed = parse_num(value)?,
            "sim_n" => self.sim.n_respondents = parse_num(value)?,
            "sim_lambda" => self.sim.lambda_true = parse_num(value)?,
            "sim_p_long" => self.sim.p_h_baseline = parse_num(value)?,
            "sim_tau_sim" => self.sim.tau_sim = parse_num(value)?,
            "sim_test_rates" => self.sim.test_rate_mixture = parse_mixture(value)?,
            "sim_never_test" => self.sim.never_test_fraction = parse_num(value)?,
            "sim_frr" => self.sim.frr_true = parse_num(value)?,
            "sim_groups" => self.sim.groups = parse_num(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Source of `q(t)`, inferred from the files given when not set.
    pub fn resolved_mdri_source(&self) -> MdriSource {
        self.mdri_source.unwrap_or(if self.curve.is_some() {
            MdriSource::Curve
        } else if self.calibration.is_some() {
            MdriSource::Fit
        } else {
            MdriSource::Default
        })
    }
}

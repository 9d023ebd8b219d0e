//! Subcommands `estimate`, `calibrate`, `simulate` and `sensitivity`.
//!
//! Settings come from `--config` (see [`crate::config`]); flags override the
//! file. Exit code 0 means a complete report was written, 1 means bad input
//! and 2 means an estimator refused the data.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rita_core::{
    fit_recency_curve, mdri, screen, CalibrationCurve, EstimateReport, FitConfig, JackknifeConfig, Method,
    PipelineConfig, PreparedPipeline, ScreeningConfig, SurveyDataset, Variant, Warning, DAYS_PER_YEAR,
};
use serde::Serialize;

use crate::config::{parse_factors, parse_variant, MdriSource, MethodSel, Settings};
use crate::error::{CliError, Result};
use crate::io;
use crate::run;

#[derive(Debug, Parser)]
#[command(name = "rita", version, about = "HIV incidence estimation from recency-assay survey data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate incidence with jackknife standard errors.
    Estimate(CommonArgs),
    /// Fit or load the recency curve q(t) and report its MDRI.
    Calibrate(CommonArgs),
    /// Generate a synthetic survey with known incidence.
    Simulate(CommonArgs),
    /// Scale the screening-out probability and report the change in incidence.
    Sensitivity(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Key-value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Input file: survey CSV, or calibration records for `calibrate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// rita3, rita2, naive, historical, standard, mean_rate or all.
    #[arg(long)]
    pub method: Option<MethodSel>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Screening algorithm: rita3 or rita2.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Comma-separated scaling factors, e.g. `-1,-0.5,0.5,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub factors: Option<String>,
}

fn settings(args: &CommonArgs) -> Result<Settings> {
    let mut s = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    if let Some(v) = args.variant {
        s.variant = v;
        if args.method.is_none() {
            if let MethodSel::One(Method::Rita3 | Method::Rita2) = s.method {
                s.method = MethodSel::One(if v == Variant::Rita3 { Method::Rita3 } else { Method::Rita2 });
            }
        }
    }
    if let Some(m) = args.method {
        s.method = m;
    }
    if let Some(seed) = args.seed {
        s.sim.seed = seed;
    }
    if let Some(f) = &args.factors {
        s.factors = parse_factors(f).map_err(CliError::Usage)?;
    }
    Ok(s)
}

fn out_dir(args: &CommonArgs) -> Result<&Path> {
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    Ok(&args.out)
}

pub fn run(cli: &Cli, out: &mut impl Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => estimate(a, out),
        Command::Calibrate(a) => calibrate(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Sensitivity(a) => sensitivity(a, out),
    }
}

fn say(out: &mut impl Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn warn(w: &Warning) {
    eprintln!("warning: {w}");
}

/// `q(t)` from the configured source.
pub fn load_curve(s: &Settings, calibration_override: Option<&Path>) -> Result<CalibrationCurve> {
    let source = if calibration_override.is_some() { MdriSource::Fit } else { s.resolved_mdri_source() };
    match source {
        MdriSource::Default => Ok(CalibrationCurve::reference_default()),
        MdriSource::Curve => {
            let path = s.curve.as_deref().ok_or_else(|| CliError::Usage("mdri_source = curve needs `curve`".into()))?;
            io::read_curve(path)
        }
        MdriSource::Fit => {
            let path = calibration_override
                .or(s.calibration.as_deref())
                .ok_or_else(|| CliError::Usage("fitting q(t) needs calibration records".into()))?;
            let records = io::read_calibration(path)?;
            let fit = FitConfig {
                tau_max: s.tau_years.max(rita_core::calibration::DEFAULT_TAU),
                n_basis: s.fit_n_basis,
                ..FitConfig::default()
            };
            Ok(fit_recency_curve(&records, &fit)?)
        }
    }
}

/// Core pipeline configuration from settings and a curve.
pub fn pipeline_config(s: &Settings, curve: CalibrationCurve) -> Result<PipelineConfig> {
    let treatment = match &s.treatment_uptake {
        Some(path) => io::read_uptake(path)?,
        None => s.treatment_delay.uptake(),
    };
    let jackknife = match &s.jackknife_coefficients {
        Some(path) => JackknifeConfig::coefficients(io::read_coefficients(path)?)?,
        None => JackknifeConfig::Jk1,
    };
    Ok(PipelineConfig {
        curve,
        beta: s.beta,
        tau: s.tau_years,
        variant: s.variant,
        screening: ScreeningConfig { vl_threshold: s.vl_threshold, missing: s.missing },
        testing_population: s.d_source,
        aids: s.aids,
        grid_n: s.grid_n,
        treatment,
        methods: s.method.methods(),
        historical_mdri: s.historical_mdri_days / DAYS_PER_YEAR,
        historical_frr: s.historical_frr,
        freeze_durations: s.freeze_durations,
        jackknife,
    })
}

fn read_survey(s: &Settings, args: &CommonArgs) -> Result<(PathBuf, SurveyDataset)> {
    let path = args
        .data
        .clone()
        .or_else(|| s.survey.clone())
        .ok_or_else(|| CliError::Usage("no survey data: pass --data or set `survey` in the config".into()))?;
    let map = match &s.tslt_map {
        Some(p) => io::TsltMap::read(p)?,
        None => io::TsltMap::default(),
    };
    let data = io::read_survey(&path, &map)?;
    Ok((path, data))
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn days(years: f64) -> String {
    format!("{:.1} days", years * DAYS_PER_YEAR)
}

/// Respondent counts behind a report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Counts {
    pub respondents: usize,
    pub hiv_positive: usize,
    pub screened_in: usize,
    pub recent_screened_in: usize,
}

fn counts(data: &SurveyDataset, variant: Variant, cfg: &ScreeningConfig) -> Counts {
    let mut c = Counts { respondents: data.len(), hiv_positive: 0, screened_in: 0, recent_screened_in: 0 };
    for r in data.respondents() {
        if r.hiv_positive == Some(true) {
            c.hiv_positive += 1;
        }
        if screen(r, variant, cfg).unwrap_or(false) {
            c.screened_in += 1;
            if r.assay_recent == Some(true) {
                c.recent_screened_in += 1;
            }
        }
    }
    c
}

#[derive(Serialize)]
struct EstimateFile<'a> {
    counts: &'a [(Variant, Counts)],
    report: &'a EstimateReport,
}

fn estimate(args: &CommonArgs, out: &mut impl Write) -> Result<()> {
    let s = settings(args)?;
    let (path, data) = read_survey(&s, args)?;
    let config = pipeline_config(&s, load_curve(&s, None)?)?;
    let report = run::estimate(&data, &config).map_err(|e| CliError::from_core(e, Some(&path)))?;
    let dir = out_dir(args)?;

    let mut variants: Vec<Variant> = config
        .methods
        .iter()
        .map(|m| match m {
            Method::Rita3 => Variant::Rita3,
            Method::Rita2 => Variant::Rita2,
            _ => config.variant,
        })
        .collect();
    variants.sort_by_key(|v| *v as u8);
    variants.dedup();
    let all_counts: Vec<(Variant, Counts)> =
        variants.iter().map(|&v| (v, counts(&data, v, &config.screening))).collect();

    say(out, format_args!("replicates used: {}/{}", report.replicates_used, report.replicates_total))?;
    for (v, c) in &all_counts {
        say(
            out,
            format_args!(
                "{v:?}: {} respondents, {} HIV+, {} screened in, {} recent and screened in",
                c.respondents, c.hiv_positive, c.screened_in, c.recent_screened_in
            ),
        )?;
    }
    let mut rows = Vec::new();
    let mut comparison = Vec::new();
    let na = || "n/a".to_owned();
    for r in &report.output.results {
        let se = report.se(r.method);
        let lambda_se = se.map(|s| s.lambda);
        say(out, format_args!("{}: incidence {} (SE {})", r.method.name(), pct(r.lambda), lambda_se.map_or_else(na, pct)))?;
        let mdri_se = se.and_then(|s| s.mdri_used);
        let frr_se = se.and_then(|s| s.residual_frr);
        match r.durations {
            Some(d) => {
                say(out, format_args!("  context-specific MDRI {} (SE {})", days(d.omega_rs), mdri_se.map_or_else(na, days)))?;
                say(out, format_args!("  mean duration screened in (Omega_s) {}", days(d.omega_s)))?;
            }
            _ => say(out, format_args!("  MDRI {}", days(r.mdri_used)))?,
        }
        if let Some(frr) = r.residual_frr {
            let frr_se = frr_se.map_or_else(na, pct);
            let label = if matches!(r.method, Method::Rita3 | Method::Rita2 | Method::StandardRita) {
                "residual FRR"
            } else {
                "FRR"
            };
            say(out, format_args!("  {label} {} (SE {frr_se})", pct(frr)))?;
        }
        rows.push(vec![
            r.method.name().to_owned(),
            r.lambda.to_string(),
            cell(lambda_se),
            r.mdri_used.to_string(),
            cell(mdri_se),
            cell(r.durations.map(|d| d.omega_s)),
            cell(r.residual_frr),
            cell(frr_se),
        ]);
        comparison.push(vec![r.method.name().to_owned(), r.lambda.to_string(), cell(lambda_se)]);
    }
    for w in &report.warnings {
        warn(w);
    }
    io::write_table(
        &dir.join("estimate.csv"),
        "method,lambda,se,mdri_years,mdri_se_years,omega_s_years,residual_frr,residual_frr_se",
        &rows,
    )?;
    io::write_json(&dir.join("estimate.json"), &EstimateFile { counts: &all_counts, report: &report })?;
    if s.method == MethodSel::All {
        io::write_table(&dir.join("comparison.csv"), "method,lambda,se", &comparison)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MdriFile {
    tau_years: f64,
    mdri_years: f64,
    mdri_days: f64,
    extrapolated: bool,
}

fn calibrate(args: &CommonArgs, out: &mut impl Write) -> Result<()> {
    let s = settings(args)?;
    let curve = load_curve(&s, args.data.as_deref())?;
    let m = mdri(&curve, s.tau_years)?;
    let dir = out_dir(args)?;
    io::write_curve(&dir.join("curve.csv"), &curve)?;
    io::write_json(
        &dir.join("mdri.json"),
        &MdriFile {
            tau_years: s.tau_years,
            mdri_years: m.years,
            mdri_days: m.years * DAYS_PER_YEAR,
            extrapolated: m.extrapolated,
        },
    )?;
    say(out, format_args!("MDRI (tau = {} years): {}", s.tau_years, days(m.years)))?;
    if m.extrapolated {
        warn(&Warning::CurveExtrapolated { tau: s.tau_years, domain: curve.domain_end() });
    }
    Ok(())
}

fn simulate(args: &CommonArgs, out: &mut impl Write) -> Result<()> {
    let s = settings(args)?;
    let mut cfg = s.sim.clone();
    cfg.tau = s.tau_years;
    cfg.q_curve = load_curve(&s, None)?;
    let sim = run::simulate(&cfg).map_err(|e| match e {
        rita_core::Error::InvalidSimConfig(m) => CliError::Usage(m),
        e => CliError::Estimation(e),
    })?;
    let dir = out_dir(args)?;
    io::write_survey(&dir.join("survey.csv"), &sim.dataset)?;
    io::write_json(&dir.join("truth.json"), &sim.truth)?;
    say(
        out,
        format_args!(
            "simulated {} respondents (seed {}): incidence {}, prevalence {}",
            cfg.n_respondents,
            cfg.seed,
            pct(sim.truth.lambda_true),
            pct(sim.truth.p_h)
        ),
    )
}

fn sensitivity(args: &CommonArgs, out: &mut impl Write) -> Result<()> {
    let s = settings(args)?;
    let (path, data) = read_survey(&s, args)?;
    let config = pipeline_config(&s, load_curve(&s, None)?)?;
    let prepared = PreparedPipeline::new(&data, &config).map_err(|e| CliError::from_core(e, Some(&path)))?;
    let report = prepared.sensitivity(&s.factors).map_err(|e| CliError::from_core(e, Some(&path)))?;
    let dir = out_dir(args)?;
    say(out, format_args!("baseline incidence {}", pct(report.baseline)))?;
    let mut rows = Vec::new();
    for r in &report.rows {
        say(out, format_args!("factor {:+.0}%: incidence {} ({:+.2}%)", 100.0 * r.factor, pct(r.lambda), r.pct_change))?;
        rows.push(vec![r.factor.to_string(), r.lambda.to_string(), r.pct_change.to_string()]);
    }
    for w in &report.warnings {
        warn(w);
    }
    io::write_table(&dir.join("sensitivity.csv"), "factor,lambda,pct_change", &rows)
}

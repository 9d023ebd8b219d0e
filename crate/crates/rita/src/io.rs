//! CSV and JSON file formats.
//!
//! Survey microdata: header `hiv,recent,vl,arv,diagnosed,aids,tslt_years,weight`
//! followed by optional replicate weight columns `rw_1..rw_K`. Binary fields
//! take `0`, `1` or `NA`; `tslt_years` takes a number of years, `NEVER`, `NA`
//! or a label from a [`TsltMap`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rita_core::{
    CalibrationCurve, CalibrationRecord, LastTest, ReplicateWeights, Respondent, SurveyDataset, TreatmentUptake,
};
use serde::Serialize;

use crate::error::{CliError, Result};

const SURVEY_COLUMNS: [&str; 8] = ["hiv", "recent", "vl", "arv", "diagnosed", "aids", "tslt_years", "weight"];

/// Categorical time-since-last-test answers mapped to interval midpoints in
/// years.
#[derive(Debug, Clone, PartialEq)]
pub struct TsltMap(HashMap<String, f64>);

impl Default for TsltMap {
    /// `<6m` → 0.25, `6-12m` → 0.75, `12-24m` → 1.5, `>24m` → 3 (any value
    /// past τ behaves the same).
    fn default() -> Self {
        let rows = [("<6m", 0.25), ("6-12m", 0.75), ("12-24m", 1.5), (">24m", 3.0)];
        Self(rows.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect())
    }
}

impl TsltMap {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.0.get(&label.to_ascii_lowercase()).copied()
    }

    /// Reads `label,years` rows.
    pub fn read(path: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        for (line, rec) in records(path, &["label", "years"])? {
            let years = number(path, line, "years", &rec[1])?;
            if !(years >= 0.0) {
                return Err(CliError::parse(path, line, "years must be nonnegative"));
            }
            map.insert(rec[0].to_ascii_lowercase(), years);
        }
        Ok(Self(map))
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::parse(path, line, e.to_string())
}

/// All rows of a CSV with the given leading columns, as `(line, fields)`.
fn records(path: &Path, expected: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    for (i, name) in expected.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(CliError::parse(path, 1, format!("expected header `{}`", expected.join(","))));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn number(path: &Path, line: u64, field: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(path, line, format!("`{field}`: expected a number, got `{raw}`")))
}

fn missing(raw: &str) -> bool {
    raw.is_empty() || raw.eq_ignore_ascii_case("na")
}

fn flag(path: &Path, line: u64, field: &str, raw: &str) -> Result<Option<bool>> {
    match raw {
        "1" => Ok(Some(true)),
        "0" => Ok(Some(false)),
        _ if missing(raw) => Ok(None),
        _ => Err(CliError::parse(path, line, format!("`{field}`: expected 0, 1 or NA, got `{raw}`"))),
    }
}

pub fn read_survey(path: &Path, tslt: &TsltMap) -> Result<SurveyDataset> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(SURVEY_COLUMNS) {
        *slot = col(name).ok_or_else(|| CliError::parse(path, 1, format!("missing column `{name}`")))?;
    }
    let mut rw_cols = Vec::new();
    while let Some(c) = col(&format!("rw_{}", rw_cols.len() + 1)) {
        rw_cols.push(c);
    }
    let stray = header.iter().filter(|h| h.starts_with("rw_")).count();
    if stray != rw_cols.len() {
        return Err(CliError::parse(path, 1, "replicate columns must be numbered rw_1..rw_K without gaps"));
    }
    let k = rw_cols.len();
    let mut respondents = Vec::new();
    let mut replicate = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize| rec.get(c).unwrap_or("");
        let opt_number = |c: usize, name: &str| -> Result<Option<f64>> {
            let raw = get(c);
            if missing(raw) {
                Ok(None)
            } else {
                number(path, line, name, raw).map(Some)
            }
        };
        let tslt_raw = get(idx[6]);
        let time_since_last_test = if missing(tslt_raw) {
            None
        } else if tslt_raw.eq_ignore_ascii_case("never") {
            Some(LastTest::Never)
        } else if let Ok(v) = tslt_raw.parse::<f64>() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CliError::parse(path, line, format!("`tslt_years`: invalid value `{tslt_raw}`")));
            }
            Some(LastTest::Years(v))
        } else if let Some(v) = tslt.get(tslt_raw) {
            Some(LastTest::Years(v))
        } else {
            return Err(CliError::parse(path, line, format!("`tslt_years`: unknown category `{tslt_raw}`")));
        };
        let weight = number(path, line, "weight", get(idx[7]))?;
        if weight < 0.0 {
            return Err(CliError::parse(path, line, "`weight` must be nonnegative"));
        }
        let viral_load = opt_number(idx[2], "vl")?;
        if viral_load.is_some_and(|v| v < 0.0) {
            return Err(CliError::parse(path, line, "`vl` must be nonnegative"));
        }
        let hiv_positive = flag(path, line, "hiv", get(idx[0]))?;
        let assay_recent = flag(path, line, "recent", get(idx[1]))?;
        if hiv_positive == Some(false) && assay_recent.is_some() {
            return Err(CliError::parse(path, line, "`recent` must be NA for HIV-negative respondents"));
        }
        respondents.push(Respondent {
            hiv_positive,
            assay_recent,
            viral_load,
            arv_detected: flag(path, line, "arv", get(idx[3]))?,
            self_report_diagnosed: flag(path, line, "diagnosed", get(idx[4]))?,
            aids: flag(path, line, "aids", get(idx[5]))?,
            time_since_last_test,
            weight,
        });
        for (j, &c) in rw_cols.iter().enumerate() {
            let w = number(path, line, &format!("rw_{}", j + 1), get(c))?;
            if w < 0.0 {
                return Err(CliError::parse(path, line, format!("`rw_{}` must be nonnegative", j + 1)));
            }
            replicate.push(w);
        }
    }
    let replicates = if k == 0 { ReplicateWeights::None } else { ReplicateWeights::Explicit { count: k, weights: replicate } };
    SurveyDataset::new(respondents, replicates).map_err(|e| CliError::from_core(e, Some(path)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn flag_str(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "NA",
    }
}

/// Writes the survey schema read by [`read_survey`], expanding grouped
/// replicate designs into explicit `rw_k` columns.
pub fn write_survey(path: &Path, data: &SurveyDataset) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut out = create(path)?;
    let k = data.replicate_count();
    let mut header = SURVEY_COLUMNS.join(",");
    for j in 1..=k {
        header.push_str(&format!(",rw_{j}"));
    }
    writeln!(out, "{header}").map_err(io)?;
    let mut line = String::new();
    for (i, r) in data.respondents().iter().enumerate() {
        use std::fmt::Write as _;
        line.clear();
        let vl = r.viral_load.map_or_else(|| "NA".to_owned(), |v| v.to_string());
        let tslt = match r.time_since_last_test {
            None => "NA".to_owned(),
            Some(LastTest::Never) => "NEVER".to_owned(),
            Some(LastTest::Years(y)) => y.to_string(),
        };
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{}",
            flag_str(r.hiv_positive),
            flag_str(r.assay_recent),
            vl,
            flag_str(r.arv_detected),
            flag_str(r.self_report_diagnosed),
            flag_str(r.aids),
            tslt,
            r.weight
        );
        for w in data.replicate_weights_of(i) {
            let _ = write!(line, ",{w}");
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Calibration records `t_years,recent[,weight]`.
pub fn read_calibration(path: &Path) -> Result<Vec<CalibrationRecord>> {
    let mut out = Vec::new();
    for (line, rec) in records(path, &["t_years", "recent"])? {
        let t = number(path, line, "t_years", &rec[0])?;
        let recent = flag(path, line, "recent", &rec[1])?
            .ok_or_else(|| CliError::parse(path, line, "`recent` may not be missing"))?;
        let weight = match rec.get(2) {
            Some(w) if !w.is_empty() => number(path, line, "weight", w)?,
            _ => 1.0,
        };
        if !(t >= 0.0) || weight < 0.0 {
            return Err(CliError::parse(path, line, "time and weight must be nonnegative"));
        }
        out.push(CalibrationRecord::weighted(t, recent, weight));
    }
    Ok(out)
}

fn pairs(path: &Path, columns: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    records(path, &columns)?
        .into_iter()
        .map(|(line, rec)| Ok((number(path, line, columns[0], &rec[0])?, number(path, line, columns[1], &rec[1])?)))
        .collect()
}

/// Tabulated `q(t)` as `t_years,q`.
pub fn read_curve(path: &Path) -> Result<CalibrationCurve> {
    CalibrationCurve::from_table(pairs(path, ["t_years", "q"])?).map_err(|e| CliError::parse(path, 1, e.to_string()))
}

pub fn write_curve(path: &Path, curve: &CalibrationCurve) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut out = create(path)?;
    writeln!(out, "t_years,q").map_err(io)?;
    for (t, q) in curve.grid().iter().zip(curve.values()) {
        writeln!(out, "{t},{q}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Treatment uptake `w(t)` as `t_years,w`.
pub fn read_uptake(path: &Path) -> Result<TreatmentUptake> {
    TreatmentUptake::from_table(pairs(path, ["t_years", "w"])?).map_err(|e| CliError::parse(path, 1, e.to_string()))
}

/// Jackknife coefficients, one number per line; blank lines and `#` comments
/// are skipped.
pub fn read_coefficients(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.split('#').next().unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let v = number(path, i as u64 + 1, "coefficient", raw)?;
        if v < 0.0 {
            return Err(CliError::parse(path, i as u64 + 1, "coefficients must be nonnegative"));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)?;
    out.flush().map_err(io)
}

/// Writes rows of displayable cells under a header.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut out = create(path)?;
    writeln!(out, "{header}").map_err(io)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

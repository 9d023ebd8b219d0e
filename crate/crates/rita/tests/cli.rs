use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rita(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rita")).args(args).current_dir(dir).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn small_config(dir: &Path) {
    fs::write(dir.join("run.cfg"), "sim_n = 20000\nsim_groups = 10\nsim_lambda = 0.02\n").unwrap();
}

#[test]
fn simulate_is_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    for out in ["a", "b"] {
        let o = rita(&["simulate", "--config", "run.cfg", "--seed", "7", "--out", out], dir.path());
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    for file in ["survey.csv", "truth.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
    let o = rita(&["simulate", "--config", "run.cfg", "--seed", "8", "--out", "c"], dir.path());
    assert!(o.status.success());
    assert_ne!(fs::read(dir.path().join("a/survey.csv")).unwrap(), fs::read(dir.path().join("c/survey.csv")).unwrap());
}

#[test]
fn estimate_all_writes_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    assert!(rita(&["simulate", "--config", "run.cfg", "--out", "sim"], dir.path()).status.success());
    let o = rita(&["estimate", "--data", "sim/survey.csv", "--method", "all", "--out", "est"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("rita3: incidence"));
    assert!(stdout.contains("days"));
    let table = fs::read_to_string(dir.path().join("est/comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "method,lambda,se");
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["rita3", "rita2", "naive", "historical"]);
    for l in &lines[1..] {
        let cells: Vec<f64> = l.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert!(cells[0] > 0.0 && cells[1] > 0.0);
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("est/estimate.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["replicates_used"], 10);
}

#[test]
fn estimator_failure_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    assert!(rita(&["simulate", "--config", "run.cfg", "--out", "sim"], dir.path()).status.success());
    fs::write(dir.path().join("bad.cfg"), "beta = 0.4\n").unwrap();
    let o = rita(&["estimate", "--config", "bad.cfg", "--data", "sim/survey.csv", "--out", "est"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("MDRI must exceed β·Ω_s"));
}

#[test]
fn malformed_inputs_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let header = "hiv,recent,vl,arv,diagnosed,aids,tslt_years,weight\n";
    fs::write(dir.path().join("s.csv"), format!("{header}1,0,5000,0,0,0,1.5,1\n0,NA,NA,0,0,NA,yes,1\n")).unwrap();
    let o = rita(&["estimate", "--data", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("s.csv:3:"), "{}", text(&o.stderr));

    fs::write(dir.path().join("c.cfg"), "tau_years = 2\nbeta = oops\n").unwrap();
    let o = rita(&["estimate", "--config", "c.cfg", "--data", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("c.cfg:2:"), "{}", text(&o.stderr));

    // a missing field under the default policy points at the row
    fs::write(dir.path().join("m.csv"), format!("{header}1,0,NA,0,0,0,1.5,1\n0,NA,NA,0,0,NA,1,1\n")).unwrap();
    let o = rita(&["estimate", "--data", "m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("m.csv:2: missing value for `vl`"), "{}", text(&o.stderr));

    let o = rita(&["estimate", "--method", "rita9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn calibrate_fits_records_and_reports_mdri() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t_years,recent\n");
    for i in 0..400 {
        let t = 2.0 * (i as f64 + 0.5) / 400.0;
        // deterministic thinning of exp(-4t)
        let recent = ((i * 7919) % 1000) as f64 / 1000.0 < (-4.0 * t).exp();
        csv.push_str(&format!("{t},{}\n", u8::from(recent)));
    }
    fs::write(dir.path().join("cal.csv"), csv).unwrap();
    let o = rita(&["calibrate", "--data", "cal.csv", "--out", "cal"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));
    let mdri: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cal/mdri.json")).unwrap()).unwrap();
    let years = mdri["mdri_years"].as_f64().unwrap();
    assert!((years - 0.25).abs() < 0.05, "{years}");
    let curve = fs::read_to_string(dir.path().join("cal/curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 2002);

    let o = rita(&["calibrate", "--out", "default"], dir.path());
    assert!(text(&o.stdout).contains("134.2 days"));
}

#[test]
fn sensitivity_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    assert!(rita(&["simulate", "--config", "run.cfg", "--out", "sim"], dir.path()).status.success());
    let o = rita(&["sensitivity", "--data", "sim/survey.csv", "--factors", "-0.5,0,0.5", "--out", "sens"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));
    let table = fs::read_to_string(dir.path().join("sens/sensitivity.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        table.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(table.lines().next().unwrap(), "factor,lambda,pct_change");
    assert!(rows[0][2] < 0.0 && rows[1][2] == 0.0 && rows[2][2] > 0.0);

    let o = rita(&["sensitivity", "--data", "sim/survey.csv", "--factors", "-2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn categorical_last_test_uses_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("hiv,recent,vl,arv,diagnosed,aids,tslt_years,weight\n");
    for i in 0..200 {
        let tslt = ["<6m", "6-12m", "12-24m", ">24m", "NEVER"][i % 5];
        if i % 5 == 0 {
            csv.push_str(&format!("1,{},20000,0,0,0,{tslt},1\n", u8::from(i % 100 == 0)));
        } else {
            csv.push_str(&format!("0,NA,NA,0,0,NA,{tslt},1\n"));
        }
    }
    fs::write(dir.path().join("s.csv"), &csv).unwrap();
    let o = rita(&["estimate", "--data", "s.csv", "--out", "e"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));

    fs::write(dir.path().join("map.csv"), "label,years\n<6m,0.2\n").unwrap();
    fs::write(dir.path().join("c.cfg"), "tslt_map = map.csv\n").unwrap();
    let o = rita(&["estimate", "--config", "c.cfg", "--data", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("unknown category `6-12m`"));
}

use std::process::{Command, Output};

use poolplan::output::{parse_csv, validate_json};
use poolplan::sweep::normalize_ks;
use poolplan::{integer_optimum, Prevalence, SearchBounds};

fn poolplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poolplan")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = poolplan(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn table(args: &[&str]) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    parse_csv(&stdout(args)).unwrap()
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn optimize_single_and_double() {
    let (_, h, rows) = table(&["optimize", "--p", "0.01112", "--k", "1,2"]);
    assert_eq!(rows.len(), 2);
    let s = col(&h, "s_integer");
    let c = col(&h, "expected_cost");
    assert_eq!(rows[0][s], "10");
    assert_eq!(rows[1][s], "23");
    assert!((rows[0][c].parse::<f64>().unwrap() - 0.206).abs() < 5e-4);
    assert!((rows[1][c].parse::<f64>().unwrap() - 0.145).abs() < 5e-4);
    let sv = col(&h, "savings_vs_single_percent");
    assert!((rows[1][sv].parse::<f64>().unwrap() - 29.49).abs() < 0.01);
}

#[test]
fn optimize_triple_and_quadruple() {
    let (_, h, rows) = table(&["optimize", "--p", "0.01112", "--k", "3,4"]);
    let s = col(&h, "s_integer");
    let c = col(&h, "expected_cost");
    assert_eq!(rows[0][s], "36");
    assert!((rows[0][c].parse::<f64>().unwrap() - 0.128).abs() < 1.5e-3);
    // The exact scan puts k = 4 at 48 (0.122066) just ahead of 47 (0.122086).
    assert_eq!(rows[1][s], "48");
    assert!((rows[1][c].parse::<f64>().unwrap() - 0.122).abs() < 1.5e-3);
}

#[test]
fn practical_cap_is_reported() {
    let (_, h, rows) = table(&["optimize", "--p", "0.0001", "--k", "2", "--practical-cap", "64"]);
    assert_eq!(rows[0][col(&h, "s_integer")], "64");
    assert_eq!(rows[0][col(&h, "cap_binding")], "true");
}

#[test]
fn exit_codes() {
    assert_eq!(poolplan(&["optimize", "--p", "0"]).status.code(), Some(1));
    assert_eq!(poolplan(&["optimize", "--p", "1.5"]).status.code(), Some(1));
    assert_eq!(poolplan(&["optimize"]).status.code(), Some(2));
    assert_eq!(poolplan(&["optimize", "--p", "abc"]).status.code(), Some(2));
    assert_eq!(poolplan(&["sweep", "--p-min", "0.2", "--p-max", "0.1"]).status.code(), Some(2));
    assert_eq!(poolplan(&["figure-data", "7"]).status.code(), Some(2));
    assert_eq!(poolplan(&["simulate", "--n", "10", "--s", "20", "--p", "0.1"]).status.code(), Some(1));
    assert_eq!(poolplan(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_rows_recompute_exactly() {
    let (_, h, rows) = table(&["sweep", "--points", "60", "--k", "1,2,3"]);
    assert_eq!(rows.len(), 60);
    let bounds = SearchBounds::default();
    let ks = normalize_ks(&[1, 2, 3]).unwrap();
    for row in &rows {
        let p: f64 = row[0].parse().unwrap();
        for &k in &ks {
            let plan = integer_optimum(Prevalence::new(p).unwrap(), k, &bounds).unwrap();
            assert_eq!(row[col(&h, &format!("s{}_opt", k.get()))], plan.s_integer.to_string());
            let cost: f64 = row[col(&h, &format!("cost_{}", k.get()))].parse().unwrap();
            assert_eq!(cost, plan.expected_cost);
        }
        let sv: f64 = row[col(&h, "savings_percent")].parse().unwrap();
        assert_eq!(sv, poolplan::savings_percent(Prevalence::new(p).unwrap(), &bounds).unwrap());
    }
}

#[test]
fn default_sweep_is_monotone_and_crosses_ten_percent() {
    let (_, h, rows) = table(&["sweep"]);
    assert_eq!(rows.len(), 500);
    let p: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[0] < w[1]));
    let s1: Vec<u32> = rows.iter().map(|r| r[col(&h, "s1_opt")].parse().unwrap()).collect();
    assert!(s1.windows(2).all(|w| w[1] <= w[0]));
    let sv: Vec<f64> = rows.iter().map(|r| r[col(&h, "savings_percent")].parse().unwrap()).collect();
    let i = sv.iter().position(|&v| v < 10.0).unwrap();
    assert!(p[i - 1] < 0.0545 && p[i] > 0.0535, "{} {}", p[i - 1], p[i]);
    let near_p10 = p.iter().enumerate().min_by(|a, b| (a.1 - 0.01112).abs().total_cmp(&(b.1 - 0.01112).abs())).unwrap().0;
    assert!((sv[near_p10] - 30.0).abs() < 1.5);
}

#[test]
fn json_outputs_validate() {
    for args in [
        vec!["optimize", "--p", "0.02", "--k", "1,2,3", "--format", "json"],
        vec!["sweep", "--points", "10", "--format", "json"],
        vec!["figure-data", "3", "--points", "10", "--format", "json"],
        vec!["simulate", "--n", "100", "--fixed-positives", "3", "--s", "10", "--trials", "5", "--format", "json"],
    ] {
        let text = stdout(&args);
        let doc = validate_json(&text).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        assert!(!doc.rows.is_empty());
        assert_eq!(doc.metadata.version, env!("CARGO_PKG_VERSION"));
    }
}

fn recorded_command(text: &str) -> Vec<String> {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# command: "))
        .map(str::to_owned)
        .or_else(|| validate_json(text).ok().map(|d| d.metadata.command))
        .unwrap();
    line.split_whitespace().skip(1).map(str::to_owned).collect()
}

#[test]
fn recorded_command_reproduces_output() {
    for args in [
        vec!["optimize", "--p", "0.033", "--k", "2,1", "--practical-cap", "64"],
        vec!["sweep", "--grid", "lin", "--points", "7", "--p-min", "0.01", "--p-max", "0.1", "--format", "json"],
        vec!["figure-data", "2", "--points", "5"],
        vec!["simulate", "--n", "300", "--p", "0.02", "--s", "12", "--trials", "9", "--seed", "77", "--fn-rate", "0.05"],
    ] {
        let first = stdout(&args);
        let replay = recorded_command(&first);
        let replay: Vec<&str> = replay.iter().map(String::as_str).collect();
        assert_eq!(first, stdout(&replay), "{args:?}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--n", "100", "--p", "0.01", "--k", "2", "--s", "23", "--trials", "10", "--seed", "7"];
    let a = poolplan(&args);
    let b = poolplan(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_intro_example_double_below_single() {
    let mean = |k: &str, s: &str| -> f64 {
        let (_, h, rows) = table(&[
            "simulate", "--n", "1012", "--fixed-positives", "11", "--k", k, "--s", s, "--trials", "10000", "--seed", "42",
        ]);
        rows[0][col(&h, "mean_total_tests")].parse().unwrap()
    };
    let double = mean("2", "23");
    let single = mean("1", "10");
    assert!(double < single && single < 210.0, "{double} {single}");
}

#[test]
fn simulate_false_negatives_lower_sensitivity() {
    let (_, h, rows) = table(&[
        "simulate", "--n", "1000", "--p", "0.02", "--k", "2", "--s", "20", "--trials", "50", "--fn-rate", "0.1",
    ]);
    let sens: f64 = rows[0][col(&h, "sensitivity")].parse().unwrap();
    assert!(sens < 1.0);
    assert!(rows[0][col(&h, "total_missed")].parse::<u64>().unwrap() > 0);
}

#[test]
fn emit_trials_and_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let trials = dir.path().join("trials.csv");
    let report = dir.path().join("report.csv");
    let args = [
        "simulate", "--n", "50", "--fixed-positives", "2", "--k", "2", "--s", "10", "--trials", "6", "--seed", "3",
    ];
    let printed = stdout(&args);
    let mut with_files: Vec<&str> = args.to_vec();
    with_files.extend(["--emit-trials", trials.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(stdout(&with_files), "");
    assert_eq!(std::fs::read_to_string(&report).unwrap(), printed);

    let (_, h, rows) = parse_csv(&std::fs::read_to_string(&trials).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[col(&h, "trial_index")], i.to_string());
        assert_eq!(row[col(&h, "pool_tests")], "10");
        assert_eq!(row[col(&h, "positives")], "2");
    }
}

#[test]
fn figure_data_columns() {
    let (_, h, _) = table(&["figure-data", "1", "--points", "5"]);
    assert_eq!(h, vec!["p", "s1_opt"]);
    let (_, h, _) = table(&["figure-data", "2", "--points", "5"]);
    assert_eq!(h, vec!["p", "s2_opt"]);
    let (_, h, _) = table(&["figure-data", "3", "--points", "5"]);
    assert_eq!(h, vec!["p", "cost_1", "cost_2"]);
    let (_, h, _) = table(&["figure-data", "4", "--points", "5"]);
    assert_eq!(h, vec!["p", "savings_percent"]);
}

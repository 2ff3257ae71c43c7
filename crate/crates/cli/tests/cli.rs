use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eulerian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eulerian"))
        .args(args)
        .env_remove("EULERIAN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let out = eulerian(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", String::from_utf8_lossy(&out.stderr)));
    (v, code)
}

fn table<'a>(record: &'a Value, name: &str) -> &'a Vec<Value> {
    record["payload"]["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == name)
        .unwrap_or_else(|| panic!("no table {name}"))["rows"]
        .as_array()
        .unwrap()
}

fn cells(row: &Value) -> Vec<&str> {
    row.as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect()
}

fn weights(record: &Value) -> Vec<(String, String)> {
    table(record, "weights")
        .iter()
        .map(|r| {
            let c = cells(r);
            (c[0].to_string(), c[2].to_string())
        })
        .filter(|(_, w)| w != "0/1")
        .collect()
}

#[test]
fn triangle_rows() {
    let (r, code) = json(&["triangle", "--rows", "6"]);
    assert_eq!(code, 0);
    let rows = table(&r, "eulerian");
    assert_eq!(cells(rows.last().unwrap()), ["6", "1", "57", "302", "302", "57", "1"]);

    let (r, _) = json(&["triangle", "--rows", "1"]);
    assert_eq!(cells(&table(&r, "eulerian")[0]), ["1", "1"]);

    let (r, _) = json(&["triangle", "--rows", "9", "--from", "9", "--formula", "explicit"]);
    assert_eq!(table(&r, "eulerian").len(), 1);
}

#[test]
fn triangle_verify() {
    let (r, code) = json(&["triangle", "--verify", "--rows", "20", "--kappa", "10"]);
    assert_eq!(code, 0);
    assert_eq!(r["passed"], true);
    assert_eq!(r["payload"]["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn usage_errors() {
    assert_eq!(eulerian(&["triangle", "--rows", "0"]).status.code(), Some(2));
    assert_eq!(eulerian(&["triangle", "--formula", "magic"]).status.code(), Some(2));
    assert_eq!(eulerian(&["boundary", "--theta", "upper"]).status.code(), Some(2));
    assert_eq!(
        eulerian(&["boundary", "--theta", "half", "--format", "array", "--check", "all"]).status.code(),
        Some(0)
    );
    assert_eq!(eulerian(&["triangle", "--format", "array"]).status.code(), Some(2));
    assert_eq!(eulerian(&["mix", "1/3@half"]).status.code(), Some(2));
}

#[test]
fn boundary_arrays() {
    let (r, _) = json(&["boundary", "--theta", "half", "--rows", "4"]);
    let rows = table(&r, "W");
    assert_eq!(cells(&rows[3]), ["4", "1/24", "1/24", "1/24", "1/24"]);

    let out = eulerian(&["boundary", "--theta", "upper:0", "--rows", "5", "--format", "array"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(5).unwrap(), "1/1 0/1 0/1 0/1 0/1");

    let (r, code) = json(&["boundary", "--theta", "lower:2", "--rows", "6", "--check", "all"]);
    assert_eq!(code, 0);
    assert!(r["payload"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(r["parameters"]["theta_value"], "1/3");
}

#[test]
fn decompose_left_columns() {
    let (r, code) = json(&["decompose", "--left", "1,1/2,1/6,1/24"]);
    assert_eq!(code, 0);
    assert_eq!(r["payload"]["verdict"], "member");
    assert_eq!(weights(&r), [("half".to_string(), "1/1".to_string())]);

    let (r, _) = json(&["decompose", "--left", "1,1,1"]);
    assert_eq!(weights(&r), [("upper:0".to_string(), "1/1".to_string())]);
}

#[test]
fn decompose_non_member() {
    let (r, code) = json(&["decompose", "--left", "1,2"]);
    assert_eq!(code, 0);
    assert!(r["payload"]["verdict"].as_str().unwrap().starts_with("non-member"));
    assert_eq!(eulerian(&["--strict", "decompose", "--left", "1,2"]).status.code(), Some(1));
    assert_eq!(eulerian(&["decompose", "--left", "2,1"]).status.code(), Some(2));
}

#[test]
fn mix_then_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("mix.txt");
    let f = file.to_str().unwrap();
    let out = eulerian(&["mix", "--rows", "40", "--out", f, "1/2@half", "1/4@upper:0", "1/4@lower:3"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    // V(2,0) = theta: 1/2 * 1/2 + 1/4 * 1 + 1/4 * 3/8.
    assert_eq!(text.lines().nth(2).unwrap().split(' ').next(), Some("19/32"));

    let (r, code) = json(&["decompose", f, "--support", "half,upper:0,lower:3"]);
    assert_eq!(code, 0);
    let mut want = vec![
        ("half".to_string(), "1/2".to_string()),
        ("upper:0".to_string(), "1/4".to_string()),
        ("lower:3".to_string(), "1/4".to_string()),
    ];
    let mut got = weights(&r);
    want.sort();
    got.sort();
    assert_eq!(got, want);

    let (r, code) = json(&["decompose", f, "--mode", "limit"]);
    assert_eq!(code, 0);
    let mut got = weights(&r);
    got.sort();
    assert_eq!(got, want);
}

#[test]
fn out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_eulerian"))
        .args(["triangle", "--rows", "3", "--out", "sub/t.json"])
        .env("EULERIAN_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(Path::new(&dir.path().join("sub/t.json")).exists());
}

#[test]
fn sample_bucket_frequencies() {
    let (r, code) = json(&["sample", "bucket", "--kappa", "1", "--n", "3", "--trials", "1000000", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_eq!(r["seed"], 7);
    let rows = table(&r, "permutations");
    assert_eq!(rows.len(), 6);
    for row in rows {
        let c = cells(row);
        let expected = match c[1] {
            "0" => "1/2",
            "1" => "1/8",
            _ => "0/1",
        };
        assert_eq!(c[4], expected, "{c:?}");
        let z: f64 = c[5].parse().unwrap();
        assert!(z.abs() <= 4.0, "{c:?}");
    }
}

#[test]
fn seeded_output_is_byte_identical() {
    let args = ["sample", "exchangeable", "--n", "4", "--trials", "20000", "--seed", "11", "--format", "csv"];
    let a = eulerian(&args).stdout;
    assert_eq!(a, eulerian(&args).stdout);
    let mut other = args;
    other[7] = "12";
    assert_ne!(a, eulerian(&other).stdout);
    let run = ["chain", "couple", "--n", "8", "--kappa-a", "1", "--kappa-b", "5", "--runs", "500", "--seed", "4"];
    assert_eq!(eulerian(&run).stdout, eulerian(&run).stdout);
}

#[test]
fn strict_requires_seed() {
    assert_eq!(eulerian(&["--strict", "sample", "moments", "--n", "5", "--trials", "1000"]).status.code(), Some(2));
    assert_eq!(
        eulerian(&["--strict", "--seed", "1", "sample", "moments", "--n", "5", "--trials", "1000"]).status.code(),
        Some(0)
    );
    let (r, _) = json(&["sample", "moments", "--n", "5", "--trials", "1000"]);
    assert!(r["seed"].is_u64());
}

#[test]
fn chain_examples() {
    let (r, _) = json(&["chain", "run", "--start", "2,0", "--seed", "1"]);
    assert_eq!(cells(&table(&r, "paths")[0]), ["0", "(2,0),(1,0)"]);

    let (r, _) = json(&["chain", "path", "--perm", "312"]);
    assert_eq!(r["parameters"]["path"], "(1,0),(2,0),(3,1)");
    let (r, _) = json(&["chain", "path", "--vertices", "(1,0),(2,0),(3,1)", "--labels", "0,0"]);
    assert_eq!(r["parameters"]["perm"], "312");

    let (r, code) = json(&["chain", "propagate", "--start", "4,1"]);
    assert_eq!(code, 0);
    assert_eq!(cells(&table(&r, "marginals")[1]), ["3", "3/11", "8/11", "0/1"]);
}

#[test]
fn moments_mean() {
    let (r, code) = json(&["sample", "moments", "--n", "10", "--trials", "1000000", "--seed", "3"]);
    assert_eq!(code, 0);
    let mean: f64 = cells(&table(&r, "moments")[0])[3].parse().unwrap();
    assert!((mean - 4.5).abs() < 0.01);
    assert!(r["parameters"]["note"].as_str().unwrap().contains("11/12"));
}

#[test]
fn limit_reports() {
    let (r, code) = json(&["limit", "martin", "--schedule", "constant:2", "--n-cap", "60"]);
    assert_eq!(code, 0);
    assert_eq!(r["parameters"]["limit"], "upper:2");
    let (_, code) = json(&["limit", "martin", "--schedule", "middle", "--n-cap", "30"]);
    assert_eq!(code, 1);
    let (r, _) = json(&["limit", "saturation", "--kappa", "1", "--n-max", "4"]);
    assert_eq!(cells(&table(&r, "trajectory")[2]), ["4", "6.875000e-1", "11/16"]);
}

#[test]
fn csv_mirrors_json() {
    let args = ["chain", "couple", "--n", "6", "--kappa-a", "0", "--kappa-b", "3", "--runs", "200", "--seed", "9"];
    let (r, _) = json(&args);
    let mut with_csv = args.to_vec();
    with_csv.extend(["--format", "csv"]);
    let text = eulerian(&with_csv).stdout;
    let records: Vec<Vec<String>> = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_slice())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    for t in r["payload"]["tables"].as_array().unwrap() {
        let name = t["name"].as_str().unwrap();
        let at = records.iter().position(|r| r == &["table", name]).unwrap();
        let columns: Vec<&str> = cells(&t["columns"]);
        assert_eq!(records[at + 1], columns);
        for (i, row) in t["rows"].as_array().unwrap().iter().enumerate() {
            assert_eq!(records[at + 2 + i], cells(row));
        }
    }
    assert!(records.contains(&vec!["meta".into(), "seed".into(), "9".into()]));
}

/// Every cell is an integer, a `p/q` rational, a decimal in the stated
/// format, or text.
#[test]
fn numeric_cells_are_exact_or_stated_decimals() {
    let (r, _) = json(&["sample", "uniform-sum", "--n", "4", "--trials", "5000", "--seed", "1"]);
    for row in table(&r, "bins") {
        let c = cells(row);
        assert!(c[0].parse::<u64>().is_ok() && c[1].parse::<u64>().is_ok());
        for q in [c[2], c[3]] {
            let (a, b) = q.split_once('/').unwrap();
            assert!(a.parse::<i64>().is_ok() && b.parse::<u64>().is_ok());
        }
        let (mantissa, _) = c[4].split_once('e').unwrap();
        assert_eq!(mantissa.trim_start_matches('-').split_once('.').unwrap().1.len(), 6);
    }
}

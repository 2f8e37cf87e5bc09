use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn hzeros(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hzeros")).args(args).output().expect("spawn hzeros")
}

fn hzeros_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hzeros")).args(args).env(key, value).output().expect("spawn hzeros")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// The subset of JSON Schema used by the shipped report schema.
fn validate(schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(ts) => ts.iter().any(|s| type_matches(s.as_str().unwrap(), v)),
            _ => true,
        };
        if !ok {
            return Err(format!("{at}: expected type {t}, got {v}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}"));
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return Err(format!("{at}: {x} < {min}"));
        }
    }
    if let Value::Object(map) = v {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req {
                if !map.contains_key(key.as_str().unwrap()) {
                    return Err(format!("{at}: missing {key}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in map {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, value, &format!("{at}.{key}"))?,
                None => match schema.get("additionalProperties") {
                    Some(Value::Bool(false)) => return Err(format!("{at}: unexpected {key}")),
                    Some(sub @ Value::Object(_)) => validate(sub, value, &format!("{at}.{key}"))?,
                    _ => {}
                },
            }
        }
    }
    if let Some(Value::Array(branches)) = schema.get("oneOf") {
        let passing = branches.iter().filter(|b| validate(b, v, at).is_ok()).count();
        if passing != 1 {
            return Err(format!("{at}: {passing} oneOf branches match"));
        }
    }
    Ok(())
}

fn number(v: &Value, path: &[&str]) -> f64 {
    path.iter().fold(v, |acc, k| &acc[*k]).as_f64().unwrap_or_else(|| panic!("{path:?} not a number"))
}

fn results_only(v: &Value) -> Value {
    let mut v = v.clone();
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hzeros-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn expect_analytic_case_is_exact() {
    let v = json_of(&hzeros(&["expect", "--ensemble", "weyl", "--n", "7", "--m", "0"]));
    validate(&schema(), &v, "$").unwrap();
    assert!((number(&v, &["results", "expected_zeros"]) - 7.0).abs() < 7e-6);
    assert_eq!(v["schema_version"], "1.0");
    assert_eq!(v["ensemble"]["kind"], "weyl");
    assert_eq!(v["command"]["name"], "expect");
    assert_eq!(number(&v, &["results", "truncation_point"]), 2.0);
}

#[test]
fn expect_equal_degrees() {
    let n32 = 200f64.powf(1.5);
    let v = json_of(&hzeros(&["expect", "--ensemble", "kostlan", "--n", "200", "--m", "200"]));
    let ratio = number(&v, &["results", "expected_zeros"]) / n32;
    assert!((ratio / (PI / 4.0) - 1.0).abs() < 0.10, "{ratio}");

    // weyl at this degree still sits well above m^(3/2)/3; value checked against an
    // independent scipy quadrature
    let v = json_of(&hzeros(&["expect", "--ensemble", "weyl", "--n", "200", "--m", "200"]));
    let ratio = 3.0 * number(&v, &["results", "expected_zeros"]) / n32;
    assert!((ratio - 1.3804).abs() < 1e-3, "{ratio}");
}

#[test]
fn expect_regions_and_errors() {
    let disc = json_of(&hzeros(&["expect", "--ensemble", "naive", "--n", "20", "--m", "5", "--region", "disc:1"]));
    let ring =
        json_of(&hzeros(&["expect", "--ensemble", "naive", "--n", "20", "--m", "5", "--region", "annulus:1,1e8"]));
    let plane = json_of(&hzeros(&["expect", "--ensemble", "naive", "--n", "20", "--m", "5"]));
    let sum = number(&disc, &["results", "expected_zeros"]) + number(&ring, &["results", "expected_zeros"]);
    let total = number(&plane, &["results", "expected_zeros"]);
    assert!((sum / total - 1.0).abs() < 1e-5, "{sum} {total}");
    assert!(disc["results"]["truncation_point"].is_null());

    for bad in [
        vec!["expect", "--ensemble", "weyl", "--n", "3", "--m", "4"],
        vec!["expect", "--ensemble", "gauss", "--n", "3", "--m", "1"],
        vec!["expect", "--ensemble", "weyl", "--n", "3", "--m", "1", "--region", "disc:-1"],
        vec!["expect", "--ensemble", "weyl", "--n", "3", "--m", "1", "--rel-tol", "0.5"],
        vec!["expect", "--ensemble", "weyl", "--n", "3"],
    ] {
        assert_eq!(hzeros(&bad).status.code(), Some(2), "{bad:?}");
    }

    let out = hzeros(&["expect", "--ensemble", "weyl", "--n", "100", "--m", "50", "--max-evaluations", "30"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["converged"], false);
    validate(&schema(), &v, "$").unwrap();
}

#[test]
fn expect_writes_to_file_or_fails_with_io_code() {
    let dir = temp_dir("out");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.json");
    let out = hzeros(&["expect", "--ensemble", "weyl", "--n", "5", "--m", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    validate(&schema(), &v, "$").unwrap();
    let missing = dir.join("no/such/dir/r.json");
    let out = hzeros(&["expect", "--ensemble", "weyl", "--n", "5", "--m", "2", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn intensity_profiles() {
    let dir = temp_dir("profile");
    let out = hzeros(&[
        "intensity", "--ensemble", "weyl", "--n", "100", "--m", "25", "--radial-points", "131", "--r-max", "13",
        "--out-dir", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.join("intensity_profile.csv")).unwrap());
    assert_eq!(header, ["r", "intensity", "density"]);
    assert_eq!(rows.len(), 131);
    for row in &rows {
        assert!((row[2] - row[1] / PI).abs() <= 1e-15 * row[1].abs().max(1.0));
        if (6.5..=9.0).contains(&row[0]) {
            assert!((row[2] * PI - 1.0).abs() < 0.15, "r={} density={}", row[0], row[2]);
        }
    }

    let dir = temp_dir("analytic");
    let out = hzeros(&[
        "intensity", "--ensemble", "weyl", "--n", "100", "--m", "0", "--radial-points", "141", "--r-max", "14",
        "--out-dir", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&std::fs::read_to_string(dir.join("intensity_profile.csv")).unwrap());
    for row in &rows {
        if (2.0..9.0).contains(&row[0]) {
            assert!((row[2] * PI - 1.0).abs() < 0.10, "r={} density={}", row[0], row[2]);
        }
        if row[0] > 11.0 {
            assert!(row[2] < 0.05, "r={} density={}", row[0], row[2]);
        }
    }
}

#[test]
fn intensity_grid_and_difference() {
    let dir = temp_dir("grid");
    let out = hzeros(&[
        "intensity", "--ensemble", "weyl", "--n", "100", "--m", "16", "--grid", "41", "--extent", "12",
        "--radial-points", "121", "--r-max", "12", "--subtract-analytic", "--out-dir", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listing = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listing.lines().count(), 4);

    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.join("intensity_grid.csv")).unwrap());
    assert_eq!(header, ["x", "y", "density"]);
    assert_eq!(rows.len(), 41 * 41);
    assert!(rows.iter().all(|r| r[2] >= 0.0));
    let at = |x: f64, y: f64| rows.iter().find(|r| (r[0] - x).abs() < 1e-9 && (r[1] - y).abs() < 1e-9).unwrap()[2];
    assert!((at(6.0, 0.0) - at(0.0, 6.0)).abs() < 1e-14);

    let (_, diff) =
        parse_csv(&std::fs::read_to_string(dir.join("intensity_profile_minus_analytic.csv")).unwrap());
    let mass = |lo: f64, hi: f64| -> f64 {
        diff.iter().filter(|r| (lo..hi).contains(&r[0])).map(|r| r[2].abs() * r[0]).sum()
    };
    assert!(mass(7.0, 12.0) < 1e-3 * mass(0.0, 7.0));
    assert!(dir.join("intensity_grid_minus_analytic.csv").exists());

    let out = hzeros(&["intensity", "--ensemble", "weyl", "--n", "10", "--m", "2", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweeps() {
    let out = hzeros(&["sweep", "--ensemble", "weyl", "--alpha", "0.5", "--n-list", "100,200,400"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["n", "m", "value", "abs_error", "prediction", "ratio"]);
    let dev: Vec<f64> = rows.iter().map(|r| (r[5] - 1.0).abs()).collect();
    assert!(dev[1] < dev[0] && dev[2] < dev[1], "{dev:?}");
    assert_eq!(rows[2][1], 200.0);
    assert!((rows[2][4] - 200f64.powf(1.5) / 3.0).abs() < 1e-9);

    let out = hzeros(&["sweep", "--ensemble", "weyl", "--m-fixed", "2", "--n-list", "100,200,500"]);
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert!((rows[2][5] - 1.0).abs() < 0.05 && (rows[2][5] - 1.0).abs() < (rows[0][5] - 1.0).abs());

    let value = |kind: &str| {
        let out = hzeros(&["sweep", "--ensemble", kind, "--alpha", "1", "--n-list", "200"]);
        parse_csv(&String::from_utf8(out.stdout).unwrap()).1[0].clone()
    };
    let (w, k) = (value("weyl"), value("kostlan"));
    assert!((k[5] - 1.0).abs() < 0.01);
    // the constants differ by 3 pi / 4, but weyl is still far from its limit at n = 200
    assert!((k[2] / w[2] - 1.7107).abs() < 1e-3, "{}", k[2] / w[2]);

    let out = hzeros(&["sweep", "--ensemble", "weyl", "--alpha", "0.5", "--n-list", "100", "--mode", "conjecture"]);
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert!((rows[0][4] - (50f64.powf(1.5) / 3.0 + 100.0)).abs() < 1e-9);

    assert_eq!(hzeros(&["sweep", "--ensemble", "naive", "--alpha", "1", "--n-list", "20"]).status.code(), Some(2));
    assert_eq!(
        hzeros(&["sweep", "--ensemble", "weyl", "--alpha", "0.5", "--m-fixed", "2", "--n-list", "20"]).status.code(),
        Some(2)
    );
}

#[test]
fn montecarlo_reports() {
    let v = json_of(&hzeros(&["montecarlo", "--ensemble", "weyl", "--n", "4", "--m", "0", "--trials", "50"]));
    validate(&schema(), &v, "$").unwrap();
    assert_eq!(number(&v, &["results", "mean"]), 4.0);
    assert_eq!(number(&v, &["results", "stderr"]), 0.0);

    let args = ["montecarlo", "--ensemble", "weyl", "--n", "6", "--m", "3", "--trials", "200", "--seed", "42"];
    let a = json_of(&hzeros(&args));
    validate(&schema(), &a, "$").unwrap();
    assert!(number(&a, &["results", "z_score"]).abs() <= 3.0);
    assert_eq!(a["seed"], 42);
    let b = json_of(&hzeros_env(&args, "HZ_THREADS", "1"));
    assert_eq!(results_only(&a), results_only(&b));

    assert_eq!(hzeros(&["montecarlo", "--ensemble", "weyl", "--n", "11", "--m", "3"]).status.code(), Some(2));
    assert_eq!(hzeros_env(&args, "HZ_THREADS", "many").status.code(), Some(2));
}

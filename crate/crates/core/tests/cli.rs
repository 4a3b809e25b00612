use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use iontomo::phase_space::{tomogram_grid, Axis};
use iontomo::tomography::GridTomogram;
use iontomo::{reconstruct_density_matrix, solve_epsilon, StateSpec, TrapConfig, C64};

fn iontomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iontomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/density_matrix.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// The subset of JSON Schema the density-matrix schema uses: `type`, `enum`,
/// `minimum`, `required`, `properties`, `additionalProperties: false` and
/// `items`. Returns the first violation.
fn validate(schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "string" => v.is_string(),
            other => return Err(format!("{at}: unsupported type {other}")),
        };
        if !ok {
            return Err(format!("{at}: expected {ty}, got {v}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if v.as_f64().is_some_and(|x| x < min) {
            return Err(format!("{at}: {v} below {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing `{key}`"));
            }
        }
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, value, &format!("{at}.{key}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected `{key}`"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, item) in arr.iter().enumerate() {
            validate(items, item, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

#[test]
fn default_tomogram_is_the_vacuum() {
    let csv = stdout(&iontomo(&["tomogram"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("X,mu,nu,w"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 241);
    let origin = rows.iter().find(|r| r[0] == 0.0).expect("X = 0 is a grid node");
    let expected = 1.0 / std::f64::consts::PI.sqrt();
    assert!((origin[3] - expected).abs() < 1e-12, "{} vs {expected}", origin[3]);
    assert_eq!((origin[1], origin[2]), (1.0, 0.0));
}

#[test]
fn headers_match_the_interface() {
    let cases: [(&[&str], &str); 6] = [
        (&["epsilon", "--tmax", "1", "--samples", "3"], "t,eps_re,eps_im,epsdot_re,epsdot_im,wronskian_im_err"),
        (&["tomogram", "--x-steps", "3"], "X,mu,nu,w"),
        (&["wigner", "--q-steps", "2", "--p-steps", "2"], "q,p,W"),
        (&["reconstruct-wigner", "--q-steps", "2", "--p-steps", "2"], "q,p,W"),
        (&["photon-stats", "--nmax", "2"], "n,w"),
        (
            &["check-evolution", "--points", "1"],
            "point,X,mu,nu,t,res_4h,res_2h,res_h,slope",
        ),
    ];
    for (args, header) in cases {
        let out = stdout(&iontomo(args));
        assert_eq!(out.lines().next(), Some(header), "{args:?}");
        assert!(!out.contains('\r'));
    }
}

#[test]
fn identical_flags_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let args = |name: &str| {
        vec![
            "tomogram".to_string(),
            "--kind".into(),
            "f-coherent".into(),
            "--beta-re".into(),
            "0.6".into(),
            "--beta-im".into(),
            "0.2".into(),
            "--t".into(),
            "1.3".into(),
            "--phi".into(),
            "0.4".into(),
            "--out".into(),
            dir.path().join(name).display().to_string(),
        ]
    };
    for name in ["a.csv", "b.csv"] {
        let a = args(name);
        stdout(&iontomo(&a.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(a.len() > 1000);
    assert_eq!(a, b);

    let dm = ["reconstruct-dm", "--kind", "number", "--level", "1", "--n", "3"];
    assert_eq!(stdout(&iontomo(&dm)), stdout(&iontomo(&dm)));
}

#[test]
fn bad_kappa_is_a_validation_error() {
    let out = iontomo(&["tomogram", "--kappa", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}

#[test]
fn usage_errors_exit_1() {
    let out = iontomo(&["tomogram", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(iontomo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(iontomo(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_2() {
    // the equal-powers kernel is not Hermitian for complex amplitudes
    let out = iontomo(&[
        "tomogram", "--kind", "f-coherent", "--beta-re", "0.5", "--beta-im", "0.5", "--t", "1", "--mu", "0.6",
        "--nu", "0.8", "--equal-powers-kernel",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("imaginary residue"));
}

#[test]
fn density_matrix_json_matches_schema() {
    let out = stdout(&iontomo(&["reconstruct-dm", "--kind", "f-coherent", "--beta-re", "0.6", "--n", "4"]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    validate(&schema(), &doc, "$").unwrap();
    assert_eq!(doc["entries"].as_array().unwrap().len(), 25);
    assert!((doc["report"]["trace"].as_f64().unwrap() - 1.0).abs() < 1e-2);

    // the checker itself rejects what it should
    let mut broken = doc.clone();
    broken["frame"] = Value::from("rotating");
    assert!(validate(&schema(), &broken, "$").is_err());
    broken = doc.clone();
    broken["entries"][3].as_object_mut().unwrap().remove("im");
    assert!(validate(&schema(), &broken, "$").is_err());
    broken = doc;
    broken["extra"] = Value::from(1);
    assert!(validate(&schema(), &broken, "$").is_err());
}

#[test]
fn tomogram_csv_round_trip_reproduces_the_direct_reconstruction() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("tomo.csv");
    let t = 0.7;
    stdout(&iontomo(&[
        "tomogram", "--alpha-re", "0.5", "--alpha-im", "-0.2", "--t", "0.7",
        "--x-min", "-8", "--x-max", "8", "--x-steps", "161",
        "--mu-min", "-4", "--mu-max", "4", "--mu-steps", "40",
        "--nu-min", "-4", "--nu-max", "4", "--nu-steps", "40",
        "--out", path.to_str().unwrap(),
    ]));
    let out = stdout(&iontomo(&["reconstruct-dm", "--tomogram", path.to_str().unwrap(), "--t", "0.7", "--n", "3"]));
    let doc: Value = serde_json::from_str(&out).unwrap();

    let traj = solve_epsilon(TrapConfig::default(), t + 1.0, 2).unwrap();
    let s = StateSpec::coherent(C64::new(0.5, -0.2), 40).unwrap();
    let (x, mu, nu) = (
        Axis::new(-8.0, 8.0, 161).unwrap().nodes(),
        Axis::new(-4.0, 4.0, 40).unwrap().nodes(),
        Axis::new(-4.0, 4.0, 40).unwrap().nodes(),
    );
    let grid = GridTomogram::new(tomogram_grid(&s, &traj, t, &x, &mu, &nu).unwrap()).unwrap();
    let rho = reconstruct_density_matrix(&grid, 3, &grid.quadrature_spec().unwrap()).unwrap();

    let mut worst = 0.0f64;
    for e in doc["entries"].as_array().unwrap() {
        let (m, n) = (e["m"].as_u64().unwrap() as usize, e["n"].as_u64().unwrap() as usize);
        let v = C64::new(e["re"].as_f64().unwrap(), e["im"].as_f64().unwrap());
        worst = worst.max((v - rho.get(m, n)).norm());
    }
    assert!(worst <= 1e-6, "CSV path differs from the in-memory path by {worst:e}");
}

#[test]
fn config_file_is_merged_under_explicit_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "alpha-re = 1.5\nx-steps = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&iontomo(&["--config", cfg, "tomogram"]));
    let explicit = stdout(&iontomo(&["tomogram", "--alpha-re", "1.5", "--x-steps", "5"]));
    assert_eq!(from_file, explicit);
    let overridden = stdout(&iontomo(&["--config", cfg, "tomogram", "--x-steps", "3"]));
    assert_eq!(overridden.lines().count(), 4);

    fs::write(dir.path().join("bad.cfg"), "no-such-key = 1\n").unwrap();
    let out = iontomo(&["--config", dir.path().join("bad.cfg").to_str().unwrap(), "tomogram"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["wigner", "--kind", "number", "--level", "2", "--t", "0.9", "--q-steps", "21", "--p-steps", "21"];
    let one = stdout(&iontomo(&[&["--threads", "1"][..], &args].concat()));
    let three = stdout(&iontomo(&[&["--threads", "3"][..], &args].concat()));
    assert_eq!(one, three);
}

#[test]
fn state_json_lists_coefficients() {
    let out = stdout(&iontomo(&["state", "--kind", "number", "--level", "2", "--truncation", "4"]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "number");
    let c = doc["coefficients"].as_array().unwrap();
    assert_eq!(c.len(), 5);
    assert_eq!((c[2]["n"].as_u64(), c[2]["re"].as_f64()), (Some(2), Some(1.0)));
    assert_eq!(doc["tail_bound"].as_f64(), Some(0.0));
}

#[test]
fn check_battery_passes() {
    let out = iontomo(&["check", "--json"]);
    let text = stdout(&out);
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["criteria"].as_array().unwrap().len(), 10);
}

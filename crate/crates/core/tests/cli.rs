use std::process::{Command, Output};

use needle_cd::fixtures;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_needle-cd"))
        .args(args)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    fixtures::path(name).to_string_lossy().into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn coeffs_reports_known_values() {
    let o = run(&[
        "coeffs",
        "--t",
        "0.5",
        "--K",
        "2",
        "--N",
        "2",
        "--theta",
        "1.5707963267948966",
        "--oracle",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["tau"], serde_json::json!(0.750361896494481));
    assert_eq!(v["oracle"]["agree"], Value::Bool(true));
}

#[test]
fn coeffs_infinite_value_is_a_string() {
    let o = run(&[
        "coeffs", "--t", "0.5", "--K", "1", "--N", "1", "--theta", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["sigma"], Value::String("inf".into()));
}

#[test]
fn negative_curvature_parses() {
    let o = run(&[
        "coeffs", "--t", "0.5", "--K", "-1", "--N", "3", "--theta", "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn domain_error_exits_two() {
    let o = run(&["coeffs", "--t", "2", "--K", "0", "--N", "2", "--theta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn usage_error_exits_two() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["coeffs", "--t", "0.5"]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_two() {
    let o = run(&["entropy", "--space", "/nonexistent.json", "--N", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_grid_fails_with_exit_one() {
    let space = fixture("grid3_corrupted.json");
    let o = run(&[
        "check-cd1u",
        "--space",
        &space,
        "--u=-x",
        "--K",
        "0",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["passed"], Value::Bool(false));
    assert_eq!(v["rays"][1]["passed"], Value::Bool(false));
    assert_eq!(v["rays"][0]["passed"], Value::Bool(true));
}

#[test]
fn clean_grid_passes() {
    let space = fixture("grid5.json");
    let o = run(&[
        "check-cd1u",
        "--space",
        &space,
        "--u=-x",
        "--K",
        "0",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn decompose_agrees_with_brute_force() {
    let space = fixture("tripod.json");
    let o = run(&["decompose", "--space", &space, "--u=-d:l1", "--oracle"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&o);
    assert_eq!(v["oracle"]["agree"], Value::Bool(true));
    assert!(v["branching"]["plus"]
        .as_array()
        .unwrap()
        .contains(&Value::String("c".into())));
}

#[test]
fn wasserstein_matches_oracle() {
    let space = fixture("grid3.json");
    let (a, b) = (fixture("grid3_left.json"), fixture("grid3_right.json"));
    let o = run(&[
        "wasserstein",
        "--space",
        &space,
        "--mu0",
        &a,
        "--mu1",
        &b,
        "--oracle",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["value"], serde_json::json!(2.0));
    assert_eq!(v["oracle"]["agree"], Value::Bool(true));
}

#[test]
fn glue_outputs_geodesic() {
    let space = fixture("grid3.json");
    let (a, b) = (fixture("grid3_left.json"), fixture("grid3_right.json"));
    let o = run(&[
        "glue", "--space", &space, "--mu0", &a, "--mu1", &b, "--u=-x", "--K", "0", "--N", "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&o);
    assert_eq!(v["geodesic_identity_ok"], Value::Bool(true));
    assert_eq!(v["marginals"].as_array().unwrap().len(), 5);
}

#[test]
fn mcp_fixture_passes_flat_and_fails_curved() {
    let args = |k: &'static str| {
        vec![
            "check-mcp".to_string(),
            "--space".into(),
            fixture("path17.json"),
            "--mu0".into(),
            fixture("path17_mu0.json"),
            "--x0".into(),
            "q0".into(),
            "--plan".into(),
            fixture("path17_contraction.json"),
            "--K".into(),
            k.into(),
            "--N".into(),
            "2".into(),
        ]
    };
    let flat = args("0");
    let curved = args("1");
    let o = run(&flat.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0));
    let o = run(&curved.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        json(&o)["report"]["witnesses"][0]["kind"],
        Value::String("infinite_rhs".into())
    );
}

#[test]
fn seed_selects_windows() {
    let space = fixture("grid5.json");
    let base = [
        "check-firstclaim",
        "--space",
        &space,
        "--u=-x",
        "--K",
        "0",
        "--N",
        "2",
        "--windows",
        "5",
    ];
    let a = run(&[&base[..], &["--seed", "1"]].concat());
    let b = run(&[&base[..], &["--seed", "2"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn explicit_window_requires_all_bounds() {
    let space = fixture("grid5.json");
    let o = run(&[
        "check-firstclaim",
        "--space",
        &space,
        "--u=-x",
        "--K",
        "0",
        "--N",
        "2",
        "--r0",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn needle_model_and_svg_output() {
    let dir = std::env::temp_dir().join(format!("needle-cd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("needle.svg");
    let out = dir.join("needle.json");
    let o = run(&[
        "check-needle",
        "--model",
        "sine",
        "--K",
        "1",
        "--N",
        "3",
        "--grid",
        "0.01",
        "--svg",
        svg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], Value::Bool(true));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn table_goes_to_stderr() {
    let space = fixture("grid3.json");
    let o = run(&[
        "check-cd1u",
        "--space",
        &space,
        "--u=-x",
        "--K",
        "0",
        "--N",
        "2",
        "--table",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pass"));
    serde_json::from_slice::<Value>(&o.stdout).unwrap();
}

#[test]
fn report_combines_checks() {
    let space = fixture("grid3_corrupted.json");
    let o = run(&[
        "report", "--space", &space, "--u=-x", "--K", "0", "--N", "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert!(v["space"]["violations"].as_array().unwrap().is_empty());
    assert_eq!(v["cd1u"]["passed"], Value::Bool(false));
}

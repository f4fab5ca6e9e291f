use std::process::{Command, Output};

use serde_json::Value;

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV body with `#` comment lines skipped, keyed by header.
fn table(text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap()).collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn disk_spectrum() {
    let o = steklov(&["spectrum", "--domain", "disk", "--weight", "const:1", "--k", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with(&format!("# steklov {}", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("\"weight\":\"const:1\""));
    let sigma = column(&text, "sigma");
    for (s, e) in sigma.iter().zip([0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]) {
        assert!((s - e).abs() < 1e-12, "{sigma:?}");
    }
}

#[test]
fn ellipse_residuals() {
    let o = steklov(&["ellipse-verify", "--q", "1,2,3,4", "--nmax", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(table(&text).len(), 20);
    for c in ["identity_residual", "laplacian_residual", "product_error"] {
        assert!(column(&text, c).iter().all(|&r| r <= 1e-8));
    }
}

#[test]
fn failed_check_exits_nonzero_but_writes() {
    let o = steklov(&["ellipse-verify", "--q", "3", "--nmax", "4", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(table(&stdout(&o)).len(), 4);
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(steklov(&["spectrum", "--domain", "annulus:1.5"]).status.code(), Some(1));
    assert_eq!(steklov(&["spectrum", "--weight", "const:-1"]).status.code(), Some(1));
    assert_eq!(steklov(&["spectrum", "--domain", "annulus:0.5", "--weight", "const:1|const:1|const:1"]).status.code(), Some(1));
    assert!(!steklov(&["spectrum", "--bogus"]).status.success());
}

#[test]
fn annulus_and_moebius_uniform() {
    let o = steklov(&["spectrum", "--domain", "annulus:0.5", "--k", "12", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ok"], Value::Bool(true));
    let sigma = v["result"]["eigenvalues"].as_array().unwrap();
    // k=0 pair on ρ = 1/2 with lengths 2π, π: σ = (1 + 1/ρ)/ln(1/ρ).
    let expect = 3.0 / 2f64.ln();
    let got: Vec<f64> = sigma.iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(got[0].abs() < 1e-10);
    assert!(got.iter().any(|&s| (s - expect).abs() < 1e-10), "{got:?}");
    let m = steklov(&["spectrum", "--domain", "moebius:0.5", "--k", "3"]);
    assert!(m.status.success());
}

#[test]
fn critical_ellipse_check() {
    let o = steklov(&["check-criticality", "--domain", "ellipse:2", "--weight", "critical", "--objective", "ht-plus:2", "--tol", "1e-8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(column(&stdout(&o), "defect").iter().all(|&d| d < 1e-8));
    // Off the critical ratio the defect is large.
    let o = steklov(&["check-criticality", "--domain", "ellipse:2", "--weight", "critical", "--objective", "ht-plus:1", "--tol", "1e-8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn union_and_degenerate() {
    let o = steklov(&["union", "--attachments", "2", "--k", "5"]);
    let sb = column(&stdout(&o), "sigma_bar");
    assert!(sb[..3].iter().all(|&x| x.abs() < 1e-12));
    assert!((sb[3] - 6.0 * std::f64::consts::PI).abs() < 1e-9);
    let o = steklov(&["degenerate", "--attachments", "1", "--eps-list", "0.2,0.1", "--m", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(table(&text).len(), 6);
    assert!(text.contains("# fit k=2"));
}

#[test]
fn convergence_table() {
    let o = steklov(&["convergence", "--domain", "ellipse:2", "--weight", "critical", "--k", "4", "--degrees", "64,128"]);
    assert!(o.status.success());
    let s = column(&stdout(&o), "sigma_bar_1");
    assert!((s[1] - 2.0 * std::f64::consts::PI / 2f64.sqrt()).abs() < 1e-9, "{s:?}");
}

#[test]
fn config_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let cfg = dir.path().join("cfg.json");
    let body = serde_json::json!({
        "command": "optimize",
        "parameters": { "domain": "moebius:0.5", "objective": "sigma-bar:1", "restarts": 1, "max_iterations": 5, "degree": 4 },
        "output": { "path": out.to_str().unwrap(), "format": "json" },
        "seed": 7
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let run = || {
        let o = steklov(&["run", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(&out).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["params"]["restarts"], 1);
    assert!(v["result"]["value"].as_f64().unwrap() > 2.0 * std::f64::consts::PI);
}

#[test]
fn config_schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"command": "spectrum", "parameters": {"k": 3}, "colour": 1}"#).unwrap();
    assert_eq!(steklov(&["run", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&cfg, r#"{"command": "spectrum", "parameters": {"nope": 3}}"#).unwrap();
    assert_eq!(steklov(&["run", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(steklov(&["run", "/nonexistent/cfg.json"]).status.code(), Some(1));
}

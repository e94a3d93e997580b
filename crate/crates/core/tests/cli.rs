use std::path::{Path, PathBuf};

use fpk_lab::cli::config::{ExperimentConfig, GridConfig, SimSettings};
use fpk_lab::cli::{metric_report, run_with, CONFIG_KEYS, EXIT_NUMERIC, EXIT_PASS, EXIT_USAGE};
use fpk_lab::conditions::CheckOptions;
use fpk_lab::measures::DiscreteMeasure;
use fpk_lab::metrics::MetricKind;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema() -> Value {
    read_json(&root().join("schemas/experiment.json"))
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (vec![], vec![]);
    let mut full = vec!["fpk-lab"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

fn sorted(keys: &[&str]) -> Vec<String> {
    let mut k: Vec<String> = keys.iter().map(|s| s.to_string()).collect();
    k.sort();
    k
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

#[test]
fn schema_matches_the_config_types() {
    let s = schema();
    assert_eq!(keys(&s["properties"]), sorted(&CONFIG_KEYS));
    let defs = &s["$defs"];
    let pairs = [
        ("grid", serde_json::to_value(GridConfig::default()).unwrap()),
        ("check", serde_json::to_value(CheckOptions::default()).unwrap()),
        ("adjoint", serde_json::to_value(GridConfig::default().adjoint).unwrap()),
        ("sim", serde_json::to_value(SimSettings::default()).unwrap()),
    ];
    for (name, defaults) in pairs {
        assert_eq!(keys(&defs[name]["properties"]), keys(&defaults), "{name}");
    }
}

#[test]
fn shipped_configs_validate_and_load() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let doc = read_json(&path);
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", path.display());
        ExperimentConfig::load(&path).unwrap();
        seen += 1;
    }
    assert!(seen >= 7);
}

#[test]
fn schema_and_parser_both_reject_unknown_keys() {
    let doc = serde_json::json!({ "experiment": "x", "grid": { "stepz": 10 } });
    assert!(!jsonschema::validator_for(&schema()).unwrap().is_valid(&doc));
    assert!(ExperimentConfig::from_json(&doc.to_string()).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let (code, _, err) = cli(&["osgood", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("stepz"), "{err}");
}

#[test]
fn metric_output_is_the_library_value() {
    let mu: DiscreteMeasure = serde_json::from_value(read_json(Path::new(&fixture("mu.json")))).unwrap();
    let sigma: DiscreteMeasure = serde_json::from_value(read_json(Path::new(&fixture("sigma.json")))).unwrap();
    let cases: [(&[&str], MetricKind); 3] = [
        (&["--kind", "Wp", "--p", "2"], MetricKind::Wp { p: 2.0 }),
        (&["--kind", "Tp", "--p", "3"], MetricKind::BigTp { p: 3.0 }),
        (&["--kind", "wW", "--weight", "1+x^2"], MetricKind::Ww { weight: fpk_lab::expr::parse("1+x^2").unwrap() }),
    ];
    for (flags, kind) in cases {
        let mut args = vec!["metric"];
        args.extend_from_slice(flags);
        let (m, s) = (fixture("mu.json"), fixture("sigma.json"));
        args.extend([m.as_str(), s.as_str()]);
        let (code, out, _) = cli(&args);
        assert_eq!(code, EXIT_PASS);
        let printed: Value = serde_json::from_str(&out).unwrap();
        let expected = metric_report(&mu, &sigma, &kind).unwrap();
        assert_eq!(printed["value"].as_f64().unwrap().to_bits(), expected["value"].as_f64().unwrap().to_bits());
        assert_eq!(printed["kind"], expected["kind"]);
    }
}

#[test]
fn exit_codes() {
    let (m, s) = (fixture("mu.json"), fixture("sigma.json"));
    assert_eq!(cli(&["metric", "--kind", "Wp", &m, &s]).0, EXIT_PASS);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["metric", "--kind", "Wp", &m, "/nonexistent/sigma.json"]).0, EXIT_USAGE);
    assert_eq!(cli(&["metric", "--kind", "wW", "--weight", "1+", &m, &s]).0, EXIT_USAGE);
    assert_eq!(cli(&["metric", "--kind", "Wp", "--p", "0.5", &m, &s]).0, EXIT_NUMERIC);
    assert_eq!(cli(&["--help"]).0, EXIT_PASS);
}

#[test]
fn alpha_example_writes_both_branches_only_when_convergent() {
    let dir = tempfile::tempdir().unwrap();
    let half = dir.path().join("half");
    let (code, out, _) = cli(&["reproduce", "ex-6-alpha", "--alpha", "0.5", "--output-dir", half.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{out}");
    let report = read_json(&half.join("report.json"));
    assert_eq!(report["classification"], "convergent");
    assert!(half.join("branch_stationary.csv").exists() && half.join("branch_moving.csv").exists());

    let steep = dir.path().join("steep");
    let (code, out, _) = cli(&["reproduce", "ex-6-alpha", "--alpha", "1.5", "--output-dir", steep.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{out}");
    assert_eq!(read_json(&steep.join("report.json"))["classification"], "divergent");
    assert!(steep.join("branch_stationary.csv").exists() && !steep.join("branch_moving.csv").exists());
}

#[test]
fn config_driven_commands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs/alpha_half.json").display().to_string();
    let out_dir = dir.path().display().to_string();
    let (code, out, err) = cli(&["osgood", "--config", &cfg, "--output-dir", &out_dir]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(out.contains("Convergent"));
    assert!(dir.path().join("f_curve.csv").exists());
    let header = std::fs::read_to_string(dir.path().join("f_curve.csv")).unwrap();
    assert!(header.starts_with("beta,f\n"));
}

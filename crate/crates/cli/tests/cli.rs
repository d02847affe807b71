use std::path::Path;
use std::process::Command;

use selfnorm_cli::record::write_plot_data;
use selfnorm_cli::{
    load_report, parse_spec, render, run_experiment, CliError, ExperimentSpec, Format, Mode, Overrides, Report,
    RunOptions, Theorem,
};

fn parse(text: &str) -> Result<ExperimentSpec, CliError> {
    parse_spec(text, Path::new("inline.json"), Overrides::default())
}

fn issues(text: &str) -> Vec<String> {
    match parse(text) {
        Err(CliError::Invalid(issues)) => issues.iter().map(|i| i.to_string()).collect(),
        other => panic!("expected validation failure, got {other:?}"),
    }
}

const MINIMAL: &str = r#"{"id":"m","theorem":"cor22_peeling","model":{"family":"rademacher"},"n":10,
    "grids":{"x":[1],"M":[2]},"b_quantile":0.1}"#;

#[test]
fn minimal_spec_gets_documented_defaults() {
    let spec = parse(MINIMAL).unwrap();
    assert_eq!(spec.gamma, 0.99);
    assert_eq!(spec.n_rep, 100_000);
    assert_eq!(spec.mode, Mode::Mc);
    assert_eq!(spec.master_seed, Some(1));
    assert_eq!(spec.theorem.name(), "cor22_peeling");
}

#[test]
fn optional_grids_are_filled() {
    let spec = parse(
        r#"{"id":"e","theorem":"thm21_expectation","model":{"family":"rademacher"},"n":5,"grids":{"x":[0.5]}}"#,
    )
    .unwrap();
    assert_eq!(spec.theorem, Theorem::Thm21Expectation);
    assert_eq!(spec.grids.y, vec![0.0]);
    assert_eq!(spec.grids.p_max, vec![51.0]);
}

#[test]
fn beta_outside_interval_is_rejected() {
    let found = issues(
        r#"{"id":"b","theorem":"thm24_peeling","model":{"family":"rademacher"},"n":10,
            "grids":{"x":[1],"beta":[2.5],"M":[2],"b":[1]}}"#,
    );
    assert!(found.iter().any(|i| i.contains("grids.beta[0]") && i.contains("(1, 2)")), "{found:?}");
}

#[test]
fn exact_mode_caps_path_length() {
    let found = issues(
        r#"{"id":"x","theorem":"cor22_peeling","model":{"family":"rademacher"},"n":25,
            "grids":{"x":[1],"M":[2],"b":[1]},"mode":"exact_oracle"}"#,
    );
    assert!(found.iter().any(|i| i.starts_with("mode") && i.contains("n <= 20")), "{found:?}");
}

#[test]
fn empty_grid_is_rejected() {
    let found = issues(
        r#"{"id":"g","theorem":"cor22_peeling","model":{"family":"rademacher"},"n":10,
            "grids":{"x":[],"M":[2]},"b_quantile":0.1}"#,
    );
    assert!(found.iter().any(|i| i.starts_with("grids.x")), "{found:?}");
}

#[test]
fn every_problem_is_listed() {
    let found = issues(
        r#"{"id":"","theorem":"thm33_regression","model":{"family":"gaussian","sd":1},"n":0,
            "grids":{"x":[-1],"M":[0.5],"z":[1]},"gamma":1.5}"#,
    );
    for field in ["id", "n", "gamma", "grids.x[0]", "grids.M[0]", "grids.z", "grids.b", "model", "regression"] {
        assert!(found.iter().any(|i| i.starts_with(field)), "missing {field}: {found:?}");
    }
}

#[test]
fn parse_errors_carry_position() {
    match parse("{\n  \"id\": 3\n}") {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn calculator_kinds_are_not_runnable() {
    let found = issues(r#"{"id":"p","theorem":"dlp_pang","model":{"family":"rademacher"},"n":5,"grids":{"x":[1]}}"#);
    assert!(found[0].contains("calculator"), "{found:?}");
}

#[test]
fn seed_precedence() {
    let with = |cli, env| {
        parse_spec(MINIMAL, Path::new("s"), Overrides { seed: cli, reps: None, env_seed: env }).unwrap().seed()
    };
    assert_eq!(with(None, None), 1);
    assert_eq!(with(None, Some(7)), 7);
    assert_eq!(with(Some(3), Some(7)), 3);
    let pinned = MINIMAL.replace(r#""n":10"#, r#""n":10,"master_seed":9"#);
    let s = parse_spec(&pinned, Path::new("s"), Overrides { seed: None, reps: None, env_seed: Some(7) }).unwrap();
    assert_eq!(s.seed(), 9);
}

fn small_report() -> Report {
    let spec = parse(
        r#"{"id":"d","theorem":"dlp_point","model":{"family":"rademacher"},"n":8,
            "grids":{"x":[0.25],"y":[4]},"n_rep":2000,"mode":"both"}"#,
    )
    .unwrap();
    let records = run_experiment(&spec, RunOptions::default()).unwrap();
    Report { spec, records }
}

#[test]
fn one_record_gives_two_line_csv() {
    let report = small_report();
    assert_eq!(report.records.len(), 1);
    let csv = String::from_utf8(render(&report, Format::Csv).unwrap()).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "experiment_id,theorem,x,y,z,b,M,beta,bound,p_hat,ci_lo,ci_hi,exact,status,seed,wall_ms"
    );
    // 17 significant digits
    assert!(lines[1].contains("2.5000000000000000e-1"), "{}", lines[1]);
}

#[test]
fn json_report_round_trips() {
    let report = small_report();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    std::fs::write(&path, render(&report, Format::Json).unwrap()).unwrap();
    assert_eq!(load_report(&path).unwrap(), report);
}

#[test]
fn empty_report_is_refused() {
    let mut report = small_report();
    report.records.clear();
    assert!(render(&report, Format::Json).is_err());
}

#[test]
fn plot_data_has_one_row_per_record() {
    let report = small_report();
    let mut buf = Vec::new();
    write_plot_data(&report.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("theorem,x,p_hat,ci_hi,bound"));
    assert_eq!(text.lines().count(), 1 + report.records.len());
}

#[test]
fn repeated_runs_are_identical() {
    let a = render(&small_report(), Format::Json).unwrap();
    let b = render(&small_report(), Format::Json).unwrap();
    assert_eq!(a, b);
}

fn selfnorm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_selfnorm"))
        .args(args)
        .env_remove("SELFNORM_SEED")
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"id":"g","theorem":"dlp_point","model":{"family":"rademacher"},"n":6,"grids":{"x":[0.5],"y":[3]},"mode":"exact_oracle"}"#,
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let res = selfnorm(&[
        "verify",
        "--spec",
        good.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
        "--emit-plot-data",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(dir.path().join("out.csv.plot.csv").exists());

    // the b <= z orientation of the point bound fails for moderate z: the
    // event keeps its mass while the bound shrinks
    let thm21 = dir.path().join("t21.json");
    std::fs::write(
        &thm21,
        r#"{"id":"t","theorem":"thm21_point","model":{"family":"rademacher"},"n":20,
            "grids":{"x":[0.1],"z":[500]},"mode":"exact_oracle"}"#,
    )
    .unwrap();
    let res = selfnorm(&["verify", "--spec", thm21.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(selfnorm(&["verify", "--spec", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(selfnorm(&["bounds", "eval", "nope"]).status.code(), Some(2));
    let eval = selfnorm(&["bounds", "eval", "dlp_point", "x=2", "y=1"]);
    assert_eq!(eval.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn oracle_subcommand_forces_exact_mode() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.json");
    std::fs::write(
        &spec,
        r#"{"id":"o","theorem":"supermartingale_u","model":{"family":"rademacher"},"n":6,"grids":{"lambda":[0.5]}}"#,
    )
    .unwrap();
    let res = selfnorm(&["oracle", "--spec", spec.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["spec"]["mode"], "exact_oracle");
    assert!(v["records"][0]["exact"].as_f64().unwrap() <= 1.0 + 1e-12);
    assert!(v["records"][0].get("p_hat").is_none());
}

#[test]
fn bundled_specs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        selfnorm_cli::load_spec(&path, Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}

use std::process::{Command, Output};

fn simpson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpson"))
        .args(args)
        .output()
        .expect("run simpson binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn small_sample_needs_opt_in() {
    let o = simpson(&["simulate", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-small"));

    let o = simpson(&["simulate", "--n", "100", "--allow-small", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 37);
}

#[test]
fn csv_has_header_and_36_rows() {
    let o = simpson(&["simulate", "--n", "2000", "--allow-small", "--format", "csv", "--seed", "3"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("condition,reversal,family,p_hat,se,n"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
}

#[test]
fn json_output_parses() {
    let o = simpson(&["simulate", "--n", "2000", "--allow-small", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 36);
    assert_eq!(v["accepted"], 2000);
}

#[test]
fn degenerate_tables_are_rejected() {
    for table in ["1,1,1,1", "91,501,1784,16533", "0,91,16533,1784", "1,2,3"] {
        let o = simpson(&["simulate-conditional", "--table", table]);
        assert_eq!(o.status.code(), Some(2), "{table}: {}", stderr(&o));
        let o = simpson(&["analyze", "--table", table, "--or-wy", "1.4"]);
        assert_eq!(o.status.code(), Some(2), "{table}");
    }
    let o = simpson(&["analyze", "--table", "91,501,1784,16533", "--or-wy", "1.4"]);
    assert!(stderr(&o).contains("OR_XY"));
}

#[test]
fn analyze_requires_a_bound_above_one() {
    let o = simpson(&["analyze", "--table", "501,91,16533,1784"]);
    assert_eq!(o.status.code(), Some(2));
    for bound in ["1", "0.5", "inf"] {
        let o = simpson(&["analyze", "--table", "501,91,16533,1784", "--or-wy", bound]);
        assert_eq!(o.status.code(), Some(2), "{bound}");
    }
}

#[test]
fn analyze_reports_threshold_and_unattainable_bound() {
    let o = simpson(&["analyze", "--table", "501,91,16533,1784", "--or-wy", "1.4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("r_XY  = 0.0328"), "{text}");
    assert!(text.contains("OR_XY = 1.6833"), "{text}");
    assert!(text.contains("RR_XY = 1.6501"), "{text}");
    assert!(text.contains("required OR_WX ≈ 5.2181"), "{text}");

    let o = simpson(&["analyze", "--table", "501,91,16533,1784", "--or-wy", "1.0001"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("unattainable"));

    let o = simpson(&["analyze", "--table", "501,91,16533,1784", "--or-wy", "1.0001", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["threshold"]["required_or_wx"].is_null());
}

#[test]
fn analyze_can_embed_simulation() {
    let o = simpson(&[
        "analyze", "--table", "501,91,16533,1784", "--or-wy", "1.4", "--simulate", "--n", "3000",
        "--allow-small", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["simulation"]["accepted"], 3000);
}

#[test]
fn evaluate_kidney_table() {
    let o = simpson(&["evaluate", "--table8", "71,192,6,81,25,55,36,234", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let close = |a: &serde_json::Value, b: f64| (a.as_f64().unwrap() - b).abs() < 1e-9;
    assert!(close(&v["measures"]["r_xy"], 0.0574529432));
    assert!(close(&v["measures"]["or_xw"], 10.2025862069));
    assert!(close(&v["least_squares"]["beta_x_given_w"], -0.053835570243));
    assert!(close(&v["least_squares_oracle"]["beta_0"], 0.732673019299));
    assert_eq!(v["reversals"]["strong_simpson"], true);
    assert_eq!(v["reversals"]["ard_reversal"], true);

    let o = simpson(&["evaluate", "--table8", "71,192,6,81,25,55,36,234", "--format", "csv"]);
    assert!(stdout(&o).lines().any(|l| l == "strong_simpson,true"));
}

#[test]
fn evaluate_independent_table() {
    let o = simpson(&["evaluate", "--table8", "1,1,1,1,1,1,1,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("strong Simpson                false"), "{text}");
    assert!(text.contains("least squares                 false"), "{text}");
}

#[test]
fn evaluate_rejects_malformed_tables() {
    for table in ["1,2,3", "0,0,0,0,0,0,0,0", "a,1,1,1,1,1,1,1"] {
        let o = simpson(&["evaluate", "--table8", table]);
        assert_eq!(o.status.code(), Some(2), "{table}");
    }
}

#[test]
fn verify_reports_no_counterexamples() {
    let o = simpson(&["verify", "--n", "5000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("0 counterexamples"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_simpson"))
        .args(["verify", "--n", "100"])
        .env("SIMPSON_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("simpson-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    let args = ["simulate", "--n", "1000", "--allow-small", "--format", "csv"];
    let direct = simpson(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let o = simpson(&with_out);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

use realqt::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["realqt"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn ideal_report() {
    let (code, out, _) = call(&["ideal"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let w = v["result"]["w"].as_f64().unwrap();
    assert!((w - 0.897056274847714).abs() < 1e-12);
    assert_eq!(v["version"], realqt::VERSION);
    for t in v["result"]["t_values"].as_array().unwrap() {
        assert!((t.as_f64().unwrap() - 3.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn ideal_csv_has_72_rows() {
    let (code, out, _) = call(&["--format", "csv", "ideal"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,z,y,s");
    assert_eq!(lines.len(), 73);
}

#[test]
fn emulate_values() {
    let (_, out, _) = call(&["emulate", "--ve", "0.9909", "--vi", "0.9844", "--model", "depolarizing", "--both"]);
    let v = json(&out);
    assert!((v["result"]["w"].as_f64().unwrap() - 0.84033).abs() < 1e-4);
    assert!(v["result"]["w_by_model"]["subspace"].is_number());
    let (_, out, _) = call(&["emulate"]);
    assert!((json(&out)["result"]["w"].as_f64().unwrap() - 0.840316).abs() < 1e-6);
    let (_, out, _) = call(&["emulate", "--ve", "1", "--vi", "1"]);
    assert!((json(&out)["result"]["w"].as_f64().unwrap() - 0.897056).abs() < 1e-6);
    let (_, out, _) = call(&["emulate", "--ve", "0", "--vi", "1"]);
    assert!((json(&out)["result"]["w"].as_f64().unwrap() + 0.8).abs() < 1e-12);
    let (code, _, err) = call(&["emulate", "--ve", "1.5"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn simulate_is_byte_stable_and_validates() {
    let a = call(&["--seed", "3", "simulate", "--cycles", "300", "--resamples", "20"]);
    let b = call(&["--seed", "3", "simulate", "--cycles", "300", "--resamples", "20"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let (code, _, err) = call(&["simulate", "--cycles", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("num_cycles"));
}

#[test]
fn simulate_reads_config_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "seed": 4, "simulate": {"num_cycles": 200, "bootstrap_resamples": 10}}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = call(&["--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "simulate"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v = json(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(v["config"]["num_cycles"], 200);
    assert_eq!(v["config"]["seed"], 4);

    std::fs::write(&cfg, r#"{"schema_version": 99}"#).unwrap();
    let (code, _, _) = call(&["--config", cfg.to_str().unwrap(), "ideal"]);
    assert_eq!(code, 2);
}

#[test]
fn bound_modes() {
    let (code, _, err) = call(&["bound", "--level", "3", "--mode", "solve"]);
    assert_eq!(code, 2);
    assert!(err.contains("unsupported"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.dat-s");
    let (code, out, _) = call(&["--output", path.to_str().unwrap(), "bound", "--level", "1", "--mode", "export"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["result"]["block_sizes"].as_array().unwrap().len(), 8);
    let parsed = realqt::bound::sdpa::read_sdpa(&path).unwrap();
    assert_eq!(parsed.block_struct[..8], [28; 8]);

    let (code, out, _) = call(&["bound", "--level", "1", "--mode", "check"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let first = &v["result"][0];
    assert_eq!(first["strategy"], "ideal-complex");
    for r in v["result"].as_array().unwrap().iter().skip(1) {
        assert!(r["violated"].as_array().unwrap().is_empty(), "{r}");
    }

    let (code, out, _) = call(&["bound", "--level", "1", "--mode", "solve"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["result"]["dual"].as_f64().unwrap() >= 0.7486);
    assert_eq!(v["result"]["status"], "optimal");
}

#[test]
fn seesaw_and_waveplates() {
    let (code, out, _) = call(&["--seed", "2", "seesaw", "--dims", "1,1,1,1", "--restarts", "8"]);
    assert_eq!(code, 0);
    assert!(json(&out)["result"]["value"].as_f64().unwrap() <= 0.7486);
    let (code, _, _) = call(&["seesaw", "--dims", "1,1"]);
    assert_eq!(code, 2);
    let (code, out, _) = call(&["waveplates-verify"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["result"]["rows"].as_array().unwrap().len(), 13);
}

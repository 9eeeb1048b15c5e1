use std::process::Command;

fn sqc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqc"))
}

#[test]
fn demo_eq1_prints_four_states() {
    let out = sqc().arg("demo-eq1").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let table = text.split('{').next().unwrap();
    assert_eq!(table.matches("0.500").count(), 4, "{text}");
    assert!(text.contains("\"cosets_disjoint\": true"));
}

#[test]
fn transfer_f2f_reports_all_successes() {
    let out = sqc()
        .args(["transfer", "--channel", "f2f", "--lambda", "4", "--trials", "5", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["successes"], 5);
    assert_eq!(report["conservation_ok"], true);
}

#[test]
fn attack_double_spend_blocked() {
    let out = sqc()
        .args(["attack", "--type", "double-spend", "--lambda", "4", "--trials", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["double_spends_blocked"], 5);
}

#[test]
fn lightning_reports_collision_stats() {
    let out = sqc()
        .args(["lightning", "--lambda", "2", "--trials", "512"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["collisions"].as_u64().unwrap() > 0);
}

#[test]
fn identical_config_and_seed_give_identical_trace_files() {
    let dir = std::env::temp_dir();
    let p1 = dir.join("sqc-cli-trace-1.jsonl");
    let p2 = dir.join("sqc-cli-trace-2.jsonl");
    for p in [&p1, &p2] {
        let out = sqc()
            .args(["mint", "--lambda", "4", "--trials", "3", "--seed", "9"])
            .arg("--trace-out")
            .arg(p)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let b1 = std::fs::read(&p1).unwrap();
    let b2 = std::fs::read(&p2).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2);
}

#[test]
fn odd_lambda_is_a_config_error() {
    let out = sqc().args(["mint", "--lambda", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_drives_scenario_and_flags_override() {
    let dir = std::env::temp_dir();
    let cfg_path = dir.join("sqc-cli-config.json");
    std::fs::write(
        &cfg_path,
        r#"{"scenario":"face_to_face","lambda":4,"trials":2,"seed":1}"#,
    )
    .unwrap();
    let out = sqc()
        .args(["transfer", "--channel", "f2f", "--trials", "4"])
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["trials"], 4, "flag overrides config file");
    assert_eq!(report["lambda"], 4);
}

#[test]
fn malformed_config_file_is_a_config_error() {
    let dir = std::env::temp_dir();
    let cfg_path = dir.join("sqc-cli-bad-config.json");
    std::fs::write(&cfg_path, r#"{"scenario":"mint","nonsense":true}"#).unwrap();
    let out = sqc()
        .arg("mint")
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

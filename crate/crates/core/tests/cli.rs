use std::fs;
use std::process::Command;

fn wnc_sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wnc-sim"))
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = wnc_sim().args(["verify", "--instances", "100", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("golden: offline optimum, C = 4"));
    assert!(!stdout.contains("FAILED"));
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("check,instances,failures,"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    fs::write(&bad_json, "{\"kind\": \"single-relay-sweep\", \"unknown\": 3}").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["sweep".into(), "--c".into(), "1".into()],
        vec!["sweep".into(), "--p2".into(), "1.5".into()],
        vec!["sweep".into(), "--kind".into(), "nonsense".into()],
        vec!["sweep".into(), "--kind".into(), "line-network-sweep".into(), "--relays".into(), "1".into()],
        vec!["sweep".into(), "--config".into(), bad_json.display().to_string()],
        vec!["sweep".into(), "--config".into(), dir.path().join("missing.json").display().to_string()],
        vec!["sweep".into(), "--horizon".into(), "ten".into()],
    ];
    for args in cases {
        let out = wnc_sim().args(&args).arg("--out").arg(dir.path().join("o")).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.json");
    fs::write(&conf, r#"{"kind": "ski-rental-sweep", "costs": [10], "draws": 20, "seed": 3}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = wnc_sim().args(["sweep", "--config"]).arg(&conf).args(["--c", "2,5/2", "--out"]).arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("ski_rental.csv")).unwrap();
    // T = 1..6 for C = 2 and T = 1..9 for C = 5/2.
    assert_eq!(csv.lines().count(), 1 + 6 + 9);
    assert!(csv.lines().nth(1).unwrap().starts_with("2,1,"));
    let resolved = fs::read_to_string(out_dir.join("config.json")).unwrap();
    assert!(resolved.contains("\"5/2\""));
    assert!(out_dir.join("ski_rental.dat").exists());
    assert!(out_dir.join("ski_rental.svg").exists());
}

#[test]
fn line_sweep_has_a_relays_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = wnc_sim()
        .args(["sweep", "--kind", "line-network-sweep", "--c", "3", "--p2", "0.4", "--relays", "2,4", "--horizon", "300", "--reps", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("line_ratios.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("relays,p2,C,"));
    let relays: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(relays, ["2", "2", "4", "4"]);
}

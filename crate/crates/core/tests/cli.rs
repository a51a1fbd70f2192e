use std::process::{Command, Output};

use nimcore::harness::{verify_suite_with, Oracles, Scale};
use nimcore::{Nimber, Position};

fn nimcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nimcore")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn play_prints_a_transcript() {
    let o = nimcore(&[
        "play",
        "--rules",
        "nim",
        "--start",
        "3,5,7",
        "--first",
        "oracle",
        "--second",
        "multiframe",
        "--seed",
        "7",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("start 3,5,7 (nimber 1)"));
    assert!(text.trim_end().ends_with("winner: oracle (first)"), "{text}");
}

#[test]
fn scripted_moves_and_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("match.json");
    let o = nimcore(&[
        "play",
        "--start",
        "1,2",
        "--first",
        "script",
        "--second",
        "oracle",
        "--moves",
        "1:1,1:0",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("winner: script (first)"));
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(record["winner"], 0);
    assert_eq!(record["moves"].as_array().unwrap().len(), 3);
}

#[test]
fn built_circuit_verifies_against_its_reference() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diff.ac0");
    let p = path.to_str().unwrap();
    assert!(nimcore(&["build-circuit", "nimber-diff", "--n", "3", "--l", "2", "--k", "2", "-o", p]).status.success());
    let o = nimcore(&["verify-circuit", p, "--against", "nimber-diff", "--n", "3", "--l", "2", "--k", "2"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS 4096 all pairs"));
    // the same file does not implement the k = 1 contract
    let o = nimcore(&["verify-circuit", p, "--against", "nimber-diff", "--n", "3", "--l", "2", "--k", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nimcore(&["verify-circuit", p, "--against", "nimber-diff", "--n", "4", "--l", "2"]);
    assert!(stdout(&o).starts_with("FAIL shape"));
}

#[test]
fn compile_model_writes_a_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = dir.path().join("model.ac0");
    std::fs::write(
        &model,
        r#"{"kind":"nn","L":1,"widths":[4,1],"q0":2,"P":2,"weights":[[[1,1,1,1]]],"thresholds":[[2]]}"#,
    )
    .unwrap();
    let o = nimcore(&["compile-model", model.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = nimcore::circuit::Circuit::from_text(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(c.evaluate(&[true, true, false, false]).unwrap(), vec![true]);
    assert_eq!(c.evaluate(&[true, false, false, false]).unwrap(), vec![false]);
}

#[test]
fn tournament_is_repeatable_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"heap_counts":[3,5],"max_heap":9,"agents":["multiframe","singleframe:heuristic"],"opponent":"oracle","games_per_cell":5,"seed":11,"output_csv":{:?}}}"#,
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let a = nimcore(&["tournament", "--config", cfg.to_str().unwrap()]);
    let b = nimcore(&["tournament", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read_to_string(csv).unwrap(), stdout(&a));
    assert_eq!(stdout(&a).lines().count(), 5);
}

#[test]
fn bad_input_exits_with_an_error() {
    let o = nimcore(&["play", "--start", "0,0", "--first", "oracle", "--second", "random"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nimcore(&["play", "--start", "3", "--first", "wizard", "--second", "random"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_at_desk_scale() {
    let o = nimcore(&["verify", "--scale", "desk"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

fn off_by_one(p: &Position) -> Nimber {
    Nimber(p.heaps().iter().fold(0, |a, &h| a ^ h) ^ u32::from(p.len() == 3))
}

fn or_sum(p: &Position) -> Nimber {
    Nimber(p.heaps().iter().fold(0, |a, &h| a | h))
}

#[test]
fn tampered_oracles_fail_the_suite() {
    for tampered in [off_by_one as fn(&Position) -> Nimber, or_sum] {
        let report = verify_suite_with(Scale::Desk, &Oracles { nim_sum: tampered });
        assert!(!report.passed());
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"nimber equals nim sum"), "{failed:?}");
    }
}

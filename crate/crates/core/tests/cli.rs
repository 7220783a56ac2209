mod common;

use std::path::Path;
use std::process::{Command, Output};

use evomelody::session::Session;

use common::*;

fn evomelody(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evomelody")).args(args).output().unwrap()
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(report: &str) -> Vec<(u64, f64, f64)> {
    report
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn evolve_synthetic_reports_and_improves() {
    let args = words("evolve-synthetic --oracle sphere --dims 12 --pop 30 --gens 300 --F 0.5 --Cr 0.9 --seed 11");
    let a = evomelody(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let report = stdout(&a);
    let rows = data_rows(&report);
    assert_eq!(rows.len(), 301);
    assert!(rows.iter().enumerate().all(|(g, r)| r.0 == g as u64));
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(rows[300].1 < rows[0].1);
    assert!(report.starts_with("# oracle=sphere dims=12 pop=30 gens=300"));
    let genome = report.lines().find(|l| l.starts_with("final_genome")).unwrap();
    assert_eq!(genome.split('\t').count(), 13);

    assert_eq!(evomelody(&args).stdout, a.stdout);
}

#[test]
fn zero_generations_report_only_generation_zero() {
    let o = evomelody(&["evolve-synthetic", "--gens", "0", "--seed", "3"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].0, 0);
}

#[test]
fn hidden_target_writes_report_and_melody() {
    let dir = tempfile::tempdir().unwrap();
    let (out, mid) = (dir.path().join("report.tsv"), dir.path().join("best.mid"));
    let mut args = words("evolve-synthetic --oracle hidden-target --dims 12 --pop 12 --gens 40");
    args.extend(["--out", out.to_str().unwrap(), "--midi", mid.to_str().unwrap()]);
    let o = evomelody(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert_eq!(data_rows(&std::fs::read_to_string(&out).unwrap()).len(), 41);
    let parsed = parse_smf(&std::fs::read(&mid).unwrap()).unwrap();
    assert_eq!(parsed.events.len(), 8);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["evolve-synthetic", "--bogus"][..],
        &["evolve-synthetic", "--pop", "3"],
        &["evolve-synthetic", "--F", "0"],
        &["evolve-synthetic", "--oracle", "hidden-target", "--dims", "10"],
        &["no-such-command"],
    ] {
        let o = evomelody(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(evomelody(&["--help"]).status.code(), Some(0));
}

fn saved_session(dir: &Path) -> (Session, std::path::PathBuf) {
    let mut s = Session::create_with_id(scripted_config(31), "cli".into()).unwrap();
    for _ in 0..3 {
        score_pending(&mut s);
        s.advance().unwrap();
    }
    let path = dir.join("cli.json");
    s.save_to_path(&path).unwrap();
    (s, path)
}

#[test]
fn replay_verifies_and_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = saved_session(dir.path());
    let ok = evomelody(&["replay", "--session", path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).starts_with("replay ok"));

    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let entry = doc["score_log"].as_array_mut().unwrap().iter_mut().find(|e| e["generation"] == 1).unwrap();
    let old = entry["score"].as_f64().unwrap();
    entry["score"] = serde_json::json!(if old < 5.0 { 9.5 } else { 0.5 });
    let edited = dir.path().join("edited.json");
    std::fs::write(&edited, serde_json::to_vec_pretty(&doc).unwrap()).unwrap();

    let bad = evomelody(&["replay", "--session", edited.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("mismatch"));
}

#[test]
fn export_midi_writes_candidate_and_names_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let (s, path) = saved_session(dir.path());
    let out = dir.path().join("c.mid");
    let id = s.member_ids[0].to_string();
    let session = path.to_str().unwrap();
    let o = evomelody(&["export-midi", "--session", session, "--candidate", &id, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), s.midi(&s.member_ids[0]).unwrap());

    let o = evomelody(&["export-midi", "--session", session, "--candidate", "g9-s42", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("g9-s42"));
}

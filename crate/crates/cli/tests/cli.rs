use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn spectra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectra")).args(args).output().expect("run spectra")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json")
}

const CIRCLE12: &str = "circle:n=12,L=1";

#[test]
fn hcs_golden() {
    let v = stdout_json(&spectra(&["spectrum", "--kind", "hcs", "--generate", CIRCLE12]));
    assert_eq!(v["schema"], "spectra-report/1");
    assert_eq!(v["values"], json!([["1/3", 1]]));
    assert_eq!(v["completeness"], "exact");
    let cs = stdout_json(&spectra(&["spectrum", "--kind", "cs", "--generate", CIRCLE12]));
    assert_eq!(cs["values"], json!([["1/2", 1]]));
}

#[test]
fn asymmetric_matrix_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "0,1,1\n1,0,1\n1,2,0\n").unwrap();
    let out = spectra(&["validate", "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv") && err.contains("d(1,2)"), "{err}");
}

#[test]
fn unparsable_cell_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "0,1\n1.5,0\n").unwrap();
    let out = spectra(&["validate", "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2, column 1"), "{err}");
}

#[test]
fn bound_is_three_to_the_eightieth() {
    let v = stdout_json(&spectra(&["bound", "--generate", CIRCLE12, "--eps", "1"]));
    let expected = num_bigint::BigUint::from(3u32).pow(80).to_string();
    assert_eq!(v["log2_bound"], json!(expected));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = spectra(&["spectrum", "--kind", "es", "--generate", "wedge:L=1;3/2,nodes=8;12", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(p).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    assert_eq!(a.last(), Some(&b'\n'));
    let x = spectra(&["selftest", "--seed", "9", "--samples", "20"]);
    let y = spectra(&["selftest", "--seed", "9", "--samples", "20"]);
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
}

fn check(cert: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["nullity", "--generate", CIRCLE12, "--check-certificate", cert.to_str().unwrap()];
    args.extend_from_slice(extra);
    spectra(&args)
}

#[test]
fn certificates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let certs = dir.path().join("certs");
    let out = spectra(&["spectrum", "--kind", "hcs", "--generate", CIRCLE12, "--certificates", certs.to_str().unwrap()]);
    assert!(out.status.success());
    let files: Vec<_> = fs::read_dir(&certs).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in &files {
        assert_eq!(stdout_json(&check(f, &[]))["valid"], true);
    }

    let whole: String = (0..12).map(|i| format!("{i},")).collect::<String>() + "0";
    let nc = dir.path().join("nc");
    let v = stdout_json(&spectra(&[
        "nullity", "--generate", CIRCLE12, "--eps", "2/5", "--loop", &whole, "--certificates", nc.to_str().unwrap(),
    ]));
    assert_eq!(v["verdict"]["verdict"]["kind"], "null");
    let bundle = nc.join("nullity.json");
    assert_eq!(stdout_json(&check(&bundle, &[]))["certificate"], "nullity");

    // a tampered contraction is rejected
    let mut b: Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    b["verdict"]["verdict"]["certificate"]["moves"].as_array_mut().unwrap().pop();
    fs::write(&bundle, serde_json::to_string(&b).unwrap()).unwrap();
    assert_eq!(check(&bundle, &[]).status.code(), Some(1));
}

#[test]
fn strict_passes_decided_results() {
    let whole: String = (0..12).map(|i| format!("{i},")).collect::<String>() + "0";
    // zero budget: the cone collapse still contracts the loop
    let out = spectra(&["nullity", "--generate", CIRCLE12, "--eps", "2/5", "--loop", &whole, "--budget", "0", "--strict"]);
    assert_eq!(stdout_json(&out)["verdict"]["verdict"]["kind"], "null");
    let ok = spectra(&["spectrum", "--kind", "hcs", "--generate", CIRCLE12, "--strict"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn family_file_drives_ecs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("family.json");
    let members = json!({"members": [
        {"metric": {"eps": "1/12"}},
        {"metric": {"eps": "1/6"}},
        {"metric": {"eps": "1/3", "strict": true}},
        {"metric": {"eps": "1/3"}},
        {"metric": {"eps": "1/2"}},
    ]});
    fs::write(&p, members.to_string()).unwrap();
    let v = stdout_json(&spectra(&["spectrum", "--kind", "ecs", "--generate", CIRCLE12, "--family", p.to_str().unwrap()]));
    assert_eq!(v["values"], json!([["1/3", 1]]));
    assert_eq!(v["completeness"], "relative_to_family");
}

#[test]
fn mls_needs_a_bound() {
    let out = spectra(&["spectrum", "--kind", "mls", "--generate", CIRCLE12]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&spectra(&["spectrum", "--kind", "mls", "--generate", CIRCLE12, "--length-bound", "2"]));
    assert_eq!(v["values"][0][0], "1");
}

use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_projlab");

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).to_string_lossy().into_owned()
}

fn projlab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("projlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn passing_suite_exits_zero() {
    let out = projlab(&["verify", "beta"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["beta"]["pass"], true);
    assert!(v["beta"]["checks"].as_array().unwrap().iter().all(|c| c["id"].is_string() && c["status"] == "pass"));
}

#[test]
fn failing_tolerance_exits_one() {
    let out = projlab(&["verify", "forms", "--diff", &data("q_z.json"), "--samples", "20", "--fd-tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["forms"]["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(projlab(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(projlab(&["verify", "beta", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(projlab(&["verify", "forms", "--diff", "/nonexistent/q.json"]).status.code(), Some(2));
}

#[test]
fn malformed_input_reports_its_line() {
    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"chart\": \"plane\",\n \"q\": {\"num\": [[1, 0]],\n \"den\": oops}}").unwrap();
    let out = projlab(&["verify", "forms", "--diff", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn seeded_reports_are_byte_identical() {
    let run = |file: &str| {
        let p = scratch(file);
        let out = projlab(&["verify", "legendrian", "--seed", "11", "--samples", "40", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn trajectory_csv_is_deterministic() {
    let run = |file: &str| {
        let p = scratch(file);
        let out = projlab(&["trajectories", "--diff", &data("q_z2m1.json"), "--angle", "0.3", "--seeds", "5", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(p).unwrap()
    };
    let a = run("a.csv");
    assert!(a.starts_with("leaf,index,x,y\n") && a.lines().count() > 10);
    assert_eq!(a, run("b.csv"));
}

#[test]
fn holonomy_of_a_translation() {
    let out = projlab(&["holonomy", "--diff", &data("q_t100.json"), "--loop", &data("translate_i.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let len = v["holonomy"]["translation_length"].as_f64().unwrap();
    assert!((len - 200f64.sqrt()).abs() < 1e-8);
}

#[test]
fn square_torus_geodesic() {
    let out = projlab(&["geodesic", "--surface", &data("square_torus.json"), "--class", "0:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["length"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ball_mesh_records_the_model() {
    let p = scratch("flat.ply");
    let out = projlab(&["surface", "--diff", &data("q_z.json"), "--grid", "annulus:4:6:12", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(p).unwrap();
    assert!(text.starts_with("ply\n") && text.contains("comment model unit ball"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn mefkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mefkit")).args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> (Value, i32) {
    let out = mefkit(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (v, out.status.code().unwrap())
}

fn verdict(report: &Value, name: &str) -> bool {
    report["verdicts"].as_array().unwrap().iter().find(|v| v["name"] == name).unwrap()["passed"].as_bool().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn betti_of_two_torus() {
    let (r, code) = run_json(&["betti", path(&fixture("complexes/torus_2_8.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["b0"], 1);
    assert_eq!(r["results"]["b1"], 2);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["command"], "betti");
}

#[test]
fn doubling_cover_fails_every_criterion_and_they_agree() {
    let (r, code) = run_json(&["check-monotone", path(&fixture("maps/doubling_c8.json"))]);
    assert_eq!(code, 1);
    for c in ["fibers_connected", "preimages_connected", "algebraic"] {
        assert!(!verdict(&r, c), "{c}");
    }
    assert!(verdict(&r, "criteria_agree"));
}

#[test]
fn arc_collapse_passes_every_criterion() {
    let (r, code) = run_json(&["check-monotone", path(&fixture("maps/arc_collapse_c8.json"))]);
    assert_eq!(code, 0);
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));
}

#[test]
fn hull_of_doubling_cover_is_the_identity() {
    let (r, code) = run_json(&["hull", path(&fixture("maps/doubling_c8.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["q"], json!([0, 1, 2, 3, 4, 5, 6, 7]));
    assert_eq!(r["results"]["hull_betti"]["b1"], 1);
}

#[test]
fn equivariant_hull_descends_the_rotation() {
    let rot: Vec<usize> = (0..8).map(|i| (i + 1) % 8).collect();
    let gens = serde_json::to_string(&[rot]).unwrap();
    let (r, code) = run_json(&["hull", path(&fixture("maps/doubling_c8.json")), "--generators", &gens]);
    assert_eq!(code, 0, "{r}");
    assert!(r["results"]["descended_generators"].is_object());
    let out = mefkit(&["hull", path(&fixture("maps/arc_collapse_c8.json")), "--generators", &gens]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_two_circles() {
    let dir = tempfile::tempdir().unwrap();
    let mut values = vec![[1.0, 0.0]; 8];
    values.extend(vec![[0.0, 2.0]; 8]);
    let file = json!({ "complex": path(&fixture("complexes/two_circles.json")), "values": values });
    let f = dir.path().join("f.json");
    std::fs::write(&f, file.to_string()).unwrap();
    let (r, code) = run_json(&["decompose", "--function", path(&f)]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["part_count"], 2);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn mef_on_fixtures() {
    let cases = [
        ("rotation_circle", "torus_1_8", 0, 1),
        ("rational_circle", "torus_1_8", 0, 1),
        ("warped_t2", "torus_2_4", 0, 1),
        ("rotation_t2", "torus_1_8", 1, 2),
    ];
    for (system, model, exit, m) in cases {
        let (r, code) = run_json(&[
            "mef",
            "--system",
            path(&fixture(&format!("systems/{system}.json"))),
            "--model",
            path(&fixture(&format!("complexes/{model}.json"))),
        ]);
        assert_eq!(code, exit, "{system}");
        assert_eq!(r["results"]["m"], m, "{system}");
    }
}

#[test]
fn rational_rotation_recovers_its_fraction() {
    let (r, _) = run_json(&[
        "mef",
        "--system",
        path(&fixture("systems/rational_circle.json")),
        "--model",
        path(&fixture("complexes/torus_1_8.json")),
    ]);
    assert_eq!(r["results"]["rotation_fractions"], json!(["3/8"]));
    assert_eq!(r["results"]["applicable"], false);
}

#[test]
fn spectrum_reads_a_mef_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = mefkit(&[
        "mef",
        "--system",
        path(&fixture("systems/rotation_circle.json")),
        "--model",
        path(&fixture("complexes/torus_1_8.json")),
    ]);
    let report = dir.path().join("mef.json");
    std::fs::write(&report, &out.stdout).unwrap();
    let (r, code) = run_json(&["spectrum", "--report", path(&report)]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["rank"], 1);
}

#[test]
fn equicontinuity_of_rotation_and_doubling() {
    let rot = fixture("systems/rotation_circle.json");
    let (r, code) = run_json(&["equicont", "--system", path(&rot), "--character", "1", "--character", "-3", "--irr"]);
    assert_eq!(code, 0);
    assert!(verdict(&r, "irreducible_parts_agree"));
    let (_, code) = run_json(&["equicont", "--system", path(&fixture("systems/doubling_circle.json")), "--character", "1"]);
    assert_eq!(code, 1);
}

#[test]
fn classify_hom_with_finite_part() {
    let (r, code) = run_json(&["classify-hom", "--matrix", "[[2,0],[0,3]]", "--finite", "Z/4->Z/2:1->1"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["finite_part"]["image_order"], 2);
    assert_eq!(r["results"]["classification"]["surjective"], true);
}

#[test]
fn selftest_list_names_every_suite() {
    let out = mefkit(&["selftest", "--list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().collect();
    assert_eq!(names.len(), 9);
    assert!(names.contains(&"determinism"));
}

#[test]
fn selftest_output_is_byte_identical() {
    let a = mefkit(&["selftest", "hull", "--seed", "7"]);
    let b = mefkit(&["selftest", "hull", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(mefkit(&["betti", "/definitely/missing.json"]).status.code(), Some(2));
    assert_eq!(mefkit(&["selftest", "nonsense"]).status.code(), Some(2));
    assert_eq!(mefkit(&["check-monotone", path(&fixture("maps/doubling_c8.json")), "--criteria", "z"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": 2, \"edges\": [[0, 5]], \"squares\": []}").unwrap();
    assert_eq!(mefkit(&["betti", path(&bad)]).status.code(), Some(2));
}

#[test]
fn text_mode_prints_verdict_lines() {
    let out = mefkit(&["--text", "check-monotone", path(&fixture("maps/arc_collapse_c8.json"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "PASS criteria_agree"));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spinform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinform")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp").expect("timestamp present");
    v
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        let out = spinform(&["run", "round_sphere", "--resolution", "17", "--report", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let strip = |p: &Path| {
        std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(without_timestamp(read_json(&a)), without_timestamp(read_json(&b)));
}

#[test]
fn flat_plane_passes_with_vanishing_residuals() {
    let out = spinform(&["run", "flat_plane", "--resolution", "9"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    for (name, e) in v["residuals"].as_object().unwrap() {
        assert!(e["max"].as_f64().unwrap() < 1e-10, "{name}");
    }
}

#[test]
fn round_sphere_at_65_has_small_isometry_residual() {
    let out = spinform(&["run", "round_sphere", "--resolution", "65", "--pipeline", "reconstruct"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["residuals"]["isometry"]["max"].as_f64().unwrap() < 1e-3);
}

#[test]
fn perturbed_sphere_fails_with_report_written() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = spinform(&["run", "perturbed_sphere", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&report);
    assert_eq!(v["pass"], false);
    assert!(v["failures"].as_array().unwrap().iter().any(|f| f == "holonomy"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("holonomy"));
}

#[test]
fn tolerance_overrides_are_applied() {
    let out = spinform(&["run", "round_sphere", "--resolution", "17", "--pipeline", "reconstruct", "--tol", "isometry=1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tolerances"]["isometry"], 1e-12);
}

#[test]
fn scenes_listing() {
    let out = spinform(&["scenes", "--json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let list = v.as_array().unwrap();
    assert!(list.len() >= 9);
    assert!(list.iter().all(|e| e["name"].is_string() && e["p"].is_u64() && e["ambient"].is_string()));
    let text = spinform(&["scenes"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("enneper"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = spinform(&["scenes", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_scene_and_low_resolution_are_errors() {
    assert_eq!(spinform(&["run", "klein_bottle"]).status.code(), Some(3));
    assert_eq!(spinform(&["run", "flat_plane", "--resolution", "5"]).status.code(), Some(3));
}

#[test]
fn mesh_export() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("s.obj");
    let out = spinform(&["run", "catenoid", "--resolution", "9", "--pipeline", "reconstruct", "--mesh", mesh.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&mesh).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 81);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 64);

    let torus = dir.path().join("t.obj");
    assert!(spinform(&["run", "flat_torus_r4", "--resolution", "9", "--pipeline", "reconstruct", "--mesh", torus.to_str().unwrap()]).status.success());
    assert_eq!(read_json(&dir.path().join("t.obj.json"))["dimension"], 4);

    let ball = dir.path().join("h.obj");
    let out = spinform(&["run", "geodesic_h2_in_h3", "--resolution", "9", "--pipeline", "reconstruct", "--poincare", "--mesh", ball.to_str().unwrap()]);
    assert!(out.status.success());
    let inside = std::fs::read_to_string(&ball).unwrap().lines().filter(|l| l.starts_with("v ")).all(|l| {
        let r2: f64 = l.split_whitespace().skip(1).map(|t| t.parse::<f64>().unwrap().powi(2)).sum();
        r2 < 1.0
    });
    assert!(inside);
}

#[test]
fn scene_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scene.json");
    std::fs::write(
        &file,
        r#"{"name":"big_sphere","p":2,"q":1,"ambient":"euclidean","domain":{"min":[1.0,0.0],"max":[2.0,1.0]},
            "resolution":17,"provider":{"builtin":"round_sphere","params":{"r":2.0}}}"#,
    )
    .unwrap();
    let out = spinform(&["run", file.to_str().unwrap(), "--pipeline", "roundtrip"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["scene"], "big_sphere");
}

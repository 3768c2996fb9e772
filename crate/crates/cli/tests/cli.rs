use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_centroflow"));
    c.env_remove("CENTROFLOW_OUT_DIR");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn static_circle_exits_0_with_zero_energy() {
    let out = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run(bin().arg("evolve").arg(scenario("static-circle.json")).arg("--out").arg(out.path()));
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(out.path().join("static-circle.csv")).unwrap();
    let e = column(&csv, "E");
    // 1 + 1000 steps / stride 10
    assert_eq!(e.len(), 101);
    // Roundoff of the chopped spectrum, not bitwise zero.
    assert!(e.iter().all(|&v| v.abs() <= 1e-24), "{e:?}");
    let svg = std::fs::read_to_string(out.path().join("svg/static-circle-final.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 1);
    assert!(svg.contains(r#"class="origin""#));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("static-circle.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "static-circle");
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));
}

#[test]
fn headline_run_exits_0_with_expected_rows() {
    let out = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(bin().arg("evolve").arg(scenario("perturbed-m3.json")).env("CENTROFLOW_OUT_DIR", out.path()));
    assert_eq!(code, 0, "{stdout}{stderr}");
    let csv = std::fs::read_to_string(out.path().join("perturbed-m3.csv")).unwrap();
    // 80000 steps, stride 1
    assert_eq!(csv.lines().count(), 1 + 1 + 80000);
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("too-big.json");
    std::fs::write(
        &cfg,
        r#"{"name": "too-big", "curve": {"preset": {"kind": "perturbed_ellipse", "a": 1, "b": 1, "amplitude": 0.05, "mode": 3}},
            "N": 256, "dt": 0.1, "t_end": 1, "flow": "curvature"}"#,
    )
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let (code, _, _) = run(bin().arg("evolve").arg(&cfg).arg("--out").arg(out.path()));
    assert_eq!(code, 3);
    let report = std::fs::read_to_string(out.path().join("too-big.json")).unwrap();
    assert!(report.contains("StabilityViolation"), "{report}");
}

#[test]
fn parse_error_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"name\": \"bad\",\n  \"N\": \"many\"\n}").unwrap();
    let (code, _, stderr) = run(bin().arg("evolve").arg(&cfg));
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");

    std::fs::write(
        &cfg,
        r#"{"name": "bad", "curve": {"preset": {"kind": "origin_ellipse", "a": 1, "b": 1}}, "N": 15, "dt": 1e-3, "t_end": 1}"#,
    )
    .unwrap();
    let (code, _, stderr) = run(bin().arg("verify").arg(&cfg));
    assert_eq!(code, 1);
    assert!(stderr.contains("field `N`"), "{stderr}");
}

#[test]
fn family_passes_for_listed_axes() {
    for (a0, b0) in ["1", "2", "0.5"].iter().map(|a| (*a, "1")) {
        let (code, stdout, _) = run(bin().args(["family", "--a0", a0, "--b0", b0, "--times", "0,-1,-2,-4"]));
        assert_eq!(code, 0, "{stdout}");
        assert_eq!(stdout.lines().count(), 1 + 4 + 1);
        assert!(stdout.lines().last().unwrap().starts_with("PASS backward_limit_family"));
    }
}

#[test]
fn invariants_of_presets() {
    let dir = tempfile::tempdir().unwrap();
    let ellipse = dir.path().join("e.json");
    let (code, _, _) = run(bin().args(["preset", r#"{"kind":"origin_ellipse","a":2,"b":0.5}"#, "-o"]).arg(&ellipse));
    assert_eq!(code, 0);
    let (code, stdout, _) = run(bin().arg("invariants").arg(&ellipse));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("equality case"));

    let shifted = dir.path().join("s.json");
    run(bin().args(["preset", r#"{"kind":"shifted_ellipse","a":1,"b":1,"x0":0.3,"y0":0}"#, "-o"]).arg(&shifted));
    let (code, stdout, _) = run(bin().arg("invariants").arg(&shifted));
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL isoperimetric"));
}

#[test]
fn sweep_runs_every_scenario_and_reports_worst_code() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    std::fs::copy(scenario("static-circle.json"), src.path().join("a.json")).unwrap();
    std::fs::write(
        src.path().join("b.json"),
        r#"{"name": "ellipse", "curve": {"preset": {"kind": "origin_ellipse", "a": 2, "b": 0.5}},
            "N": 64, "dt": 1e-4, "t_end": 0.05, "outputs": {"csv": "ellipse.csv"}}"#,
    )
    .unwrap();
    let (code, stdout, _) = run(bin().arg("--sweep").arg(src.path()).arg("--out").arg(out.path()));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("static-circle: all verdicts passed"));
    assert!(stdout.contains("ellipse: all verdicts passed"));
    assert!(out.path().join("ellipse.csv").exists());
    assert!(out.path().join("static-circle.csv").exists());

    std::fs::write(src.path().join("c.json"), "{").unwrap();
    let (code, _, _) = run(bin().arg("--sweep").arg(src.path()).arg("--out").arg(out.path()));
    assert_eq!(code, 1);
}

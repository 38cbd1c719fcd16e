use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_holab");

fn holab(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(BIN).args(args).arg("--out").arg(out).output().expect("run holab");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sl2_all_passes_and_reports_bott_of_h() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = holab(&["all", "--builtin", "sl2_borel"], dir.path());
    assert_eq!(code, 0, "{stdout}");
    let r = report(dir.path());
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["results"]["bott"]["basis"][0][0][0].as_f64(), Some(-2.0));
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn heisenberg_normality() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = holab(&["normality", "--builtin", "heisenberg_center"], dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert_eq!(r["results"]["normality"]["ideal"], Value::Bool(true));
    assert_eq!(r["results"]["normality"]["chi_trivial"], Value::Bool(true));
    assert_eq!(r["results"]["normality"]["witness"], Value::Null);
}

#[test]
fn malformed_file_exits_2_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", "{\"kind\": \"lie_pair\", \"name\": ");
    let out = dir.path().join("out");
    let (code, _, stderr) = holab(&["all", "--scenario", &f], &out);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 1"), "{stderr}");
    assert!(!out.join("report.json").exists());
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"kind": "lie_pair", "name": "x", "algebra": {"matrices": [[[0, 1], [0, 0]]]}, "subalgebra": [[1, 0]]}"#,
        r#"{"kind": "lie_pair", "name": "x", "algebra": {"matrices": [[[0, 1], [0, 0]]]}, "subalgebra": [[1]], "colour": 3}"#,
        r#"{"kind": "foliation", "name": "x", "variant": "ode_graph", "rhs": ["z"], "box": {"lo": [0, 0], "hi": [1, 1]}, "path": {"interval": [0, 1]}, "base": [0.5], "samples": [[0]]}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let f = write(dir.path(), &format!("c{i}.json"), text);
        let out = dir.path().join(format!("out{i}"));
        let (code, _, stderr) = holab(&["all", "--scenario", &f], &out);
        assert_eq!(code, 2, "case {i}: {stderr}");
        assert!(!out.join("report.json").exists());
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(holab(&["all"], dir.path()).0, 2);
    assert_eq!(holab(&["spin", "--builtin", "sl2_borel"], dir.path()).0, 2);
    assert_eq!(holab(&["all", "--builtin", "nope"], dir.path()).0, 2);
    assert_eq!(holab(&["foliation", "--builtin", "sl2_borel"], dir.path()).0, 2);
    assert_eq!(holab(&["bott", "--builtin", "fol_sin"], dir.path()).0, 2);
    assert_eq!(holab(&["all", "--builtin", "sl2_borel", "--tol-scale", "-1"], dir.path()).0, 2);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn tight_tolerances_exit_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = holab(&["differentiate", "--builtin", "sl2_borel", "--tol-scale", "1e-6"], dir.path());
    assert_eq!(code, 1);
    assert!(stderr.contains("differentiate.b0"), "{stderr}");
    assert_eq!(report(dir.path())["pass"], Value::Bool(false));
}

#[test]
fn structure_constants_through_adjoint_representation() {
    // sl2 in the basis (H, E, F): [H,E] = 2E, [H,F] = -2F, [E,F] = H.
    let mut t = vec![vec![vec![0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, m: usize, v: f64| {
        t[i][j][m] = v;
        t[j][i][m] = -v;
    };
    set(0, 1, 1, 2.0);
    set(0, 2, 2, -2.0);
    set(1, 2, 0, 1.0);
    let scenario = serde_json::json!({
        "kind": "lie_pair",
        "name": "sl2_adjoint",
        "algebra": {"structure_constants": t},
        "subalgebra": [[1, 0, 0], [0, 1, 0]],
        "expected": {"bott": [[[-2.0]], [[0.0]]], "ideal": false, "chi_trivial": false}
    });
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sc.json", &scenario.to_string());
    let (code, stdout, stderr) = holab(&["all", "--scenario", &f], dir.path());
    assert_eq!(code, 0, "{stdout}{stderr}");
}

#[test]
fn structure_constants_with_center_are_rejected() {
    let mut t = vec![vec![vec![0.0; 3]; 3]; 3];
    t[0][1][2] = 1.0;
    t[1][0][2] = -1.0;
    let scenario = serde_json::json!({
        "kind": "lie_pair",
        "name": "heis",
        "algebra": {"structure_constants": t},
        "subalgebra": [[0, 0, 1]]
    });
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "heis.json", &scenario.to_string());
    let (code, _, stderr) = holab(&["all", "--scenario", &f], dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("center"), "{stderr}");
}

#[test]
fn spanned_foliation_scenario() {
    // Leaves z = c exp(x); the slices through the leaf z = 0 are vertical.
    let scenario = r#"{
        "kind": "foliation",
        "name": "exp_sheets",
        "variant": "spanned",
        "fields": [["1", "0", "y2"], ["0", "1", "0"]],
        "box": {"lo": [-3, -3, -3], "hi": [3, 3, 3]},
        "path": {"flow_word": [[0, 0.5], [1, 0.3]]},
        "base": [0.0, 0.0, 0.0],
        "samples": [[-0.1], [0.0], [0.1]],
        "expected": {"map": ["exp(0.5) * y"], "linear": [[1.6487212707001282]]}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sp.json", scenario);
    let (code, stdout, stderr) = holab(&["all", "--scenario", &f], dir.path());
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert_eq!(report(dir.path())["commands_run"], serde_json::json!(["foliation"]));
    assert_eq!(holab(&["pairdemo", "--scenario", &f], dir.path()).0, 2);
}

#[test]
fn show_round_trips_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    for name in holab::builtins::NAMES {
        let (code, stdout, _) = holab(&["show", "--builtin", name], dir.path());
        assert_eq!(code, 0);
        let parsed = holab::scenario::Scenario::from_json(&stdout).unwrap();
        assert_eq!(parsed, holab::builtins::builtin(name).unwrap());
        // The printed scenario runs like the built-in.
        let f = write(dir.path(), &format!("{name}.json"), &stdout);
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        assert_eq!(holab(&["all", "--builtin", name], &a).0, 0);
        assert_eq!(holab(&["all", "--scenario", &f], &b).0, 0);
        assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    }
}

#[test]
fn thread_count_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = Command::new(BIN)
            .args(["all", "--builtin", "fol_riccati", "--seed", "7", "--out"])
            .arg(&out)
            .env("HOLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(run("1", "one"), run("4", "four"));
    let o = Command::new(BIN).args(["all", "--builtin", "fol_riccati"]).env("HOLAB_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_changes_random_draws() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(holab(&["holonomy", "--builtin", "so3_axis", "--seed", "1"], &a).0, 0);
    assert_eq!(holab(&["holonomy", "--builtin", "so3_axis", "--seed", "2"], &b).0, 0);
    let residual = |p: &Path| report(p)["results"]["holonomy"]["morphism_residual"].clone();
    assert_ne!(residual(&a), residual(&b));
}

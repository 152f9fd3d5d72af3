use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn nullfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullfield"))
        .args(args)
        .output()
        .expect("run nullfield")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn temp_manifest(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn solution_passes_whole_suite() {
    let out = nullfield(&["check", &fixture("pp_wave.json"), "--suite", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains(" fail "));
}

#[test]
fn perturbed_solution_fails_reduced_vacuum() {
    let out = nullfield(&["check", &fixture("pp_wave_perturbed.json"), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let reduced = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["check"] == "reduced_vacuum")
        .expect("reduced_vacuum report");
    assert_eq!(reduced["status"], "fail");
}

#[test]
fn precondition_error_exits_4() {
    let out = nullfield(&["check", &fixture("pp_wave_perturbed.json"), "--suite", "cauchy_riemann"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("error"));
}

#[test]
fn usage_errors_exit_2() {
    let unknown_suite = nullfield(&["check", &fixture("pp_wave.json"), "--suite", "nope"]);
    assert_eq!(unknown_suite.status.code(), Some(2));
    let missing = nullfield(&["check", "/nonexistent/manifest.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = temp_manifest(r#"{"version": 1, "family": "peres", "inputs": {"f": "y^"}}"#);
    let parse_error = nullfield(&["curvature", bad.path().to_str().unwrap()]);
    assert_eq!(parse_error.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse_error.stderr).contains("input `f`"));
    let no_command = nullfield(&[]);
    assert_eq!(no_command.status.code(), Some(2));
}

#[test]
fn singular_metric_exits_3() {
    let m = temp_manifest(
        r#"{"version": 1, "metric": [["0"], ["0", "0"], ["0", "0", "-1"], ["0", "0", "0", "-1"]]}"#,
    );
    let out = nullfield(&["curvature", m.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_reports_have_fixed_field_order() {
    let out = nullfield(&["check", &fixture("peres.json"), "--json"]);
    let keys = [
        "\"check\":",
        "\"status\":",
        "\"max_residual\":",
        "\"argmax_point\":",
        "\"tolerance\":",
        "\"points\":",
        "\"seed\":",
        "\"diagnostics\":",
    ];
    let text = stdout(&out);
    assert!(text.lines().count() > 10);
    for line in text.lines() {
        let at: Vec<usize> = keys.iter().map(|k| line.find(k).expect(k)).collect();
        assert!(at.windows(2).all(|w| w[0] < w[1]), "{line}");
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v.as_object().unwrap().len(), keys.len());
        assert_eq!(v["seed"], 42);
        assert_eq!(v["points"], 200);
    }
}

#[test]
fn check_output_is_deterministic() {
    let path = fixture("robinson_trautman.json");
    let a = nullfield(&["check", &path, "--json", "--threads", "1"]);
    let b = nullfield(&["check", &path, "--json", "--threads", "4"]);
    let c = nullfield(&["check", &path, "--json"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let reseeded = nullfield(&["check", &path, "--json", "--seed", "7"]);
    assert_ne!(a.stdout, reseeded.stdout);
}

#[test]
fn curvature_listings() {
    let flat = nullfield(&["curvature", &fixture("minkowski.json")]);
    assert_eq!(flat.status.code(), Some(0));
    assert!(stdout(&flat).starts_with("all components zero"));

    let peres = stdout(&nullfield(&["curvature", &fixture("peres.json")]));
    let riemann: Vec<&str> = peres
        .lines()
        .filter(|l| l.starts_with("R_") && l.as_bytes()[6] == b' ')
        .collect();
    assert_eq!(riemann.len(), 2, "{peres}");
    assert!(riemann[0].starts_with("R_1212 = 2 ") && riemann[0].contains("[nonzero"));
    assert!(riemann[1].starts_with("R_1313 = -2 ") && riemann[1].contains("[nonzero"));

    let rt = stdout(&nullfield(&["curvature", &fixture("robinson_trautman.json"), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&rt).unwrap();
    let r0101 = v["riemann"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["component"] == "R_0101")
        .unwrap();
    assert_eq!(r0101["expr"], "2*m0/rho^3");
    assert_eq!(r0101["verdict"], "nonzero");
}

fn transport_json(args: &[&str]) -> serde_json::Value {
    let out = nullfield(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn vec4(v: &serde_json::Value) -> [f64; 4] {
    std::array::from_fn(|i| v[i].as_f64().unwrap())
}

#[test]
fn transport_around_square_loops() {
    let square = ["--rectangle", "2,3,1,1", "--corner", "0,0,-0.5,-0.5"];
    let flat = fixture("minkowski.json");
    let mut args = vec!["transport", flat.as_str()];
    args.extend(square);
    args.extend(["--vector", "0,0,1,0"]);
    let v = transport_json(&args);
    assert_eq!(vec4(&v["final"]), [0.0, 0.0, 1.0, 0.0]);
    assert_eq!(v["curve"]["closed"], true);

    let pp = fixture("pp_wave.json");
    let mut args = vec!["transport", pp.as_str()];
    args.extend(square);
    args.extend(["--vector", "1,0,0,0"]);
    let v = transport_json(&args);
    let fin = vec4(&v["final"]);
    for (i, want) in [1.0, 0.0, 0.0, 0.0].into_iter().enumerate() {
        assert!((fin[i] - want).abs() <= 1e-8, "{fin:?}");
    }
}

#[test]
fn transport_errors() {
    let rt = fixture("robinson_trautman.json");
    let crossing = nullfield(&["transport", &rt, "--curve", "1 - 2*s", "0", "0", "0", "--vector", "1,0,0,0"]);
    assert_eq!(crossing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&crossing.stderr).contains("leaves the domain"));
    let flat = fixture("minkowski.json");
    let few_steps = nullfield(&["transport", &flat, "--curve", "s", "0", "0", "0", "--vector", "1,0,0,0", "--steps", "8"]);
    assert_eq!(few_steps.status.code(), Some(2));
    let short_vector = nullfield(&["transport", &flat, "--curve", "s", "0", "0", "0", "--vector", "1,0"]);
    assert_eq!(short_vector.status.code(), Some(2));
    let open = nullfield(&["transport", &flat, "--curve", "s", "0", "0", "0", "--closed", "--vector", "1,0,0,0"]);
    assert_eq!(open.status.code(), Some(2));
}

#[test]
fn catalog_lists_every_family() {
    let out = nullfield(&["catalog", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["minkowski_null", "pp_wave", "peres", "plane_wave", "robinson_trautman"]);
    let text = stdout(&nullfield(&["catalog"]));
    assert!(text.contains("input h: function of x1, x2, x3, harmonic in x2, x3"));
}

#[test]
fn in_process_run_matches_binary() {
    let path = fixture("peres.json");
    let args = ["nullfield", "check", path.as_str(), "--json"];
    let outcome = nullfield_cli::run(args);
    let out = nullfield(&args[1..]);
    assert_eq!(outcome.stdout.as_bytes(), &out.stdout[..]);
    assert_eq!(Some(i32::from(outcome.code)), out.status.code());
}

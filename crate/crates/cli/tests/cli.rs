use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn agpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agpk")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn temp(text: &[u8]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text).unwrap();
    f
}

#[test]
fn single_point_disk_is_feasible() {
    let o = agpk(&["certify", data("disk_single.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["status"], "feasible");
    assert!(v["certificate"]["gamma0"].is_object());
}

#[test]
fn two_point_disk_is_infeasible() {
    let o = agpk(&["certify", data("disk_infeasible.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("infeasible (numerical, gap="), "{err}");
    let v = stdout_json(&o);
    assert!(v.get("certificate").is_none());
    assert!(v["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn quiet_silences_the_verdict_line() {
    let o = agpk(&["--quiet", "certify", data("disk_infeasible.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(o.stderr.is_empty());
}

#[test]
fn point_outside_domain() {
    let o = agpk(&["certify", data("disk_outside.json").to_str().unwrap()]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("margin"));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_json_reports_position() {
    let o = agpk(&["certify", data("malformed.json").to_str().unwrap()]);
    assert_eq!(code(&o), 64);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3 column"), "{err}");
}

#[test]
fn input_errors_have_distinct_codes() {
    let o = agpk(&["certify", "/nonexistent/problem.json"]);
    assert_eq!(code(&o), 67);
    let f = temp(br#"{"domain": {"preset": "disk"}, "points": [[0], [0]], "targets": [0, 0]}"#);
    assert_eq!(code(&agpk(&["certify", f.path().to_str().unwrap()])), 66);
    let f = temp(br#"{"domain": {"preset": "disk"}, "points": [[0]], "targets": [0], "bogus": 1}"#);
    assert_eq!(code(&agpk(&["certify", f.path().to_str().unwrap()])), 66);
    assert_eq!(code(&agpk(&["no-such-command"])), 68);
}

#[test]
fn help_documents_exit_codes() {
    let o = agpk(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for c in ["64", "65", "66", "AGPK_THREADS"] {
        assert!(text.contains(c), "{c}");
    }
}

#[test]
fn schwarz_pick_norm() {
    let o = agpk(&["norm", data("schwarz_pick.json").to_str().unwrap(), "--tol", "1e-5"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(lo <= hi && (lo - 1.0).abs() < 1e-4 && (hi - 1.0).abs() < 1e-4, "{lo} {hi}");
}

#[test]
fn emitted_certificates_verify() {
    for (cmd, file) in [
        ("certify", "disk_single.json"),
        ("certify", "annulus_pair.json"),
        ("norm", "schwarz_pick.json"),
        ("norm", "annulus_pair.json"),
        ("norm", "bidisk_product.json"),
    ] {
        let problem = data(file);
        let o = agpk(&[cmd, problem.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{cmd} {file}");
        let cert = temp(&o.stdout);
        let v = agpk(&["verify", problem.to_str().unwrap(), cert.path().to_str().unwrap()]);
        assert_eq!(code(&v), 0, "{cmd} {file}: {}", String::from_utf8_lossy(&v.stdout));
        assert_eq!(stdout_json(&v)["verdict"], true);
    }
}

#[test]
fn strict_certificate_verifies() {
    let problem = data("disk_single.json");
    let o = agpk(&["certify", "--strict-eps", "0.1", problem.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["certificate"]["R"].is_object());
    let cert = temp(&o.stdout);
    assert_eq!(code(&agpk(&["verify", problem.to_str().unwrap(), cert.path().to_str().unwrap()])), 0);
}

#[test]
fn tampered_certificate_fails() {
    let problem = data("annulus_pair.json");
    let o = agpk(&["certify", problem.to_str().unwrap()]);
    let mut v = stdout_json(&o);
    let cell = &mut v["certificate"]["gammas"][1]["re"][0];
    *cell = serde_json::json!(cell.as_f64().unwrap() + 1e-3);
    let cert = temp(v.to_string().as_bytes());
    let r = agpk(&["verify", problem.to_str().unwrap(), cert.path().to_str().unwrap()]);
    assert_eq!(code(&r), 1);
    assert_eq!(stdout_json(&r)["verdict"], false);
}

#[test]
fn outputs_are_byte_identical_and_carry_the_seed() {
    let p = data("bidisk_product.json");
    let p = p.to_str().unwrap();
    for args in [
        vec!["estimate", p, "--seed", "11"],
        vec!["lower-bound", p, "--seed", "11"],
        vec!["idem-check", "--random", "--count", "5", "--seed", "11"],
        vec!["norm", p, "--seed", "11"],
    ] {
        let a = agpk(&args);
        let b = agpk(&args);
        assert_eq!(code(&a), 0, "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(stdout_json(&a)["seed"], 11, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let p = data("bidisk_product.json");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_agpk"))
            .args(["lower-bound", p.to_str().unwrap()])
            .env("AGPK_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let three = run("3");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
    assert_eq!(code(&run("zero")), 66);
}

#[test]
fn floats_have_seventeen_digits() {
    let o = agpk(&["pick", data("schwarz_pick.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("\"level\":1.0000000000000000e0"), "{text}");
}

#[test]
fn json_indent_pretty_prints() {
    let o = agpk(&["pick", data("schwarz_pick.json").to_str().unwrap(), "--json-indent", "2"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("{\n  \"feasible\": true"), "{text}");
}

#[test]
fn pick_verdicts() {
    let o = agpk(&["pick", data("disk_infeasible.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    assert!((v["norm"].as_f64().unwrap() - 1.8).abs() < 1e-8);
    let o = agpk(&["pick", data("disk_infeasible.json").to_str().unwrap(), "--level", "1.9"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn idem_check_modes() {
    let o = agpk(&["idem-check", data("idem_small.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["passed"], true);
    let o = agpk(&["idem-check", "--random", "--count", "10", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["scalar"]["passed"], 10);
    assert!(v["scalar"]["max_deviation"].as_f64().unwrap() < 1e-5);
}

#[test]
fn lower_bound_below_norm() {
    let p = data("bidisk_product.json");
    let lb = stdout_json(&agpk(&["lower-bound", p.to_str().unwrap()]));
    let n = stdout_json(&agpk(&["norm", p.to_str().unwrap()]));
    let value = lb["value"].as_f64().unwrap();
    assert!(value <= n["upper"].as_f64().unwrap() + 1e-6);
    assert!(lb["margins"].as_array().unwrap().iter().all(|m| m.as_f64().unwrap() >= 0.0));
}

#[test]
fn inconclusive_at_tiny_iteration_cap() {
    let o = agpk(&["certify", data("annulus_pair.json").to_str().unwrap(), "--max-iter", "1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout_json(&o)["status"], "inconclusive");
}

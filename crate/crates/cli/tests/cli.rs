use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wave-equiv")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn classify_examples() {
    let out = run(&["classify", "--a", "1/(1+u^2)", "--b", "1/(1+u^2)"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("subclass: P3\n"));

    let out = run(&["classify", "--a", "exp(u)", "--b", "exp(u)", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["report"]["tag"], "P4");
    assert_eq!(v["report"]["M1"], 1.0);

    let out = run(&["classify", "--a", "1", "--b", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("subclass: P5\n"));
    assert!(text.contains("t -> t/m"));
}

#[test]
fn p1_reports_the_symmetry_bound_from_its_cloud() {
    let out = run(&["classify", "--a", "exp(u - x)", "--b", "exp(u + x)", "--format", "json", "--n", "80"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["report"]["tag"], "P1");
    let rho = v["cloud"]["dimension"]["rho"].as_u64().unwrap();
    assert!(rho <= 4);
    assert_eq!(v["report"]["symmetry"]["upper_bound"].as_u64().unwrap(), 6 - rho);
    assert_eq!(v["report"]["symmetry"]["lower_bound"], 2);
}

#[test]
fn equivalence_exit_codes() {
    let same = run(&["equivalent", "--a", "u^3", "--b", "u^3", "--a", "u^(-3)", "--b", "u^(-3)"]);
    assert_eq!(code(&same), 0, "{}", stdout(&same));
    let different = run(&["equivalent", "--a", "exp(u)", "--b", "exp(u)", "--a", "u^2", "--b", "u^2"]);
    assert_eq!(code(&different), 3);
    let p1 = ["--a", "exp(u - x)", "--b", "exp(u + x)"];
    let args: Vec<&str> = ["equivalent"].iter().chain(&p1).chain(&p1).copied().collect();
    let unknown = run(&args);
    assert_eq!(code(&unknown), 4, "{}", stdout(&unknown));
    let tags = run(&["equivalent", "--a", "1", "--b", "1", "--a", "exp(u)", "--b", "exp(u)", "--format", "json"]);
    assert_eq!(code(&tags), 3);
    assert_eq!(json(&tags)["verdict"], "Inequivalent");
}

#[test]
fn input_errors_exit_with_two() {
    for args in [
        &["classify", "--a", "1/(1+", "--b", "1"][..],
        &["classify", "--a", "-1", "--b", "1"],
        &["classify", "--a", "C*u", "--b", "u"],
        &["classify", "--a", "u", "--b", "u", "--n", "10"],
        &["classify", "--a", "u", "--b", "u", "--box", "u=2:1"],
        &["classify", "--a", "u", "--b", "u", "--tol", "0"],
        &["classify", "--a", "u"],
        &["equivalent", "--a", "u", "--b", "u"],
        &["classify", "--file", "/nonexistent/system.eq"],
        &["classify", "--a", "1", "--b", "1", "--cloud-out", "/tmp/never.csv"],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let out = run(&["classify", "--a", "1/(1+*u)", "--b", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("position"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn json_output_is_byte_identical() {
    for args in [
        &["classify", "--a", "exp(x*u)", "--b", "exp(x*u)", "--format", "json", "--seed", "5"][..],
        &[
            "equivalent",
            "--a",
            "1/(1+u^2)",
            "--b",
            "1/(1+u^2)",
            "--a",
            "1/(1+u^4)",
            "--b",
            "1/(1+u^4)",
            "--format",
            "json",
        ],
        &["invariants", "--a", "u*x", "--b", "x^2 + u", "--format", "json", "--k", "3"],
    ] {
        let (first, second) = (run(args), run(args));
        assert!(first.status.success() || code(&first) == 3, "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn equation_files_and_parameters() {
    let mut file = tempfile::Builder::new().suffix(".eq").tempfile().unwrap();
    writeln!(file, "# lorentzian with a parameter\na = 1/(1 + C*u^2)\nb = 1/(1 + C*u^2)\nparam C = 1.0\nbox u = 0.1:2")
        .unwrap();
    let path = file.path().to_str().unwrap();
    let out = run(&["classify", "--file", path, "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["report"]["tag"], "P3");

    // the file agrees with inline flags and a command-line parameter override
    let out = run(&["equivalent", "--file", path, "--a", "1/(1 + u^2)", "--b", "1/(1 + u^2)"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let out = run(&["classify", "--file", path, "--param", "C=0"]);
    assert!(stdout(&out).starts_with("subclass: P5"), "{}", stdout(&out));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "a = u\nc = 2").unwrap();
    let out = run(&["classify", "--file", bad.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn cloud_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cloud.csv");
    let out =
        run(&["classify", "--a", "1/(1+u^2)", "--b", "1/(1+u^2)", "--n", "60", "--cloud-out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,u,u_x,v_x,M1,M2,D4M1");
    assert_eq!(lines.count(), 60);
}

#[test]
fn invariants_listing() {
    let out = run(&["invariants", "--a", "1/(1+u^2)", "--b", "1/(1+u^2)"]);
    let text = stdout(&out);
    for name in ["M1 = ", "M2 = ", "D4M1 = "] {
        assert!(text.contains(name), "{name}");
    }
    let out = run(&["invariants", "--a", "exp(u)", "--b", "exp(u)"]);
    let text = stdout(&out);
    assert!(text.contains("M1 = 1") && text.contains("every other invariant vanishes"));
    let out = run(&["invariants", "--a", "exp(u - x)", "--b", "exp(u + x)", "--format", "json", "--k", "4"]);
    let v = json(&out);
    let names: Vec<&str> = v["invariants"].as_array().unwrap().iter().map(|i| i["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["P", "R", "K1", "K2", "K3"]);
    assert_eq!(v["samples"].as_array().unwrap().len(), 4);
    assert!(v["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("K4..K20")));
}

#[test]
fn acceptance_systems_through_the_binary() {
    let members = [
        ("1/(1+u^2)", "P3"),
        ("exp(u)", "P4"),
        ("u^2", "P4"),
        ("u^3", "P4"),
        ("u^5", "P4"),
        ("exp(arctan(sinh(u)))", "P4"),
        ("1", "P5"),
    ];
    for (f, tag) in members {
        let out = run(&["classify", "--a", f, "--b", f, "--format", "json"]);
        assert_eq!(code(&out), 0, "{f}");
        assert_eq!(json(&out)["report"]["tag"], tag, "{f}");
    }
    let pairs = [("u^3", "u^(-3)", 0), ("exp(u)", "u^2", 3), ("1/(1+u^2)", "1/(1+(u+0.3)^2)", 0)];
    for (a, b, want) in pairs {
        let out = run(&["equivalent", "--a", a, "--b", a, "--a", b, "--b", b, "--tol", "1e-6"]);
        assert_eq!(code(&out), want, "{a} vs {b}: {}", stdout(&out));
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convendo::schema::{parse, EndoDesc};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convendo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GL_1D: &str = r#"{"kind":"gl","c":2,"nu":{"atoms":[{"s":1,"w":1},{"s":-1,"w":1}]},"n":1}"#;
const PHI: &str = r#"{"kind":"phi_example","phi":{"breakpoints":[0],"values":[1],"slope_left":-1,"slope_right":1}}"#;

// Data rows of a CSV text, header skipped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn eval_gl_on_quadratic() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "gl.json", GL_1D);
    let f = write(&dir, "f.json", r#"{"kind":"quad","c":1}"#);
    let o = run(&["eval", "--endo", s(&endo), "--fn", s(&f), "--grid", "-2:2:0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("x1,value\n"), "{text}");
    let body = rows(&text);
    assert_eq!(body.len(), 9);
    for r in body {
        let x: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - 2.0 * x * x).abs() < 1e-12, "{x} {v}");
    }
}

#[test]
fn eval_points_file_and_infinite_values() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "sc.json", r#"{"kind":"scale_compose","lambda":1,"mu":2,"n":2}"#);
    let f = write(&dir, "ball.json", r#"{"kind":"ball_indicator","r":1}"#);
    let pts = write(&dir, "pts.csv", "x,y\n0,0\n0.25,0.25\n1,1\n");
    let out = dir.path().join("out.csv");
    let o = run(&["eval", "--endo", s(&endo), "--fn", s(&f), "--points", s(&pts), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x1,x2,value\n"), "{text}");
    let values: Vec<String> = rows(&text).into_iter().map(|r| r[2].clone()).collect();
    assert_eq!(values, ["0", "0", "inf"]);
}

#[test]
fn eval_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "r.json", r#"{"kind":"radial","mu":{"n":2,"atoms":[{"t":1,"theta":0.4,"w":1}]}}"#);
    let f = write(&dir, "f.json", r#"{"kind":"max","terms":[{"kind":"norm","c":1},{"kind":"affine","a":[1,-0.5],"b":0}]}"#);
    let args = ["eval", "--endo", s(&endo), "--fn", s(&f), "--grid", "-1:1:0.125"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(rows(&stdout(&a)).len(), 17 * 17);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn schema_errors_name_line_and_field() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "gl.json", GL_1D);
    let f = write(&dir, "bad.json", "{\"kind\":\"sum\",\"terms\":[\n {\"kind\":\"quad\",\"c\":1},\n {\"kind\":\"norm\",\"c\":\"a\"}]}");
    let o = run(&["eval", "--endo", s(&endo), "--fn", s(&f), "--grid", "0:1:1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("terms[1].c"), "{err}");

    let bogus = write(&dir, "bogus.json", r#"{"kind":"gl","c":1,"nu":{"atoms":[]},"n":1,"bogus":0}"#);
    let o = run(&["eval", "--endo", s(&bogus), "--fn", s(&f), "--grid", "0:1:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `bogus`"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(run(&["check", "--suite", "nope"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "gl.json", GL_1D);
    let f = write(&dir, "f.json", r#"{"kind":"quad","c":1}"#);
    let o = run(&["eval", "--endo", s(&endo), "--fn", s(&f), "--grid", "0:1:0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("whole number"), "{}", stderr(&o));
}

#[test]
fn evaluation_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "phi.json", PHI);
    let f = write(&dir, "ind.json", r#"{"kind":"pwl","breakpoints":[-1,1],"values":[0,0],"slope_left":"-inf","slope_right":"inf"}"#);
    let o = run(&["eval", "--endo", s(&endo), "--fn", s(&f), "--grid", "0:1:1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn check_gl_passes_with_witness() {
    let o = run(&["check", "--suite", "gl", "--trials", "20", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(!text.contains("FAIL"), "{text}");
    assert!(text.contains("witness"), "{text}");
}

#[test]
fn failing_check_dumps_replayable_counterexamples() {
    let o = run(&["check", "--suite", "gl", "--trials", "4", "--tol", "0", "--sequential"]);
    assert_eq!(o.status.code(), Some(1));
    let dumps: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!dumps.is_empty());
    let mut replayed = 0;
    for d in &dumps {
        assert_eq!(d["suite"], "gl");
        assert_eq!(d["seed"], 0);
        assert!(d["max_error"].as_f64().unwrap() > d["tolerance"].as_f64().unwrap());
        if let Some(endo) = d["counterexample"].get("endo") {
            let desc: EndoDesc = parse(&endo.to_string()).unwrap();
            desc.build().unwrap();
            replayed += 1;
        }
    }
    assert!(replayed > 0);
}

#[test]
fn kernel_extract_of_gl_operator() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "gl.json", GL_1D);
    let out = dir.path().join("k.csv");
    let o = run(&["kernel", "extract", "--endo", s(&endo), "--x-grid", "-1:1:0.25", "--y-grid", "-3:3:0.125", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let ys: Vec<f64> = lines.next().unwrap().split(',').skip(1).map(|t| t.parse().unwrap()).collect();
    assert_eq!(ys.len(), 49);
    let mut n = 0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        let x = cells[0];
        for (&y, &v) in ys.iter().zip(&cells[1..]) {
            let want = (y - x).max(0.0) + (y + x).max(0.0);
            assert!((v - want).abs() < 1e-9, "x={x} y={y}: {v} vs {want}");
        }
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn phi_round_trip_is_accurate() {
    let dir = TempDir::new().unwrap();
    let endo = write(&dir, "phi.json", PHI);
    let o = run(&["kernel", "roundtrip", "--endo", s(&endo), "--trials", "20", "--tol", "1e-5"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("max deviation"), "{}", stdout(&o));
}

#[test]
fn grid_kernel_outside_its_grid_exits_2() {
    let dir = TempDir::new().unwrap();
    let endo = write(
        &dir,
        "k.json",
        r#"{"kind":"kernel","A":[-1,1],"R":1,"psi":{"kind":"grid","xs":[-1,1],"ys":[-1,0,1],"values":[[0,0,0],[0,0,0]]}}"#,
    );
    let o = run(&["kernel", "extract", "--endo", s(&endo), "--x-grid", "-2:2:1", "--y-grid", "-1:1:1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

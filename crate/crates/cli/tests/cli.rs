use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz-lab"))
        .args(args)
        .env("ORLICZ_LAB_OUT", out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path, name: &str) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join(name)).unwrap()).unwrap();
    v["report"].clone()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn power_conjugate_is_quarter_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["nfun", "--kind", "power", "--p", "2", "--conjugate", "--points", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = report(dir.path(), "nfun.json");
    for row in rep["conjugate"].as_array().unwrap() {
        let (s, v) = (row[0].as_f64().unwrap(), row[1].as_f64().unwrap());
        assert!((v - s * s / 4.0).abs() <= 1e-9 * (1.0 + s * s), "s={s} value={v}");
    }
    assert!(dir.path().join("nfun_conjugate.csv").exists());
    assert!(dir.path().join("nfun.svg").exists());
}

#[test]
fn pathological_function_is_reported_not_doubling() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["nfun", "--kind", "pathological", "--p", "2", "--q", "3", "--delta2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("NOT-Δ₂"));
    assert!(dir.path().join("nfun_delta2.csv").exists());
}

#[test]
fn llogl_lower_index_is_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["nfun", "--kind", "llogl", "--indices"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lower = report(dir.path(), "nfun.json")["indices"]["lower"].as_f64().unwrap();
    assert!((1.0..=1.01).contains(&lower), "lower index {lower}");
}

#[test]
fn malformed_spec_reports_position_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["nfun", "--spec", r#"{"kind": "power", "params": {"p": 2,}}"#]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 1, column"), "{err}");
}

fn write_field(dir: &Path, body: &str) -> String {
    let path = dir.join("field.csv");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn constant_field_norm_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("dim,n,extent\n1,8,2\n");
    for i in 0..8 {
        body.push_str(&format!("{i},{},3\n", (i as f64 + 0.5) * 0.25));
    }
    let field = write_field(dir.path(), &body);
    let o = run(dir.path(), &["norm", "--field", &field, "--kind", "power", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = report(dir.path(), "norm.json");
    // ∫ (3/λ)² over length 2 equals 1 at λ = 3√2.
    let expected = 3.0 * 2f64.sqrt();
    assert!((rep["luxemburg"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!((rep["marcinkiewicz"]["value"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn zero_field_has_zero_norm() {
    let dir = tempfile::tempdir().unwrap();
    let field = write_field(dir.path(), "dim,n,extent\n1,4,1\n0,0.125,0\n1,0.375,0\n2,0.625,0\n3,0.875,0\n");
    let o = run(dir.path(), &["norm", "--field", &field, "--kind", "llogl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(dir.path(), "norm.json")["luxemburg"].as_f64(), Some(0.0));
}

#[test]
fn indicator_rearranges_to_a_step() {
    let dir = tempfile::tempdir().unwrap();
    let field = write_field(dir.path(), "dim,n,extent\n1,4,1\n0,0.125,0\n1,0.375,5\n2,0.625,0\n3,0.875,5\n");
    let o = run(dir.path(), &["norm", "--field", &field, "--kind", "power", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rows = csv::Reader::from_path(dir.path().join("rearrangement.csv")).unwrap();
    for rec in rows.records() {
        let rec = rec.unwrap();
        let s: f64 = rec[0].parse().unwrap();
        let f: f64 = rec[1].parse().unwrap();
        let expected = if s < 0.5 { 5.0 } else { 0.0 };
        assert_eq!(f, expected, "s = {s}");
    }
}

#[test]
fn quadratic_in_three_dimensions_is_slow_with_sobolev_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["embed", "--kind", "power", "--p", "2", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = report(dir.path(), "embed.json");
    assert_eq!(rep["growth"]["class"], "Slow");
    assert!((rep["b_n_tail_slope"].as_f64().unwrap() - 6.0).abs() < 0.05);
}

#[test]
fn fast_growth_cases_are_classified() {
    let cases: [&[&str]; 2] = [&["--kind", "power", "--p", "5"], &["--kind", "t_exp_t"]];
    for src in cases {
        let dir = tempfile::tempdir().unwrap();
        let args: Vec<&str> = ["embed", "--dim", "3"].iter().chain(src).copied().collect();
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(report(dir.path(), "embed.json")["growth"]["class"], "Fast");
    }
}

#[test]
fn borderline_growth_asks_for_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["embed", "--kind", "power", "--p", "3", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--override"));
    let o = run(dir.path(), &["embed", "--kind", "power", "--p", "3", "--dim", "3", "--override", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn write_problem(dir: &Path, json: &str) -> String {
    let path = dir.join("problem.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_output_is_byte_identical_across_runs_and_policies() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"grid":{"dim":1,"n":64,"extent":1},"nfunction":{"kind":"power","params":{"p":3}},
            "datum":{"type":"l1_sample","constant":2},"mollifier_levels":[4,8]}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run(&a, &["solve", &problem]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    let ob = run(&b, &["--sequential", "solve", &problem]);
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let (ja, jb) = (fs::read(a.join("solve.json")).unwrap(), fs::read(b.join("solve.json")).unwrap());
    assert_eq!(ja, jb);
    assert!(String::from_utf8_lossy(&ja).contains("config_hash"));
}

#[test]
fn undominated_lower_order_term_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"grid":{"dim":1,"n":64,"extent":1},"nfunction":{"kind":"power","params":{"p":2}},
            "operator":{"form":"potential_gradient","lower_order":{"kind":"power","params":{"p":3}}},
            "datum":{"type":"l1_sample","constant":1},"mollifier_levels":[4]}"#,
    );
    let o = run(dir.path(), &["solve", &problem]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("flag:"));
}

#[test]
fn calculus_suite_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(out, &["verify", "calculus"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("3 of 3 criteria passed"));
    }
    assert_eq!(fs::read(a.join("verify.json")).unwrap(), fs::read(b.join("verify.json")).unwrap());
}

//! End-to-end tests that drive the compiled `monge` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn monge(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monge"));
    cmd.args(args);
    // Isolate from the ambient environment.
    cmd.env_remove("MONGE_OUT_DIR");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary should spawn")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("missing report {}: {e}", path.display()));
    serde_json::from_str(&text).expect("report should be valid JSON")
}

/// Center value of a dumped CSV: the `u` of the row closest to (0, 0).
fn csv_center(path: &Path) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,u"));
    let mut best = (f64::INFINITY, f64::NAN);
    for line in lines {
        let mut parts = line.split(',').map(|s| s.parse::<f64>().unwrap());
        let (x, y, u) = (
            parts.next().unwrap(),
            parts.next().unwrap(),
            parts.next().unwrap(),
        );
        let d = x.hypot(y);
        if d < best.0 {
            best = (d, u);
        }
    }
    assert!(best.0 < 1e-12, "no node at the domain center");
    best.1
}

#[test]
fn ex1_sweep_reports_second_order_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = monge(
        &[
            "solve", "--problem", "ex1", "--n", "32,64", "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let report = read_json(&dir.path().join("ex1_mixed.json"));
    assert_eq!(report["problem"], "ex1");
    assert_eq!(report["scheme"], "mixed");
    assert_eq!(report["M"], serde_json::Value::Null);
    assert_eq!(report["norm_convention"], "area-weighted-l2");

    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["n"], 32);
    assert!((rows[0]["h"].as_f64().unwrap() - 2.0 / 32.0).abs() < 1e-15);
    assert_eq!(rows[0]["rate2"], serde_json::Value::Null);

    let rate2 = rows[1]["rate2"].as_f64().unwrap();
    let rate_inf = rows[1]["rate_inf"].as_f64().unwrap();
    assert!((rate2 - 2.0).abs() < 0.05, "l2 rate {rate2}");
    assert!((rate_inf - 2.0).abs() < 0.05, "linf rate {rate_inf}");
    for row in rows {
        assert!(row["policy_iterations"].as_u64().unwrap() <= 5);
        assert_eq!(row["wide_point_count"], 0);
    }
}

#[test]
fn ex5_dump_contains_center_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = monge(
        &[
            "solve", "--problem", "ex5", "--n", "64", "--dump-solution",
            "--out-dir", dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let center = csv_center(&dir.path().join("ex5_mixed_n64.csv"));
    assert!(
        (-0.190..=-0.180).contains(&center),
        "center {center} outside the expected band"
    );
    assert!((center - (-0.1844)).abs() < 1e-2, "center {center}");

    // No exact solution: error and rate columns are null.
    let report = read_json(&dir.path().join("ex5_mixed.json"));
    let row = &report["rows"][0];
    assert_eq!(row["l2"], serde_json::Value::Null);
    assert_eq!(row["rate_inf"], serde_json::Value::Null);
    assert!(row["wide_point_count"].as_u64().unwrap() > 0);
}

#[test]
fn nonmonotone_scheme_lands_on_the_concave_branch() {
    let dir = tempfile::tempdir().unwrap();
    let out = monge(
        &[
            "solve", "--problem", "ex5", "--n", "32", "--scheme", "nonmonotone",
            "--dump-solution", "--out-dir", dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let center = csv_center(&dir.path().join("ex5_nonmonotone_n32.csv"));
    assert!(
        (center - 0.18063).abs() < 0.18063 * 0.01,
        "concave-branch center {center}"
    );

    let report = read_json(&dir.path().join("ex5_nonmonotone.json"));
    assert_eq!(report["M"], serde_json::Value::Null);
    assert_eq!(report["rows"][0]["wide_point_count"], 0);
}

#[test]
fn rejects_bad_grid_sizes_and_unknown_problems() {
    let out = monge(&["solve", "--problem", "ex1", "--n", "0"], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("at least 3"));

    let out = monge(&["solve", "--problem", "ex9", "--n", "32"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown problem 'ex9'"));

    // Missing required flag: clap's own config-error exit code.
    let out = monge(&["solve", "--problem", "ex1"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three() {
    let out = monge(
        &[
            "solve", "--problem", "ex5", "--n", "8", "--max-iter", "1", "--tol", "1e-14",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("did not reach tolerance"));
}

#[test]
fn custom_quadratic_problem_is_solved_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("quad.toml");
    std::fs::write(
        &problem,
        r#"
        [domain]
        x = [-1.0, 1.0]
        y = [-1.0, 1.0]
        [source]
        expr = "0.25"
        [boundary]
        expr = "0.25 * (x^2 + y^2)"
        [exact]
        expr = "0.25 * (x^2 + y^2)"
        "#,
    )
    .unwrap();

    let out = monge(
        &[
            "solve", "--problem", problem.to_str().unwrap(), "--n", "16",
            "--out-dir", dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let report = read_json(&dir.path().join("quad_mixed.json"));
    assert_eq!(report["problem"], "quad");
    let l2 = report["rows"][0]["l2"].as_f64().unwrap();
    assert!(l2 < 1e-8, "quadratic should be reproduced to solver precision, l2 = {l2}");
}

#[test]
fn custom_point_mass_problem_recovers_the_cone() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("cone.toml");
    std::fs::write(
        &problem,
        r#"
        name = "cone"
        [domain]
        x = [-0.5, 0.5]
        y = [-0.5, 0.5]
        [source]
        mass = 3.14159265358979323846
        at = [0.0, 0.0]
        [boundary]
        expr = "sqrt(x^2 + y^2)"
        [exact]
        expr = "sqrt(x^2 + y^2)"
        "#,
    )
    .unwrap();

    let out = monge(
        &[
            "solve", "--problem", problem.to_str().unwrap(), "--n", "32",
            "--out-dir", dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let report = read_json(&dir.path().join("cone_mixed.json"));
    let linf = report["rows"][0]["linf"].as_f64().unwrap();
    assert!(linf < 1e-2, "cone linf error {linf}");
}

#[test]
fn malformed_custom_problem_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("broken.toml");
    std::fs::write(
        &problem,
        r#"
        [domain]
        x = [0.0, 1.0]
        y = [0.0, 1.0]
        [source]
        expr = "2 +"
        [boundary]
        expr = "0"
        "#,
    )
    .unwrap();

    let out = monge(
        &["solve", "--problem", problem.to_str().unwrap(), "--n", "16"],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("source expression"));
}

#[test]
fn reports_are_deterministic_up_to_timing() {
    let strip = |mut v: serde_json::Value| -> serde_json::Value {
        v.as_object_mut().unwrap().remove("metadata");
        for row in v["rows"].as_array_mut().unwrap() {
            row.as_object_mut().unwrap().remove("runtime_ms");
        }
        v
    };

    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = monge(
            &[
                "solve", "--problem", "ex1", "--n", "16,32", "--out-dir",
                dir.path().to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.success(), "{}", stderr_of(&out));
        reports.push(strip(read_json(&dir.path().join("ex1_mixed.json"))));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn output_directory_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let sub: PathBuf = dir.path().join("runs");
    let out = monge(
        &["solve", "--problem", "ex1", "--n", "8"],
        &[("MONGE_OUT_DIR", sub.as_path())],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(sub.join("ex1_mixed.json").exists());
}

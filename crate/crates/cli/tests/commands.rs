mod common;

use common::*;
use serde_json::Value;

fn json_file(p: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn estimate_active_group() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "active.csv", ACTIVE);
    let j = dir.path().join("r.json");
    let o = dtmh(&["estimate", s(&t), "--json", s(&j)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("-0.655"), "{out}");
    assert!(out.contains("(-0.806, -0.503)"), "{out}");
    assert!(
        out.contains("negative phi: column-variable hazard dominates"),
        "{out}"
    );

    let v = json_file(&j);
    let ci = &v["estimates"][0]["report"]["ci"];
    assert!((ci["estimate"].as_f64().unwrap() + 0.655).abs() < 5e-4);
    assert!((ci["lower"].as_f64().unwrap() + 0.806).abs() < 2e-3);
    assert!((ci["upper"].as_f64().unwrap() + 0.503).abs() < 2e-3);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["seeds"][0], 42);
    assert_eq!(v["inputs"][0]["n"], 119);
}

#[test]
fn estimate_with_header_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let body = "pre/post,c1,c2,c3,c4\nc1,7,4,1,0\nc2,11,5,2,2\nc3,13,23,3,1\nc4,9,17,13,8\n";
    let t = write(dir.path(), "labelled.csv", body);
    let o = dtmh(&["estimate", s(&t)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("-0.655"));
}

#[test]
fn one_by_one_table_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "one.csv", "7\n");
    let o = dtmh(&["estimate", s(&t)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("2x2"), "{}", stderr(&o));
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "bad.csv", "1,2\n3,x4\n");
    let o = dtmh(&["estimate", s(&t)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2, column 2"), "{}", stderr(&o));
    let o = dtmh(&["estimate", "/nonexistent/table.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn extreme_table_refuses_delta_interval() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "left.csv", EXTREME_LEFT);
    let j = dir.path().join("r.json");
    let o = dtmh(&["estimate", s(&t), "--json", s(&j)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stdout(&o).contains("phi = -1.000 (boundary"),
        "{}",
        stdout(&o)
    );
    assert!(stderr(&o).contains("not differentiable"), "{}", stderr(&o));
    let v = json_file(&j);
    assert_eq!(v["status"], "degenerate");
    assert_eq!(v["estimates"][0]["point_estimate"], -1.0);
    assert_eq!(v["estimates"][0]["boundary"], true);
    assert!(v["estimates"][0]["report"].is_null());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.csv", ACTIVE);
    for args in [
        vec!["estimate", s(&t), "--level", "1.5"],
        vec!["estimate", s(&t), "--measure", "kappa"],
        vec!["estimate", s(&t), "--measure", "psi:-2"],
        vec!["estimate", s(&t), "--ci", "jackknife"],
        vec!["estimate", s(&t), "--ci", "bootstrap:50"],
        vec!["estimate", s(&t), "--ci", "delta", "--replicates", "500"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = dtmh(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(dtmh(&["--help"]).status.code(), Some(0));
    assert_eq!(dtmh(&["--version"]).status.code(), Some(0));
}

#[test]
fn psi_and_bootstrap_options() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.csv", ACTIVE);
    let o = dtmh(&["estimate", s(&t), "--measure", "psi", "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("psi(0)"), "{}", stdout(&o));
    assert!(!stdout(&o).contains("orientation"));

    let run = |seed: &str| {
        let o = dtmh(&[
            "estimate",
            s(&t),
            "--ci",
            "bootstrap:300",
            "--seed",
            seed,
            "--json",
            "-",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
    };
    let a = run("7");
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["estimates"][0]["report"]["bootstrap"]["replicates"], 300);
    assert_eq!(
        v["estimates"][0]["report"]["ci"]["method"],
        "bootstrap-percentile"
    );
}

#[test]
fn compare_active_and_placebo() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", ACTIVE);
    let p = write(dir.path(), "p.csv", PLACEBO);
    let o = dtmh(&["compare", s(&a), s(&p)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("not significant at 0.05"), "{out}");
    assert!(out.contains("intervals overlap: yes"), "{out}");
    assert!(out.contains("independent samples"), "{out}");
    assert!(out.contains("-0.453"), "{out}");
}

fn compare_difference(a: &str, b: &str) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let pa = write(dir.path(), "a.csv", a);
    let pb = write(dir.path(), "b.csv", b);
    let o = dtmh(&["compare", s(&pa), s(&pb), "--json", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["comparison"]["difference"]["estimate"].as_f64().unwrap()
}

#[test]
fn compare_with_itself_is_zero() {
    assert_eq!(compare_difference(ACTIVE, ACTIVE), 0.0);
}

#[test]
fn compare_with_transpose_doubles_estimate() {
    let d = compare_difference(ACTIVE, ACTIVE_TRANSPOSED);
    let phi = dtmh_core::point_estimate(
        &dtmh_core::CountTable::new(vec![
            vec![7, 4, 1, 0],
            vec![11, 5, 2, 2],
            vec![13, 23, 3, 1],
            vec![9, 17, 13, 8],
        ])
        .unwrap(),
        dtmh_core::Measure::Phi,
    )
    .unwrap();
    assert!((d - 2.0 * phi).abs() < 1e-12, "{d} vs {phi}");
}

#[test]
fn compare_with_degenerate_group_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", ACTIVE);
    let l = write(
        dir.path(),
        "l.csv",
        "0,0,0,0\n0,0,0,0\n0,0,0,0\n40,60,1,0\n",
    );
    let o = dtmh(&["compare", s(&a), s(&l)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn curve_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = dtmh(&["curve", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,phi"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (d, p) = l.split_once(',').unwrap();
            (d.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 121);
    assert_eq!(rows[0].0, -6.0);
    assert_eq!(rows[120].0, 6.0);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(text.lines().any(|l| l == "0.0,0.0"), "{text}");
    for (d, p) in rows {
        assert!((p - dtmh_core::phi_of_delta(d)).abs() < 1e-15);
    }
}

#[test]
fn curve_rejects_bad_grids() {
    for args in [
        vec!["curve", "--step", "0"],
        vec!["curve", "--step", "-0.1"],
        vec!["curve", "--delta-min", "2", "--delta-max", "1"],
        vec!["curve", "--out", "/nonexistent/dir/curve.csv"],
    ] {
        let o = dtmh(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn simulate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let j1 = dir.path().join("a.json");
    let j2 = dir.path().join("b.json");
    let args = |j: &std::path::Path| {
        vec![
            "simulate".to_string(),
            "--delta".into(),
            "0".into(),
            "--n".into(),
            "500".into(),
            "--replicates".into(),
            "2000".into(),
            "--seed".into(),
            "42".into(),
            "--json".into(),
            j.to_str().unwrap().to_string(),
        ]
    };
    for j in [&j1, &j2] {
        let a = args(j);
        let o = dtmh(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read(&j1).unwrap();
    assert_eq!(a, std::fs::read(&j2).unwrap());
    let v: Value = serde_json::from_slice(&a).unwrap();
    let cov = v["coverage"][0]["coverage"].as_f64().unwrap();
    assert!((0.93..=0.97).contains(&cov), "{cov}");
    assert_eq!(v["seeds"][0], 42);
}

#[test]
fn simulate_config_and_grid_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "study.cfg",
        "# grid over delta\ndelta = -1,0,1\nbase_hazards = 0.4,0.5\nn = 300\nreplicates = 200\nseed = 9\n",
    );
    let csv = dir.path().join("grid.csv");
    let o = dtmh(&["simulate", "--config", s(&cfg), "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "delta,n,replicates,level,seed,true_value,coverage,mcse,mean_width,degenerate_count,joint"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-1.0,300,200,0.95,9,"));
    assert!(lines[2].starts_with("0.0,300,200,0.95,9,0.0,"));

    // Flags override the file.
    let o = dtmh(&[
        "simulate",
        "--config",
        s(&cfg),
        "--delta",
        "0.5",
        "--json",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coverage"].as_array().unwrap().len(), 1);
    assert_eq!(v["parameters"]["seed"], 9);
}

#[test]
fn simulate_rejects_invalid_specs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "delta 1\n");
    let unknown = write(dir.path(), "unknown.cfg", "colour = red\n");
    for args in [
        vec!["simulate", "--replicates", "50"],
        vec!["simulate", "--n", "5"],
        vec!["simulate", "--base-hazards", "0.3,1.2"],
        vec!["simulate", "--level", "0"],
        vec!["simulate", "--delta", "abc"],
        vec!["simulate", "--config", s(&bad)],
        vec!["simulate", "--config", s(&unknown)],
    ] {
        let o = dtmh(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

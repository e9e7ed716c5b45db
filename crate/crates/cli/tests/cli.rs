use std::process::{Command, Output};

use serde_json::Value;

fn cvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvlab"))
        .args(args)
        .env_remove("CVLAB_GRID")
        .env_remove("CVLAB_TOL")
        .env_remove("CVLAB_RMAX")
        .output()
        .expect("spawn cvlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

#[test]
fn validate_exit_codes() {
    let ok = cvlab(&["validate", "--expr", "t/(1+t)"]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["ok"], true);

    let bad = cvlab(&["validate", "--expr", "2*t"]);
    assert_eq!(code(&bad), 1);
    let v = json(&bad);
    assert_eq!(v["ok"], false);
    assert_eq!(v["violations"][0]["condition"], "xi_at_most_one");

    assert_eq!(code(&cvlab(&["validate", "--expr", "t/("])), 2);
    assert_eq!(code(&cvlab(&["validate", "--expr", "foo(t)"])), 2);
    assert_eq!(code(&cvlab(&["validate", "--expr", "exp(t, t)"])), 2);
}

#[test]
fn source_is_required_and_exclusive() {
    assert_eq!(code(&cvlab(&["classify"])), 2);
    assert_eq!(
        code(&cvlab(&["classify", "--expr", "t", "--family", "s3"])),
        2
    );
    assert_eq!(code(&cvlab(&["classify", "--expr", "t", "--a", "0.5"])), 2);
    assert_eq!(code(&cvlab(&["classify", "--family", "nope"])), 2);
}

#[test]
fn classify_families() {
    let s1 = json(&cvlab(&["classify", "--family", "poly", "--a", "0.5"]));
    assert_eq!(s1["class"], "S1");
    assert!((s1["xi_infinity"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(s1["r0"], "inf");

    let s3 = json(&cvlab(&["classify", "--family", "s3", "--r0", "2"]));
    assert_eq!(s3["class"], "S3");
    assert!((s3["r0"].as_f64().unwrap() - 2.0).abs() < 1e-4);

    let flat = cvlab(&["classify", "--expr", "0", "--format", "csv"]);
    let text = String::from_utf8(flat.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("class,xi_infinity,x0,r0,volume_growth,ambiguous")
    );
    assert!(lines.next().unwrap().starts_with("Flat,"));
}

#[test]
fn series_csv_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = cvlab(&[
            "series",
            "--family",
            "poly",
            "--a",
            "0.5",
            "--mode",
            "sigma",
            "--k",
            "2",
            "--points",
            "20",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        let fit: Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
        assert!(fit["slope"].is_number());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("s,vol,integral,normalized\n"));
    assert_eq!(text.lines().count(), 21);
    // nothing but the two outputs is left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = cvlab(&[
        "series",
        "--expr",
        "t/(1+t)",
        "--k",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn report_verdicts() {
    let sigma = json(&cvlab(&[
        "report", "--family", "yau", "--n", "3", "--k", "2", "--mode", "sigma",
    ]));
    assert_eq!(sigma["fit"]["verdict"], "UnboundedGrowth");
    assert_eq!(sigma["mode"], "sigma");
    assert_eq!(sigma["k"], 2);

    let chern = json(&cvlab(&[
        "report", "--family", "yau", "--n", "3", "--k", "2", "--mode", "chern",
    ]));
    assert_eq!(chern["fit"]["verdict"], "Bounded");

    let scalar = json(&cvlab(&["report", "--expr", "t/(1+t)", "--mode", "scalar"]));
    assert_eq!(scalar["fit"]["verdict"], "Bounded");
}

#[test]
fn yau_requires_n_at_least_three() {
    assert_eq!(
        code(&cvlab(&[
            "report", "--family", "yau", "--n", "2", "--k", "2"
        ])),
        2
    );
}

#[test]
fn series_json_payload() {
    let v = json(&cvlab(&[
        "series", "--family", "poly", "--a", "0.5", "--mode", "chern", "--k", "2", "--points",
        "16", "--format", "json",
    ]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let last = rows.last().unwrap()["normalized"].as_f64().unwrap();
    assert!((last - 0.5).abs() < 0.02, "{last}");
    assert_eq!(v["fit"]["verdict"], "Bounded");
}

#[test]
fn chern_number_scales_with_xi_at_infinity() {
    let run = |a: &str| {
        let v = json(&cvlab(&["chern", "--family", "poly", "--a", a, "--n", "3"]));
        let (value, expected) = (
            v["value"].as_f64().unwrap(),
            v["expected"].as_f64().unwrap(),
        );
        assert!(
            (value - expected).abs() < 1e-6 * expected,
            "a={a}: {value} vs {expected}"
        );
        value
    };
    let ratio = run("0.25") / run("0.5");
    assert!((ratio - 0.125).abs() < 1e-6, "{ratio}");
}

#[test]
fn curvature_table_and_env_grid() {
    let o = Command::new(env!("CARGO_BIN_EXE_cvlab"))
        .args(["curvature-table", "--expr", "t/(1+t)"])
        .env("CVLAB_GRID", "64")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 8);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 64);
    let (r, s) = (
        header.iter().position(|h| *h == "r").unwrap(),
        header.len() - 1,
    );
    assert!(rows.windows(2).all(|w| w[1][r] > w[0][r]));
    assert!(rows.iter().all(|row| row[s].is_finite()));

    let bad = Command::new(env!("CARGO_BIN_EXE_cvlab"))
        .args(["curvature-table", "--expr", "t/(1+t)"])
        .env("CVLAB_GRID", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn profile_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    std::fs::write(&p, "kind = family\nfamily = poly\na = 0.75\n").unwrap();
    let v = json(&cvlab(&["classify", "--profile", p.to_str().unwrap()]));
    assert_eq!(v["class"], "S1");
    std::fs::write(&p, "kind = xi\nexpr = \"t/(1+t)\"\n").unwrap();
    assert_eq!(
        code(&cvlab(&["validate", "--profile", p.to_str().unwrap()])),
        0
    );
    assert_eq!(
        code(&cvlab(&[
            "validate",
            "--profile",
            dir.path().join("missing").to_str().unwrap()
        ])),
        1
    );
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn diffcurv(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffcurv"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = diffcurv(out, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .expect("column present");
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn gen_is_deterministic_and_writes_a_manifest() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(
            d.path(),
            &["gen", "--surface", "torus", "--n", "300", "--seed", "4"],
        );
    }
    assert_eq!(read(a.path(), "cloud.csv"), read(b.path(), "cloud.csv"));
    assert_eq!(
        read(a.path(), "curvature.csv"),
        read(b.path(), "curvature.csv")
    );
    assert_eq!(json(a.path(), "manifest.json")["command"], "gen");
}

#[test]
fn invalid_surface_and_usage_errors_have_distinct_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = diffcurv(
        d.path(),
        &["gen", "--surface", "torus", "--R", "1", "--r", "2"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(
        diffcurv(d.path(), &["gen", "--surface", "cube"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        diffcurv(d.path(), &["probe", "--objective", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(diffcurv(d.path(), &["probe"]).status.code(), Some(1));
}

#[test]
fn plane_has_zero_reference_curvature() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--surface", "plane", "--n", "200"]);
    assert!(column(&read(d.path(), "curvature.csv"), "gauss_curvature")
        .iter()
        .all(|v| v.parse::<f64>().unwrap() == 0.0));
}

#[test]
fn curvature_over_the_whole_cloud_is_uniform() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--surface", "sphere", "--n", "120"]);
    let cloud = d.path().join("cloud.csv");
    let reference = d.path().join("curvature.csv");
    let full = tempfile::tempdir().unwrap();
    ok(
        full.path(),
        &[
            "curvature",
            "--input",
            cloud.to_str().unwrap(),
            "--t",
            "1",
            "--r-quantile",
            "1.0",
        ],
    );
    let csv = read(full.path(), "curvature.csv");
    for v in column(&csv, "curvature") {
        assert!((v.parse::<f64>().unwrap() - 1.0 / 120.0).abs() < 1e-12);
    }
    let default = tempfile::tempdir().unwrap();
    ok(
        default.path(),
        &["curvature", "--input", cloud.to_str().unwrap()],
    );
    let csv = read(default.path(), "curvature.csv");
    assert!(column(&csv, "ball_size")
        .iter()
        .all(|b| b.parse::<usize>().unwrap() >= 1));
    assert!(default.path().join("curvature.json").exists());
    // a constant reference has no correlation
    let o = diffcurv(
        default.path(),
        &[
            "curvature",
            "--input",
            cloud.to_str().unwrap(),
            "--reference",
            reference.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reference_curvature_yields_biaxial_output() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "gen",
            "--surface",
            "ellipsoid",
            "--a",
            "1",
            "--b",
            "1.5",
            "--c",
            "0.5",
            "--n",
            "200",
        ],
    );
    let (cloud, reference) = (d.path().join("cloud.csv"), d.path().join("curvature.csv"));
    let o = tempfile::tempdir().unwrap();
    ok(
        o.path(),
        &[
            "curvature",
            "--input",
            cloud.to_str().unwrap(),
            "--reference",
            reference.to_str().unwrap(),
        ],
    );
    assert_eq!(read(o.path(), "biaxial.csv").lines().count(), 201);
    assert!(column(&read(o.path(), "correlation.csv"), "pearson")[0]
        .parse::<f64>()
        .unwrap()
        .is_finite());
}

#[test]
fn operator_writes_containers_and_coordinates() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--surface", "ellipsoid", "--n", "80"]);
    let cloud = d.path().join("cloud.csv");
    let o = tempfile::tempdir().unwrap();
    ok(
        o.path(),
        &[
            "operator",
            "--input",
            cloud.to_str().unwrap(),
            "--t",
            "2",
            "--coords",
            "4",
        ],
    );
    for name in [
        "operator.bin",
        "map.bin",
        "eigenvalues.csv",
        "coordinates.csv",
        "manifest.json",
    ] {
        assert!(o.path().join(name).exists(), "{name}");
    }
    let first = read(o.path(), "eigenvalues.csv");
    let lambda0: f64 = first
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda0 - 1.0).abs() < 1e-8);
}

#[test]
fn single_quadric_is_memorized_through_the_cli() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "train",
            "--quadrics",
            "1",
            "--epochs",
            "2000",
            "--alpha",
            "0",
        ],
    );
    let losses = column(&read(d.path(), "loss.csv"), "loss");
    assert_eq!(losses.len(), 2000);
    assert!(losses.last().unwrap().parse::<f64>().unwrap() < 1e-3);
}

#[test]
fn eval_reports_the_random_baseline() {
    let d = tempfile::tempdir().unwrap();
    let common = [
        "--quadrics",
        "12",
        "--points",
        "40",
        "--dims",
        "2,3",
        "--d-emb",
        "6",
    ];
    let mut args = vec!["corpus"];
    args.extend(common);
    ok(d.path(), &args);
    let corpus = d.path().join("corpus.json");
    let t = tempfile::tempdir().unwrap();
    ok(
        t.path(),
        &[
            "train",
            "--corpus",
            corpus.to_str().unwrap(),
            "--epochs",
            "3",
            "--encoder",
            "8",
            "--head",
            "8",
        ],
    );
    let model = t.path().join("model.bin");
    let e = tempfile::tempdir().unwrap();
    let mut args = vec!["eval", "--model", model.to_str().unwrap(), "--seed", "9"];
    args.extend(common);
    ok(e.path(), &args);
    let table = read(e.path(), "mse_table.csv");
    assert!(table
        .lines()
        .next()
        .unwrap()
        .split(',')
        .any(|h| h == "baseline_random"));
    assert_eq!(column(&table, "dim"), vec!["2", "3", "all"]);
    assert!(
        json(e.path(), "eval.json")["least_squares_mse"]
            .as_f64()
            .unwrap()
            < 1e-12
    );
}

#[test]
fn saddle_objective_is_reported_as_saddle() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["probe", "--objective", "saddle2d", "--estimator", "ls"],
    );
    assert_eq!(json(d.path(), "hessian.json")["signature"], "Saddle");
    for name in ["samples.csv", "spectrum_eigenvalues.csv", "spectrum.json"] {
        assert!(d.path().join(name).exists(), "{name}");
    }
}

#[test]
fn precomputed_samples_can_be_probed() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("rows.csv");
    let mut text = String::from("x0,x1,f\n0,0,1\n");
    for i in 0..40 {
        let (x, y) = ((i as f64 * 0.7).sin() * 0.1, (i as f64 * 1.3).cos() * 0.1);
        text += &format!("{x},{y},{}\n", 1.0 + 3.0 * x * x + x * y - 2.0 * y * y);
    }
    fs::write(&path, text).unwrap();
    let o = tempfile::tempdir().unwrap();
    ok(
        o.path(),
        &["probe", "--samples-csv", path.to_str().unwrap()],
    );
    let h = json(o.path(), "hessian.json");
    let h = &h["h"];
    assert!((h[0][0].as_f64().unwrap() - 6.0).abs() < 1e-8);
    assert!((h[0][1].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((h[1][1].as_f64().unwrap() + 4.0).abs() < 1e-8);
    assert_eq!(h.as_array().unwrap().len(), 2);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(
        a.path(),
        &["gen", "--surface", "sphere", "--n", "300", "--threads", "1"],
    );
    ok(
        b.path(),
        &["gen", "--surface", "sphere", "--n", "300", "--threads", "3"],
    );
    let cloud = a.path().join("cloud.csv");
    let (ca, cb) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(
        ca.path(),
        &[
            "curvature",
            "--input",
            cloud.to_str().unwrap(),
            "--threads",
            "1",
        ],
    );
    ok(
        cb.path(),
        &[
            "curvature",
            "--input",
            cloud.to_str().unwrap(),
            "--threads",
            "3",
        ],
    );
    assert_eq!(read(a.path(), "cloud.csv"), read(b.path(), "cloud.csv"));
    assert_eq!(
        read(ca.path(), "curvature.csv"),
        read(cb.path(), "curvature.csv")
    );
}

#[test]
fn spectrum_report_pools_probe_outputs() {
    let (p, q) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(
        p.path(),
        &["probe", "--objective", "alternating", "--dim", "4"],
    );
    ok(q.path(), &["probe", "--objective", "bowl", "--dim", "4"]);
    let r = tempfile::tempdir().unwrap();
    let (hp, hq) = (p.path().join("hessian.json"), q.path().join("hessian.json"));
    ok(
        r.path(),
        &[
            "report",
            "spectrum",
            "--inputs",
            hp.to_str().unwrap(),
            hq.to_str().unwrap(),
            "--labels",
            "saddle",
            "bowl",
        ],
    );
    let summary = read(r.path(), "spectrum_summary.csv");
    assert_eq!(column(&summary, "negative_count"), vec!["2", "0"]);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sampdens::cli::VerificationArtifact;
use sampdens::densities::{DensityReport, Verdict};
use sampdens::pointsets::parse_pointset;

const LATTICE: &str = "[model]\nsurface = plane\nweight = fock\nkernel = constant\n\
[points]\ngenerator = lattice\nspacing = 2\nwindow = ball 30\n\
[density]\nr_schedule = 5 10 20\ngrid = square 1 5\n\
[verification]\ndegrees = 10 20\nwindow = auto\n";

fn sampdens(dir: &Path, args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sampdens"));
    cmd.args(args).current_dir(dir).env_remove("SAMPDENS_THREADS");
    if let Some(t) = threads_env {
        cmd.env("SAMPDENS_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) {
    let out = sampdens(dir, args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn full_pipeline_and_concordance() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), LATTICE).unwrap();
    for cmd in ["generate", "analyze", "verify", "report"] {
        run_ok(dir.path(), &[cmd, "--config", "run.cfg", "--out", "out"]);
    }
    let out = dir.path().join("out");
    let set = parse_pointset(&fs::read_to_string(out.join("points.txt")).unwrap()).unwrap();
    assert!(set.len() > 100);
    let report = DensityReport::from_json(&fs::read_to_string(out.join("density_report.json")).unwrap()).unwrap();
    assert_eq!(report.verdict, Verdict::InterpolationSufficient);
    let csv = fs::read_to_string(out.join("density_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + report.r_schedule.len() * report.grid.len());
    let art = VerificationArtifact::from_json(&fs::read_to_string(out.join("verification.json")).unwrap()).unwrap();
    assert_eq!(art.experiments.iter().map(|r| r.degree).collect::<Vec<_>>(), vec![10, 20]);
    assert!(art.experiments.iter().all(|r| r.riesz_lower_bound > 0.01 && r.residual < 1e-8));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("verdict=InterpolationSufficient"), "{summary}");
    assert!(summary.contains("status=agree"), "{summary}");
}

#[test]
fn generated_points_round_trip_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("gen.cfg"), LATTICE).unwrap();
    run_ok(dir.path(), &["generate", "--config", "gen.cfg", "--out", "a"]);
    run_ok(dir.path(), &["analyze", "--config", "gen.cfg", "--out", "a"]);
    let from_file = LATTICE
        .replace("generator = lattice\nspacing = 2\n", "input = a/points.txt\n")
        .replace("window = auto", "window = config");
    fs::write(dir.path().join("file.cfg"), from_file).unwrap();
    run_ok(dir.path(), &["analyze", "--config", "file.cfg", "--out", "b"]);
    for f in ["density_report.json", "density_report.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn net_generation_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsurface = disk\nweight = bergman\n[points]\ngenerator = net\ndelta = 0.4\nseed = 9\nwindow = disk 0.9\n";
    fs::write(dir.path().join("net.cfg"), cfg).unwrap();
    run_ok(dir.path(), &["generate", "--config", "net.cfg", "--out", "a", "--threads", "1"]);
    let out = sampdens(dir.path(), &["generate", "--config", "net.cfg", "--out", "b"], Some("3"));
    assert!(out.status.success());
    run_ok(dir.path(), &["generate", "--config", "net.cfg", "--out", "c", "--seed", "10"]);
    let read = |d: &str| fs::read(dir.path().join(d).join("points.txt")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.cfg"), format!("{LATTICE}colour = red\n")).unwrap();
    let out = sampdens(p, &["analyze", "--config", "bad.cfg"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    assert_eq!(sampdens(p, &["analyze", "--config", "missing.cfg"], None).status.code(), Some(2));
    assert_eq!(sampdens(p, &["explode", "--config", "bad.cfg"], None).status.code(), Some(2));

    fs::write(p.join("ok.cfg"), LATTICE).unwrap();
    assert_eq!(sampdens(p, &["generate", "--config", "ok.cfg"], Some("many")).status.code(), Some(2));
    assert_eq!(sampdens(p, &["generate", "--config", "ok.cfg", "--threads", "0"], None).status.code(), Some(2));

    // A kernel table referenced but absent.
    fs::write(p.join("table.cfg"), LATTICE.replace("kernel = constant", "kernel = table(nope.txt)")).unwrap();
    assert_eq!(sampdens(p, &["analyze", "--config", "table.cfg"], None).status.code(), Some(2));
}

#[test]
fn negative_curvature_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // φ = −|z|²/2 has Δφ = −1/2.
    fs::write(p.join("w.txt"), "phi = 0 -0.5\nlap = -0.5\n").unwrap();
    fs::write(p.join("neg.cfg"), LATTICE.replace("weight = fock", "weight = custom(w.txt)")).unwrap();
    let out = sampdens(p, &["analyze", "--config", "neg.cfg"], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn custom_weight_and_table_kernel_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // φ = |z|²/2 written as a custom polynomial reproduces the Fock report.
    fs::write(p.join("w.txt"), "# Fock weight\nphi = 0 0.5\nlap = 0.5\n").unwrap();
    fs::write(p.join("k.txt"), "0 1\n100 1\n").unwrap();
    let custom = LATTICE.replace("weight = fock\nkernel = constant", "weight = custom(w.txt)\nkernel = table(k.txt)");
    fs::write(p.join("custom.cfg"), custom).unwrap();
    fs::write(p.join("fock.cfg"), LATTICE).unwrap();
    run_ok(p, &["analyze", "--config", "custom.cfg", "--out", "c"]);
    run_ok(p, &["analyze", "--config", "fock.cfg", "--out", "f"]);
    let load = |d: &str| DensityReport::from_json(&fs::read_to_string(p.join(d).join("density_report.json")).unwrap()).unwrap();
    let (c, f) = (load("c"), load("f"));
    assert_eq!(c.verdict, f.verdict);
    for (a, b) in c.sup_curve.iter().zip(&f.sup_curve).chain(c.inf_curve.iter().zip(&f.inf_curve)) {
        assert!((a - b).abs() < 1e-9 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn report_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), LATTICE).unwrap();
    run_ok(dir.path(), &["report", "--config", "run.cfg", "--out", "out"]);
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("density missing"));
    assert!(summary.lines().any(|l| l.trim() == "10 missing"));
    assert!(summary.lines().any(|l| l.trim() == "20 missing"));
    assert!(summary.contains("status=missing"));

    fs::write(dir.path().join("out/verification.json"), "{").unwrap();
    assert_eq!(sampdens(dir.path(), &["report", "--config", "run.cfg", "--out", "out"], None).status.code(), Some(2));
}

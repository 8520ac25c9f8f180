use std::fs;
use std::path::Path;

use domino_hydro::harness::{emit_outputs, run, ExperimentConfig, Mode};
use domino_hydro::Error;
use sha2::{Digest, Sha256};

fn small(mode: Mode, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"n": 16, "T": 0.25, "seeds": [0, 1, 2], "R": 0.5, "grid_spacing": 0.125,
            "pde": {{"dx": 0.03125}}, "profile": {{"kind": "bump", "amplitude": 1.0, "sigma": 0.5}}{extra}}}"#
    );
    ExperimentConfig::from_json(&text).unwrap().resolve(Some(mode)).unwrap()
}

fn sha256_hex(path: &Path) -> String {
    Sha256::digest(fs::read(path).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn reruns_give_identical_report_bytes() {
    let cfg = small(Mode::Compare, r#", "times": [0.125, 0.25], "pgm": true"#);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let (report, fields) = run(&cfg, Path::new(".")).unwrap();
        emit_outputs(&report, &fields, dir.path()).unwrap();
    }
    let [a, b] = &dirs;
    assert_eq!(sha256_hex(&a.path().join("report.json")), sha256_hex(&b.path().join("report.json")));
    for name in ["sn_mean_t0.csv", "pde_t1.csv", "pde_t1.pgm"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let text = fs::read_to_string(a.path().join("report.json")).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    assert!(!text.contains("seconds"));
}

#[test]
fn csv_rows_and_pgm_extrema_match_the_grid() {
    let cfg = small(Mode::Compare, r#", "pgm": true"#);
    let (report, fields) = run(&cfg, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&report, &fields, dir.path()).unwrap();
    let grid = report.compare.as_ref().unwrap().grid;
    let csv = fs::read_to_string(dir.path().join("sn_mean_t0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let values: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), grid.nx * grid.ny);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pgm = fs::read(dir.path().join("sn_mean_t0.pgm")).unwrap();
    let header = String::from_utf8_lossy(&pgm[..pgm.len().min(200)]).into_owned();
    assert!(header.starts_with("P5\n"));
    assert!(header.contains(&format!("# min {min}\n")), "{header}");
    assert!(header.contains(&format!("# max {max}\n")), "{header}");
    assert!(header.contains(&format!("{} {}\n255\n", grid.nx, grid.ny)));
}

#[test]
fn zero_horizon_reduces_to_initialization_error() {
    let n = 32;
    let text = format!(r#"{{"n": {n}, "T": 0.0, "seeds": [4], "R": 1.0, "profile": {{"kind": "affine", "rho": [0.5, -0.25]}}}}"#);
    let cfg = ExperimentConfig::from_json(&text).unwrap().resolve(Some(Mode::Compare)).unwrap();
    let (report, _) = run(&cfg, Path::new(".")).unwrap();
    let c = report.compare.unwrap();
    assert!(c.mean_sup_overall <= 5.0 / n as f64, "{}", c.mean_sup_overall);
    assert!(c.initialization_error <= 5.0 / n as f64);
}

#[test]
fn too_small_window_names_the_minimum() {
    let cfg = small(Mode::Compare, r#", "window": 6"#);
    match run(&cfg, Path::new(".")) {
        Err(Error::InvalidParameter(m)) => assert!(m.contains("half-width of at least"), "{m}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unwritable_output_reports_the_path() {
    let cfg = small(Mode::EquilibriumTable, "");
    let (report, fields) = run(&cfg, Path::new(".")).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    let err = emit_outputs(&report, &fields, &file.path().join("sub")).unwrap_err();
    assert!(err.to_string().contains(&file.path().display().to_string()), "{err}");
}

#[test]
fn simulate_reports_drift_for_affine_data() {
    let text = r#"{"n": 32, "T": 0.5, "seeds": [0, 1], "R": 0.5, "profile": {"kind": "affine", "rho": [0.0, 2.0]}}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap().resolve(Some(Mode::Simulate)).unwrap();
    let (report, fields) = run(&cfg, Path::new(".")).unwrap();
    let s = report.simulate.unwrap();
    // maximal vertical slope: every face drops in every shuffle
    assert_eq!(s.mean_even_drop_rate, 1.0);
    assert_eq!(s.affine_speed, Some(4.0));
    assert_eq!(s.drift_error, Some(0.0));
    assert_eq!(fields.len(), 2);
}

#[test]
fn table_and_pyramid_modes() {
    let cfg = small(Mode::EquilibriumTable, r#", "table_steps": 4, "table_weights": [0.5, 2.0]"#);
    let (report, fields) = run(&cfg, Path::new(".")).unwrap();
    let t = report.table.unwrap();
    assert_eq!(t.rows, 2 * 41);
    assert!(t.max_weight_residual < 1e-10);
    assert!(t.max_hessian_det < 0.0);
    assert_eq!(fields.len(), 1);

    let cfg = small(Mode::OraclePyramid, r#", "pyramid_radius": 6"#);
    let (report, _) = run(&cfg, Path::new(".")).unwrap();
    assert!(report.passed());
    let p = report.pyramid.unwrap();
    assert_eq!(p.entries, 85);
    assert!(p.admissible);
}

#[test]
fn exceeded_threshold_fails_the_report() {
    let cfg = small(Mode::Compare, r#", "threshold": 1e-9"#);
    let (report, _) = run(&cfg, Path::new(".")).unwrap();
    assert!(!report.passed());
}

#[test]
fn flat_affine_compare_error_and_trend() {
    let errors: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|n| {
            let text = format!(
                r#"{{"n": {n}, "T": 0.5, "R": 2.0, "projection_spacing": 0.00390625,
                    "profile": {{"kind": "affine", "rho": [0.0, 0.0]}}}}"#
            );
            let cfg = ExperimentConfig::from_json(&text).unwrap().resolve(Some(Mode::Compare)).unwrap();
            run(&cfg, Path::new(".")).unwrap().0.compare.unwrap().mean_sup_overall
        })
        .collect();
    assert!(errors[1] <= 0.08, "{errors:?}");
    for w in errors.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "{errors:?}");
    }
}

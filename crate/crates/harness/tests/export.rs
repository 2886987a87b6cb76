use qrefl_harness::config::Config;
use qrefl_harness::export::{export_heatmap, export_lines, potential_profile, reflection_distance_table};
use qrefl_harness::sweep::run_sweep;

fn records(dir: &std::path::Path) -> Vec<qrefl_harness::sweep::Record> {
    let mut c = Config::helium3();
    c.kinematics.velocity_m_s = 0.5;
    c.grid.n_rho = 128;
    c.grid.n_z = 256;
    c.propagation.t_final = 0.02;
    c.propagation.absorber_strength = Some(200.0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    run_sweep(&c, &[0.0, 2.0], &[0.0, 0.3], &dir.join("s.csv"), &pool).unwrap().records
}

#[test]
fn heatmap_and_lines_cover_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let recs = records(dir.path());
    let files = export_heatmap(&recs, None, None, dir.path(), "h").unwrap();
    let mat = std::fs::read_to_string(&files[1]).unwrap();
    let rows: Vec<&str> = mat.lines().collect();
    assert_eq!(rows[0], "2 0 2");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0 1 "));
    let files = export_lines(&recs, None, Some(&[0.3]), dir.path(), "l").unwrap();
    let dat = std::fs::read_to_string(&files[1]).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 2);
}

#[test]
fn absent_angle_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let recs = records(dir.path());
    let err = export_heatmap(&recs, None, Some(&[0.0, 0.15]), dir.path(), "h").unwrap_err();
    let msg = err.to_string();
    assert_eq!(err.exit_code(), 1);
    assert!(msg.contains("theta = 0.15 pi"), "{msg}");
    assert!(msg.contains("2 requested point(s)"), "{msg}");
    assert!(!msg.contains("theta = 0 pi"), "{msg}");
}

#[test]
fn profile_flattens_with_the_hole() {
    let text = potential_profile(&Config::helium3(), 0.0, &[0.0, 2.0, 8.0], (0.02, 5.0), 50).unwrap();
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(first[1] < first[2] && first[2] < first[3] && first[3] < 0.0, "{first:?}");
}

#[test]
fn reflection_distance_falls_with_speed() {
    let text = reflection_distance_table(&qrefl::AtomSpec::helium3(), &[0.5, 2.0, 10.0]).unwrap();
    let z: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(z[0] > z[1] && z[1] > z[2], "{z:?}");
}

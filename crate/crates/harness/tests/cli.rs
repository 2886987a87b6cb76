use std::path::Path;
use std::process::Command;

use qrefl::dump::read_dump;

fn qrefl(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qrefl"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .env("QREFL_WORKERS", "1")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SMALL: &str = r#"
[atom]
name = "He3"

[kinematics]
velocity_m_s = 0.5

[grid]
n_rho = 128
n_z = 128

[propagation]
t_final = 0.02
absorber_strength = 200.0
"#;

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qrefl(&["bogus"], dir.path()).0, 1);
    assert_eq!(qrefl(&["propagate", "--theta", "abc"], dir.path()).0, 1);
    assert_eq!(qrefl(&["propagate", "--grid", "100", "128"], dir.path()).0, 1);
    assert_eq!(qrefl(&["oracle1d", "--atom", "Na"], dir.path()).0, 1);
    assert_eq!(qrefl(&["--help"], dir.path()).0, 0);
}

#[test]
fn worker_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qrefl"))
        .args(["sweep", "--config", "c.toml", "--d-um", "0", "--theta-over-pi", "0"])
        .current_dir(dir.path())
        .env("QREFL_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_then_export() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let (code, _, err) = qrefl(&["sweep", "--config", "c.toml", "--d-um", "0,2", "--theta-over-pi", "0,0.2", "--out", "s.csv"], dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.starts_with("d_um,theta_over_pi,N_rho,N_z,epsilon_um,R_pos,R_mom,R_norm,norm_final,runtime_s,"));
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("s.csv.json").exists());

    let (code, out, err) = qrefl(&["export", "--figure", "heatmap", "--input", "s.csv", "--out-dir", "fig"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 2);
    let (code, _, err) = qrefl(&["export", "--figure", "lines", "--input", "s.csv", "--theta-over-pi", "0.3"], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("theta = 0.3 pi"), "{err}");
}

#[test]
fn partial_sweep_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let (code, _, err) = qrefl(
        &["sweep", "--config", "c.toml", "--r-um", "9.6", "--d-um", "0", "--theta-over-pi", "0,0.25", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("d_um,theta_over_pi,message"), "{err}");
}

#[test]
fn propagate_writes_dumps_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let (code, out, err) = qrefl(
        &["propagate", "--config", "c.toml", "--theta", "0.1pi", "--diameter-um", "2", "--snapshots", "0.01", "--out", "run"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("R_pos,R_mom,norm_final"));
    let run = dir.path().join("run");
    let d = read_dump(std::fs::File::open(run.join("final.bin")).unwrap()).unwrap();
    assert_eq!((d.n_rho, d.n_z, d.planes.len()), (128, 128, 2));
    assert!((d.time - 0.02).abs() < 1e-12);
    let s = read_dump(std::fs::File::open(run.join("snapshot_0.bin")).unwrap()).unwrap();
    assert!((s.time - 0.01).abs() < 1e-12);
    let hist = std::fs::read_to_string(run.join("norm_history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 1 + 4);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["atom"]["name"], "He3");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["units"]["energy_nev"].as_f64().unwrap() > 0.0138);
}

#[test]
fn potential_dump_formats() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = qrefl(&["potential-dump", "--grid", "64", "64", "--diameter-um", "2", "--out", "pot"], dir.path());
    assert_eq!(code, 0, "{err}");
    let bytes = std::fs::read(dir.path().join("pot.bin")).unwrap();
    assert_eq!(&bytes[..8], b"QREFLDMP");
    assert_eq!(bytes.len(), 64 + 2 * 64 * 64 * 8);
    let csv = std::fs::read_to_string(dir.path().join("pot_VC.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("rho_um,z_um,V_natural"));
    assert_eq!(csv.lines().count(), 1 + 64 * 64);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap().is_finite()));
}

#[test]
fn oracle_and_badlands_print_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = qrefl(&["oracle1d", "--atom", "He3", "--velocity", "2", "--epsilon-um", "0.01"], dir.path());
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert!((row[3].parse::<f64>().unwrap() - 0.011035).abs() < 1e-5);
    let (code, out, _) = qrefl(&["badlands", "--atom", "Na", "--c3-j", "1.2207e-48", "--velocities", "0.1"], dir.path());
    assert_eq!(code, 0);
    let z: f64 = out.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((80.0..160.0).contains(&z));
}

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use qrefl::dump::{field_dump, write_density_csv, write_dump, Dump};
use qrefl::field::make_grid;
use qrefl::oracle1d::{badlands_peak_check, numerov_reflectivity_with, far_point, plate_problem, NumerovOptions};
use qrefl::potential::{bare_potential, extended_potential, reflection_distance, sample_on_grid};

use qrefl_harness::config::{parse_theta, Config};
use qrefl_harness::convergence::{convergence_csv, convergence_study, parse_convergence_csv};
use qrefl_harness::error::{HarnessError, Result, EXIT_INVALID, EXIT_OK};
use qrefl_harness::export::{self, Figure};
use qrefl_harness::metadata::Metadata;
use qrefl_harness::run::{absorber_strength, simulate, worker_pool, RunSpec};
use qrefl_harness::sweep::{failure_report, read_csv, run_sweep};

#[derive(Parser)]
#[command(name = "qrefl", version, about = "Quantum reflection of atoms from a plate with a circular hole")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; each flag overrides the config file.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Atom name (He3, Na, or any name with --mass-amu and --c3-j).
    #[arg(long)]
    atom: Option<String>,
    #[arg(long)]
    mass_amu: Option<f64>,
    /// Dispersion coefficient, J m^3.
    #[arg(long = "c3-j")]
    c3_j: Option<f64>,
    /// Incident speed, m/s.
    #[arg(long)]
    velocity: Option<f64>,
    #[arg(long)]
    sigma_um: Option<f64>,
    #[arg(long)]
    r_um: Option<f64>,
    #[arg(long)]
    epsilon_um: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["N_RHO", "N_Z"])]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    extent_um: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tf: Option<f64>,
    #[arg(long)]
    absorber_width: Option<f64>,
    /// Natural energy; calibrated when neither this nor the config gives one.
    #[arg(long)]
    absorber_strength: Option<f64>,
    /// Use the quadratic continuation inside the hole instead of outside it.
    #[arg(long)]
    verbatim_continuation: bool,
}

impl Common {
    fn resolve(&self) -> Result<Config> {
        let mut cfg = match (&self.config, self.atom.as_deref()) {
            (Some(p), _) => {
                let mut c = Config::load(p)?;
                if let Some(a) = &self.atom {
                    c.atom.name = a.clone();
                }
                c
            }
            (None, None) => Config::helium3(),
            (None, Some(a)) => match qrefl::AtomSpec::from_catalog(a).map(|s| s.name) {
                Some(n) if n == "He3" => Config::helium3(),
                Some(n) if n == "Na" => Config::sodium(self.c3_j.ok_or_else(|| {
                    HarnessError::Config("Na has no built-in C3; pass --c3-j or a config file".into())
                })?),
                _ => {
                    let mut c = Config::helium3();
                    c.atom.name = a.to_string();
                    c
                }
            },
        };
        if let Some(m) = self.mass_amu {
            cfg.atom.mass_amu = Some(m);
        }
        if let Some(c) = self.c3_j {
            cfg.atom.c3_j = Some(c);
        }
        macro_rules! set {
            ($flag:ident => $($dst:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    cfg.$($dst)+ = v;
                }
            };
        }
        set!(velocity => kinematics.velocity_m_s);
        set!(sigma_um => kinematics.sigma_um);
        set!(r_um => kinematics.r_um);
        set!(epsilon_um => potential.epsilon_um);
        set!(extent_um => grid.extent_um);
        set!(dt => propagation.dt);
        set!(tf => propagation.t_final);
        set!(absorber_width => propagation.absorber_width);
        if let Some(s) = self.absorber_strength {
            cfg.propagation.absorber_strength = Some(s);
        }
        if let Some(g) = &self.grid {
            cfg.grid.n_rho = g[0];
            cfg.grid.n_z = g[1];
        }
        if self.verbatim_continuation {
            cfg.potential.invert_hole_continuation = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn theta_arg(s: &str) -> std::result::Result<f64, String> {
    parse_theta(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Sample V and V_C on the grid; writes CSV and binary dumps.
    PotentialDump {
        #[command(flatten)]
        common: Common,
        /// Angle in radians or as a multiple of pi ("0.2pi").
        #[arg(long, default_value = "0", value_parser = theta_arg)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        diameter_um: f64,
        /// Output prefix; writes <out>_V.csv, <out>_VC.csv, <out>.bin and <out>.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reflection distance z_R at one or more speeds.
    Badlands {
        #[command(flatten)]
        common: Common,
        /// Comma-separated speeds, m/s; defaults to the configured speed.
        #[arg(long, value_delimiter = ',')]
        velocities: Option<Vec<f64>>,
        /// Write the coarse Q(z) scan of the first speed here.
        #[arg(long)]
        scan: Option<PathBuf>,
    },
    /// 1D Numerov reflectivity and the badlands overlap check.
    Oracle1d {
        #[command(flatten)]
        common: Common,
    },
    /// One 2D propagation.
    Propagate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0", value_parser = theta_arg)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        diameter_um: f64,
        /// Comma-separated snapshot times, natural units.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Sweep over hole diameter and angle with checkpointing.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated diameters, µm.
        #[arg(long, value_delimiter = ',')]
        d_um: Option<Vec<f64>>,
        /// Comma-separated angles as fractions of pi.
        #[arg(long, value_delimiter = ',')]
        theta_over_pi: Option<Vec<f64>>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// R against N_z at fixed N_rho.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0", value_parser = theta_arg)]
        theta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,2,8")]
        d_um: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.005")]
        epsilon_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2048,4096,8192")]
        nz_list: Vec<usize>,
        #[arg(long, default_value_t = 128)]
        n_rho: usize,
        #[arg(long, default_value = "convergence.csv")]
        out: PathBuf,
    },
    /// Plot data from a sweep or convergence CSV.
    Export {
        #[command(flatten)]
        common: Common,
        /// lines, heatmap, potential-profile, reflection-distance or convergence.
        #[arg(long)]
        figure: Figure,
        /// Sweep CSV (lines, heatmap) or convergence CSV (convergence).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Base name of the written files; defaults to the figure name.
        #[arg(long)]
        stem: Option<String>,
        /// Comma-separated diameters, µm (lines, heatmap, potential-profile).
        #[arg(long, value_delimiter = ',')]
        d_um: Option<Vec<f64>>,
        /// Comma-separated angles as fractions of pi (lines, heatmap).
        #[arg(long, value_delimiter = ',')]
        theta_over_pi: Option<Vec<f64>>,
        /// Comma-separated speeds, m/s (reflection-distance).
        #[arg(long, value_delimiter = ',')]
        velocities: Option<Vec<f64>>,
        #[arg(long, default_value = "0", value_parser = theta_arg)]
        theta: f64,
    },
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| HarnessError::io(path, e))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn potential_dump(common: &Common, theta: f64, d: f64, out: &Path) -> Result<()> {
    let cfg = common.resolve()?;
    let c3 = cfg.c3_natural()?;
    let params = qrefl::PotentialParams::new(theta, d, cfg.potential.epsilon_um, c3)?
        .with_inverted_hole_continuation(cfg.potential.invert_hole_continuation);
    let e = cfg.grid.extent_um;
    let grid = make_grid((e, e), cfg.grid.n_rho, cfg.grid.n_z, d)?;
    let bare = sample_on_grid(&grid, |rho, z| if z > 0.0 { bare_potential(rho, z, &params).unwrap_or(f64::NAN) } else { f64::NAN });
    let extended = sample_on_grid(&grid, |rho, z| extended_potential(rho, z, &params));
    for (suffix, values) in [("_V.csv", &bare), ("_VC.csv", &extended)] {
        let path = with_suffix(out, suffix);
        qrefl::dump::write_scalar_csv(create(&path)?, &grid, values, "V_natural").map_err(|e| HarnessError::io(&path, e))?;
    }
    let bin = with_suffix(out, ".bin");
    let dump = Dump {
        n_rho: grid.n_rho,
        n_z: grid.n_z,
        extent_rho: grid.extent_rho,
        extent_z: grid.extent_z,
        time: 0.0,
        planes: vec![bare, extended],
    };
    write_dump(create(&bin)?, &dump).map_err(|e| HarnessError::io(&bin, e))?;
    let extra = serde_json::json!({ "theta": theta, "d_um": d, "planes": ["V", "V_C"] });
    Metadata::new("potential-dump", &cfg, extra)?.write(&with_suffix(out, ".json"))
}

fn badlands(common: &Common, velocities: Option<&[f64]>, scan: Option<&Path>) -> Result<()> {
    let cfg = common.resolve()?;
    let atom = cfg.atom_spec()?;
    let vs = velocities.map_or_else(|| vec![cfg.kinematics.velocity_m_s], |v| v.to_vec());
    print!("{}", export::reflection_distance_table(&atom, &vs)?);
    if let Some(path) = scan {
        let r = reflection_distance(&atom, vs[0])?;
        let mut s = String::from("z_um,Q\n");
        for (z, q) in &r.scan {
            s.push_str(&format!("{z},{q}\n"));
        }
        std::fs::write(path, s).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}

fn oracle1d(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let atom = cfg.atom_spec()?;
    let v = cfg.kinematics.velocity_m_s;
    let eps = cfg.potential.epsilon_um;
    let (slice, e0) = plate_problem(&atom, v)?;
    let z_far = far_point(&slice, e0, eps)?;
    let rep = numerov_reflectivity_with(&slice, e0, eps, z_far, &NumerovOptions::default())?;
    let b = badlands_peak_check(&atom, v)?;
    println!("atom,v_m_s,epsilon_um,R_1D,T_1D,R_coarse,R_fine,z_R_nm,z_peak_nm,interval_lo_nm,interval_hi_nm,overlap");
    println!(
        "{},{v},{eps},{},{},{},{},{},{},{},{},{}",
        atom.name,
        rep.r,
        rep.t,
        rep.r_coarse,
        rep.r_fine,
        b.z_r * 1e3,
        b.z_peak * 1e3,
        b.interval.0 * 1e3,
        b.interval.1 * 1e3,
        b.overlap
    );
    Ok(())
}

fn propagate(common: &Common, theta: f64, d: f64, snapshots: Option<&[f64]>, out: &Path) -> Result<()> {
    let mut cfg = common.resolve()?;
    if let Some(s) = snapshots {
        cfg.propagation.snapshots = s.to_vec();
    }
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let strength = absorber_strength(&cfg)?;
    let spec = RunSpec::new(&cfg, d, theta, strength)?;
    let run = simulate(&spec)?;
    let p = &run.propagation;
    let path = out.join("final.bin");
    write_dump(create(&path)?, &field_dump(&p.final_field)).map_err(|e| HarnessError::io(&path, e))?;
    let path = out.join("final_density.csv");
    write_density_csv(create(&path)?, &p.final_field, 512).map_err(|e| HarnessError::io(&path, e))?;
    for (i, snap) in p.snapshots.iter().enumerate() {
        let path = out.join(format!("snapshot_{i}.bin"));
        write_dump(create(&path)?, &field_dump(snap)).map_err(|e| HarnessError::io(&path, e))?;
    }
    let mut hist = String::from("step,t,norm\n");
    for (i, n) in p.norm_history.iter().enumerate() {
        hist.push_str(&format!("{i},{},{n}\n", i as f64 * spec.dt));
    }
    let path = out.join("norm_history.csv");
    std::fs::write(&path, hist).map_err(|e| HarnessError::io(&path, e))?;
    let extra = serde_json::json!({
        "theta": theta,
        "d_um": d,
        "absorber_strength": strength,
        "n_steps": p.n_steps,
        "t_final_reached": p.t_final,
        "t_final_adjustment": p.t_final_adjustment,
        "snapshot_times": p.snapshots.iter().map(|s| s.time).collect::<Vec<_>>(),
        "R_pos": run.r_pos,
        "R_mom": run.r_mom,
        "norm_final": run.norm_final,
        "edge_ratio": run.edge_ratio,
        "runtime_s": run.runtime_s,
    });
    Metadata::new("propagate", &cfg, extra)?.write(&out.join("metadata.json"))?;
    println!("R_pos,R_mom,norm_final,edge_ratio,runtime_s");
    println!("{},{},{},{},{}", run.r_pos, run.r_mom, run.norm_final, run.edge_ratio, run.runtime_s);
    Ok(())
}

fn sweep(common: &Common, d: Option<&[f64]>, theta: Option<&[f64]>, out: &Path) -> Result<()> {
    let mut cfg = common.resolve()?;
    if let Some(d) = d {
        cfg.sweep.d_um = d.to_vec();
    }
    if let Some(t) = theta {
        cfg.sweep.theta_over_pi = t.to_vec();
    }
    cfg.validate()?;
    let pool = worker_pool()?;
    let outcome = run_sweep(&cfg, &cfg.sweep.d_um, &cfg.sweep.theta_over_pi, out, &pool)?;
    let extra = serde_json::json!({
        "rows": outcome.records.len(),
        "resumed_rows": outcome.resumed,
        "failed_rows": outcome.failures.len(),
    });
    Metadata::new("sweep", &cfg, extra)?.write(&with_suffix(out, ".json"))?;
    info!("wrote {} rows to {}", outcome.records.len(), out.display());
    if !outcome.failures.is_empty() {
        eprint!("{}", failure_report(&outcome.failures));
    }
    outcome.check()
}

#[allow(clippy::too_many_arguments)]
fn converge(common: &Common, theta: f64, d: &[f64], eps: &[f64], nz: &[usize], n_rho: usize, out: &Path) -> Result<()> {
    let cfg = common.resolve()?;
    let pool = worker_pool()?;
    let series = convergence_study(&cfg, theta, d, eps, nz, n_rho, &pool)?;
    std::fs::write(out, convergence_csv(&series)).map_err(|e| HarnessError::io(out, e))?;
    let extra = serde_json::json!({ "theta": theta, "d_um": d, "epsilon_um": eps, "N_z": nz, "N_rho": n_rho });
    Metadata::new("converge", &cfg, extra)?.write(&with_suffix(out, ".json"))
}

#[allow(clippy::too_many_arguments)]
fn export_cmd(
    common: &Common,
    figure: Figure,
    input: Option<&Path>,
    dir: &Path,
    stem: Option<&str>,
    d: Option<&[f64]>,
    theta_over_pi: Option<&[f64]>,
    velocities: Option<&[f64]>,
    theta: f64,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let need_input = || input.ok_or_else(|| HarnessError::Config("this figure needs --input".into()));
    let written = match figure {
        Figure::Lines => export::export_lines(&read_csv(need_input()?)?, d, theta_over_pi, dir, stem.unwrap_or("lines"))?,
        Figure::Heatmap => export::export_heatmap(&read_csv(need_input()?)?, d, theta_over_pi, dir, stem.unwrap_or("heatmap"))?,
        Figure::PotentialProfile => {
            let cfg = common.resolve()?;
            let d = d.map_or_else(|| vec![0.0, 4.0, 8.0], |d| d.to_vec());
            let text = export::potential_profile(&cfg, theta, &d, (1e-3, 10.0), 400)?;
            vec![export::write_text(dir, &format!("{}.csv", stem.unwrap_or("potential_profile")), text)?]
        }
        Figure::ReflectionDistance => {
            let cfg = common.resolve()?;
            let v = velocities.map_or_else(|| vec![0.05, 0.1, 0.5, 2.0, 10.0], |v| v.to_vec());
            let text = export::reflection_distance_table(&cfg.atom_spec()?, &v)?;
            vec![export::write_text(dir, &format!("{}.csv", stem.unwrap_or("reflection_distance")), text)?]
        }
        Figure::Convergence => {
            let path = need_input()?;
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let series = parse_convergence_csv(&text)?;
            vec![export::write_text(dir, &format!("{}.dat", stem.unwrap_or("convergence")), export::convergence_blocks(&series))?]
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PotentialDump { common, theta, diameter_um, out } => potential_dump(&common, theta, diameter_um, &out),
        Command::Badlands { common, velocities, scan } => badlands(&common, velocities.as_deref(), scan.as_deref()),
        Command::Oracle1d { common } => oracle1d(&common),
        Command::Propagate { common, theta, diameter_um, snapshots, out } => {
            propagate(&common, theta, diameter_um, snapshots.as_deref(), &out)
        }
        Command::Sweep { common, d_um, theta_over_pi, out } => {
            sweep(&common, d_um.as_deref(), theta_over_pi.as_deref(), &out)
        }
        Command::Converge { common, theta, d_um, epsilon_list, nz_list, n_rho, out } => {
            converge(&common, theta, &d_um, &epsilon_list, &nz_list, n_rho, &out)
        }
        Command::Export { common, figure, input, out_dir, stem, d_um, theta_over_pi, velocities, theta } => export_cmd(
            &common,
            figure,
            input.as_deref(),
            &out_dir,
            stem.as_deref(),
            d_um.as_deref(),
            theta_over_pi.as_deref(),
            velocities.as_deref(),
            theta,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `qrotor` command line: argument parsing, subcommand dispatch and output.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_config, Angle, InPlaneAcceleration, OutputFormat, Resolved, RunConfig, ShiftSection};
use crate::error::{invalid, Error, Result};
use crate::optics::harmonic_decomposition;
use crate::output::{emit, json_text, to_json_value, Table};
use crate::raman::effective_coupling;
use crate::raman::fit::{fit_lineshape, FitResult};
use crate::raman::lineshape::{calibrate_quadratic_scale, ensemble, uniform_grid, Calibration, RabiDrive, ShiftModel};
use crate::sensor::{rotation_scan, sensor_budget, tilt_compensation};
use crate::spectrum::assemble_spectrum;
use crate::units::{joule_to_kelvin, HBAR};

#[derive(Debug, Parser)]
#[command(name = "qrotor", version, about = "Quantum-rotor ring-lattice gyroscope model")]
pub struct Cli {
    /// JSON run configuration; every field has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state level table of ring j = 0.
    Spectrum,
    /// Ensemble Raman lineshape and its three-parameter fit.
    Lineshape {
        /// Rings j = -jmax..=jmax.
        #[arg(long)]
        jmax: Option<u32>,
    },
    /// Six Raman line frequencies against rotation rate.
    RotationScan {
        /// Comma-separated rotation rates in rad/s, replacing the configured range.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        omega: Option<Vec<f64>>,
    },
    /// Rotation uncertainty channels.
    Budget {
        /// Sets the ring count to 2·jmax + 1.
        #[arg(long)]
        jmax: Option<u32>,
    },
    /// Lattice reorientation under in-plane acceleration.
    Tilt {
        /// In-plane acceleration magnitude, m/s².
        #[arg(long, allow_negative_numbers = true)]
        accel: Option<f64>,
        /// Azimuth of the in-plane acceleration, e.g. `30deg` or `0.5rad`.
        #[arg(long, requires = "accel")]
        azimuth: Option<Angle>,
        /// Rotation vector Ωx,Ωy,Ωz in rad/s.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        omega: Option<Vec<f64>>,
    },
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput { .. } | Error::Config(_) | Error::UnsupportedMode(_) => 2,
        Error::Convergence { .. } | Error::FitFailure { .. } => 3,
        Error::Validity { .. } => 4,
        Error::Io(_) => 1,
    }
}

/// Output of one subcommand: a CSV table and a JSON document. The caller
/// picks one; `side` is extra JSON written next to a CSV file.
struct Artifact {
    table: Table,
    json: Value,
    side: Option<Value>,
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?.0,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, &cli)?;
    let resolved = cfg.resolve()?;
    let threads = cli.parallel.or(cfg.parallelism);
    if threads == Some(0) {
        return Err(invalid("--parallel", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let artifact = pool.install(|| dispatch(&cli.command, &cfg, &resolved))?;

    let format = cli.format.unwrap_or(cfg.output_format);
    let out = cli.out.clone().or(cfg.output_path.clone());
    match format {
        OutputFormat::Json => emit(out.as_deref(), json_text(&artifact.json).as_bytes()),
        OutputFormat::Csv => {
            emit(out.as_deref(), &artifact.table.to_csv()?)?;
            if let Some(side) = &artifact.side {
                match &out {
                    Some(p) => std::fs::write(side_path(p), json_text(side))?,
                    None => eprint!("{}", json_text(side)),
                }
            }
            Ok(())
        }
    }
}

/// `out.csv` → `out.fit.json`.
pub fn side_path(p: &Path) -> PathBuf {
    p.with_extension("fit.json")
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Lineshape { jmax: Some(j) } => cfg.lineshape.j_max = *j,
        Command::Budget { jmax: Some(j) } => {
            cfg.sensor.ring_count = j
                .checked_mul(2)
                .and_then(|x| x.checked_add(1))
                .ok_or_else(|| invalid("--jmax", "too large"))?;
        }
        Command::Tilt { accel, azimuth, omega } => {
            if let Some(a) = accel {
                cfg.tilt.acceleration_in_plane = Some(InPlaneAcceleration {
                    magnitude: *a,
                    azimuth: azimuth.unwrap_or(Angle(0.0)),
                });
            }
            if let Some(w) = omega {
                if w.len() != 3 {
                    return Err(invalid("--omega", format!("expected 3 components, got {}", w.len())));
                }
                cfg.tilt.angular_velocity = [w[0], w[1], w[2]];
            }
        }
        _ => {}
    }
    Ok(())
}

fn dispatch(cmd: &Command, cfg: &RunConfig, r: &Resolved) -> Result<Artifact> {
    match cmd {
        Command::Spectrum => spectrum(cfg, r),
        Command::Lineshape { .. } => lineshape(cfg, r),
        Command::RotationScan { omega } => scan(cfg, r, omega.as_deref()),
        Command::Budget { .. } => budget(cfg, r),
        Command::Tilt { .. } => tilt(cfg),
    }
}

fn echo(cfg: &RunConfig) -> Result<Value> {
    to_json_value(cfg)
}

fn spectrum(cfg: &RunConfig, r: &Resolved) -> Result<Artifact> {
    let s = &cfg.spectrum;
    let spec = assemble_spectrum(&r.beam, &r.species, s.limits(), &s.solver(), s.threshold)?;
    if s.fatal_inequalities && !spec.inequalities_ok {
        let g = spec.gaps;
        return Err(Error::Validity {
            quantity: "min(eps_z/eps_r, eps_r/eps_l)^-1".into(),
            ratio: (g.radial / g.axial).max(g.orbital / g.radial),
            limit: 1.0 / s.threshold,
        });
    }
    let geometry = harmonic_decomposition(&r.beam, &r.species, 0)?.geometry;
    let mut table = Table::new(&["n_z", "n_r", "m_ell", "energy_J", "energy_kB_nK", "degeneracy"]);
    let mut levels = Vec::with_capacity(spec.levels.len());
    for l in &spec.levels {
        let nk = joule_to_kelvin(l.energy) * 1e9;
        table.push(vec![
            l.qn.n_z.into(),
            l.qn.n_r.into(),
            l.qn.m_ell.into(),
            l.energy.into(),
            nk.into(),
            l.degeneracy.into(),
        ]);
        levels.push(json!({
            "n_z": l.qn.n_z,
            "n_r": l.qn.n_r,
            "m_ell": l.qn.m_ell,
            "energy_J": l.energy,
            "energy_kB_nK": nk,
            "degeneracy": l.degeneracy,
        }));
    }
    let json = json!({
        "config": echo(cfg)?,
        "geometry": geometry,
        "ground_energy_J": spec.ground_energy,
        "gaps_J": spec.gaps,
        "inequalities_ok": spec.inequalities_ok,
        "levels": levels,
    });
    Ok(Artifact {
        table,
        json: to_json_value(&json)?,
        side: None,
    })
}

#[derive(Serialize)]
struct FitJson {
    #[serde(rename = "amplitude_A")]
    amplitude_a: f64,
    delta_0: f64,
    #[serde(rename = "Omega_R_eff")]
    omega_r_eff: f64,
    rms_residual: f64,
    #[serde(rename = "delta_0_over_OmegaR")]
    delta_0_rel: f64,
    #[serde(rename = "Omega_R_eff_over_OmegaR")]
    omega_r_eff_rel: f64,
    iterations: usize,
}

impl FitJson {
    fn new(f: &FitResult, omega_r: f64) -> Self {
        FitJson {
            amplitude_a: f.amplitude_a,
            delta_0: f.delta_0,
            omega_r_eff: f.omega_r_eff,
            rms_residual: f.rms_residual,
            delta_0_rel: f.delta_0 / omega_r,
            omega_r_eff_rel: f.omega_r_eff / omega_r,
            iterations: f.iterations,
        }
    }
}

fn lineshape(cfg: &RunConfig, r: &Resolved) -> Result<Artifact> {
    let sec = &cfg.lineshape;
    let (omega_r, kick_l) = match (sec.omega_r, &r.raman) {
        (Some(w), _) => (w, sec.kick_oam_l),
        (None, Some(raman)) => (effective_coupling(raman, &r.species)?.omega_r, raman.kick_oam_l),
        (None, None) => return Err(invalid("lineshape.omega_r", "null requires a `raman` section")),
    };
    let drive = RabiDrive {
        omega_r,
        tau: sec.tau.unwrap_or(std::f64::consts::PI / omega_r),
        kick_oam_l: kick_l,
    };
    let mut calibration: Option<Calibration> = None;
    let model = match sec.shift.fixed(omega_r) {
        Some(m) => m,
        None => {
            let ShiftSection::CalibratedQuadratic { target_delta_max } = sec.shift else {
                unreachable!("only calibration lacks a fixed model")
            };
            let c = calibrate_quadratic_scale(&drive, sec.j_max, target_delta_max * omega_r)?;
            if !c.reached {
                eprintln!(
                    "warning: peak position {:.4} Omega_R not reached on the principal branch; using closest scale (peak at {:.4} Omega_R)",
                    target_delta_max,
                    c.delta_max / omega_r
                );
            }
            calibration = Some(c);
            ShiftModel::Quadratic { scale: c.scale }
        }
    };
    let ens = ensemble(&r.beam, &r.species, &drive, sec.j_max, &model)?;
    let grid = uniform_grid(omega_r, sec.grid.lo, sec.grid.hi, sec.grid.points);
    let ls = ens.sample(&grid, sec.j_max)?;
    let (d_max, p_max) = ens.peak(grid[0], *grid.last().expect("grid has points"));
    let fit = fit_lineshape(&ls, sec.fit)?;
    let fit_json = to_json_value(&FitJson::new(&fit, omega_r))?;

    let mut table = Table::new(&["delta_over_OmegaR", "probability"]);
    let mut curve = Vec::with_capacity(grid.len());
    for (d, p) in ls.delta_grid.iter().zip(&ls.probability) {
        table.push(vec![(d / omega_r).into(), (*p).into()]);
        curve.push(json!({"delta_over_OmegaR": d / omega_r, "probability": p}));
    }
    let summary = json!({
        "Omega_R": omega_r,
        "tau": drive.tau,
        "j_max": sec.j_max,
        "shift_model": model,
        "calibration": calibration.map(|c| json!({
            "scale": c.scale,
            "scale_over_OmegaR": c.scale / omega_r,
            "delta_max_over_OmegaR": c.delta_max / omega_r,
            "P_max": c.p_max,
            "reached": c.reached,
        })),
        "peak": {"delta_max_over_OmegaR": d_max / omega_r, "P_max": p_max},
        "fit": fit_json,
    });
    let side = to_json_value(&summary)?;
    let mut json = json!({"config": echo(cfg)?});
    if let (Value::Object(o), Value::Object(s)) = (&mut json, &side) {
        o.extend(s.clone());
        o.insert("curve".into(), Value::Array(curve));
    }
    Ok(Artifact {
        table,
        json: to_json_value(&json)?,
        side: Some(side),
    })
}

fn line_id(m_ell: i32, zeta: i32) -> String {
    format!("({m_ell:+};{zeta:+})")
}

fn scan(cfg: &RunConfig, r: &Resolved, omegas: Option<&[f64]>) -> Result<Artifact> {
    let omegas = match omegas {
        Some(w) => {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(invalid("--omega", "values must be finite"));
            }
            w.to_vec()
        }
        None => cfg.rotation_scan.omegas()?,
    };
    let pts = rotation_scan(r.sensor.kick_oam_l, r.sensor.omega_0, &omegas)?;
    let mut table = Table::new(&["Omega", "line_id", "frequency"]);
    let mut lines = Vec::with_capacity(pts.len());
    for p in &pts {
        table.push(vec![
            p.omega.into(),
            line_id(p.m_ell, p.zeta).into(),
            p.frequency.into(),
        ]);
        lines.push(json!({
            "Omega": p.omega,
            "line_id": line_id(p.m_ell, p.zeta),
            "m_ell": p.m_ell,
            "zeta": p.zeta,
            "frequency": p.frequency,
        }));
    }
    let json = json!({"config": echo(cfg)?, "lines": lines});
    Ok(Artifact {
        table,
        json: to_json_value(&json)?,
        side: None,
    })
}

fn budget(cfg: &RunConfig, r: &Resolved) -> Result<Artifact> {
    let b = sensor_budget(&r.sensor)?;
    let rows: [(&str, f64); 9] = [
        ("dOmega_freq", b.d_omega_freq),
        ("dOmega_rabi", b.d_omega_rabi),
        ("dOmega_shot", b.d_omega_shot),
        ("dphi_omega", b.rabi.phase),
        ("deps_omega_J", b.rabi.energy),
        ("deps_omega_over_hbar", b.rabi.energy / HBAR),
        ("dphi_I", b.shot.phase),
        ("deps_I_J", b.shot.energy),
        ("deps_I_over_hbar", b.shot.energy / HBAR),
    ];
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        table.push(vec![k.into(), v.into()]);
    }
    table.push(vec!["deps_omega_over_C".into(), b.rabi_energy_over_c.into()]);
    let json = json!({
        "config": echo(cfg)?,
        "inputs": r.sensor,
        "dOmega_freq": b.d_omega_freq,
        "dOmega_rabi": b.d_omega_rabi,
        "dOmega_shot": b.d_omega_shot,
        "intermediate": {
            "dphi_omega": b.rabi.phase,
            "deps_omega_J": b.rabi.energy,
            "deps_omega_over_hbar": b.rabi.energy / HBAR,
            "dphi_I": b.shot.phase,
            "deps_I_J": b.shot.energy,
            "deps_I_over_hbar": b.shot.energy / HBAR,
            "deps_omega_over_C": b.rabi_energy_over_c,
        },
    });
    Ok(Artifact {
        table,
        json: to_json_value(&json)?,
        side: None,
    })
}

fn tilt(cfg: &RunConfig) -> Result<Artifact> {
    let t = &cfg.tilt;
    let g = tilt_compensation(t.gravity, t.acceleration_vector(), t.angular_velocity)?;
    let mut table = Table::new(&["quantity", "value"]);
    let vec_rows = [
        ("gravity_g", g.gravity),
        ("acceleration_a", g.acceleration),
        ("angular_velocity_Omega", g.angular_velocity),
        ("axis_ez_prime", g.axis),
    ];
    for (k, v) in vec_rows {
        for (c, x) in ["x", "y", "z"].iter().zip(v) {
            table.push(vec![format!("{k}_{c}").into(), x.into()]);
        }
    }
    table.push(vec!["tilt_angle_theta_a".into(), g.tilt_angle.into()]);
    table.push(vec!["tilt_angle_deg".into(), g.tilt_angle.to_degrees().into()]);
    table.push(vec!["effective_Omega_prime".into(), g.effective_omega.into()]);
    let json = json!({
        "config": echo(cfg)?,
        "gravity_g": g.gravity,
        "acceleration_a": g.acceleration,
        "angular_velocity_Omega": g.angular_velocity,
        "axis_ez_prime": g.axis,
        "tilt_angle_theta_a": g.tilt_angle,
        "tilt_angle_deg": g.tilt_angle.to_degrees(),
        "effective_Omega_prime": g.effective_omega,
    });
    Ok(Artifact {
        table,
        json: to_json_value(&json)?,
        side: None,
    })
}

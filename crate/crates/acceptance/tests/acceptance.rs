//! Acceptance criteria 1–10. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed; exits nonzero if any fail.

#![allow(clippy::approx_constant, clippy::type_complexity)]

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use clap::Parser;
use qrotor::cli::{run, Cli};
use qrotor::optics::{harmonic_decomposition, optical_potential, ring_minima, BeamConfig, Divergence};
use qrotor::raman::fit::{fit_lineshape, FitModel};
use qrotor::raman::lineshape::{calibrate_quadratic_scale, uniform_grid, Ensemble, RabiDrive};
use qrotor::raman::{
    effective_coupling, evolve_rwa, five_level::rabi_frequency_from_trace, five_level_model, kick_potential,
    transition_probability_closed_form, RamanConfig,
};
use qrotor::sensor::{
    budget_frequency, budget_rabi_fluctuation, budget_shot_noise, line_splitting, periodicity_check,
    transition_frequency, transition_frequency_closed_form, SensorConfig,
};
use qrotor::spectrum::{
    assemble_spectrum, rotational_constant, solve_axial, solve_radial, SolverOptions, SpectrumLimits,
};
use qrotor::units::{joule_to_kelvin, lithium6, recoil_energy, HalfInteger, CODATA, HBAR};
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn rel(x: f64, want: f64) -> f64 {
    (x / want - 1.0).abs()
}

fn fig2_beam() -> BeamConfig {
    let e0 = recoil_energy(&lithium6(), 671e-9).unwrap();
    BeamConfig {
        wavelength: 671e-9,
        waist_w0: 10e-6,
        power_p0: 1.0,
        oam_l: 5,
        radial_p: 0,
        phase_z0: 671e-9 / 4.0,
        trap_depth_v0: 10.0 * e0,
        divergence: Divergence::Rayleigh,
    }
}

/// Golden-section minimum of f on [a, b].
fn argmin(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn criterion_1() -> Vec<Check> {
    let beam = fig2_beam();
    let g = &ring_minima(&beam, &lithium6(), 0..=0).unwrap()[0];
    let z0 = g.z_j;
    let numeric = argmin(|r| optical_potential(&beam, r, z0).unwrap(), 5e-6, 30e-6);
    vec![
        check(
            "r_l closed form = 15.81 um +- 0.01 um",
            (g.r_l - 15.81e-6).abs() <= 0.01e-6,
            format!("r_l = {:.5} um", g.r_l * 1e6),
        ),
        check(
            "r_l from potential minimum = 15.81 um +- 0.01 um",
            (numeric - 15.81e-6).abs() <= 0.01e-6,
            format!("argmin V(r, z_0) = {:.5} um", numeric * 1e6),
        ),
    ]
}

fn criterion_2() -> Vec<Check> {
    let beam = fig2_beam();
    let sp = lithium6();
    let e0 = recoil_energy(&sp, beam.wavelength).unwrap();
    let hd = harmonic_decomposition(&beam, &sp, 0).unwrap();
    let g = &hd.geometry;
    let mut out = Vec::new();

    let v0_uk = joule_to_kelvin(beam.trap_depth_v0) * 1e6;
    out.push(check(
        "V0 = 10 E0 = kB x 35.36 uK (0.5%)",
        rel(v0_uk, 35.36) <= 5e-3,
        format!("V0/kB = {v0_uk:.4} uK, E0/kB = {:.4} uK", joule_to_kelvin(e0) * 1e6),
    ));
    // closed forms: C = ħ²/(2M r_l²), ħω_r = ħ√(8V0/(M w0²)), ħω_z = 2√(E0 V0)
    let r_l = beam.waist_w0 * (beam.oam_l as f64 / 2.0).sqrt();
    let c_closed = HBAR * HBAR / (2.0 * sp.mass * r_l * r_l);
    let wr_closed = HBAR * (8.0 * beam.trap_depth_v0 / (sp.mass * beam.waist_w0.powi(2))).sqrt();
    let wz_closed = 2.0 * (e0 * beam.trap_depth_v0).sqrt();
    let c = rotational_constant(g.r_l, &sp).unwrap();
    for (label, closed, model, want, unit) in [
        ("C(r_l) = kB x 0.1613 nK", c_closed, c, 0.1613, 1e9),
        ("hbar w_r = kB x 0.4776 uK", wr_closed, HBAR * g.omega_r, 0.4776, 1e6),
        ("hbar w_z = kB x 22.36 uK", wz_closed, HBAR * g.omega_z, 22.36, 1e6),
    ] {
        let x = joule_to_kelvin(closed) * unit;
        let y = joule_to_kelvin(model) * unit;
        out.push(check(
            &format!("{label} (0.5%)"),
            rel(x, want) <= 5e-3 && rel(y, want) <= 5e-3,
            format!("closed form {x:.5}, model {y:.5}"),
        ));
    }

    let opts = SolverOptions::default();
    let ez = solve_axial(&beam, &sp, 0, 3, &opts).unwrap();
    let worst = ez
        .iter()
        .enumerate()
        .map(|(n, e)| rel(*e, HBAR * g.omega_z * (n as f64 + 0.5)))
        .fold(0.0, f64::max);
    out.push(check(
        "harmonic-oracle limit: axial levels = hbar w_z (n + 1/2) within 1e-6",
        worst <= 1e-6,
        format!("max relative deviation {worst:.2e}"),
    ));
    let er = solve_radial(&beam, &sp, 0, 0, 1, &opts).unwrap();
    let gap_r = (er[1] - er[0]) / (HBAR * g.omega_r);
    let gap_z = (ez[1] - ez[0]) / (HBAR * g.omega_z);
    out.push(check(
        "eigensolver gaps within 5% of harmonic values",
        (gap_r - 1.0).abs() <= 0.05 && (gap_z - 1.0).abs() <= 0.05,
        format!("radial gap/hbar w_r = {gap_r:.5}, axial gap/hbar w_z = {gap_z:.8}"),
    ));
    out
}

fn criterion_3() -> Vec<Check> {
    let s = assemble_spectrum(
        &fig2_beam(),
        &lithium6(),
        SpectrumLimits {
            n_z_max: 1,
            n_r_max: 1,
            m_max: 1,
        },
        &SolverOptions::default(),
        10.0,
    )
    .unwrap();
    let g = s.gaps;
    let (a, b) = (g.axial / g.radial, g.radial / g.orbital);
    vec![check(
        "eps_z >> eps_r >> eps_l (ratios >= 10)",
        s.inequalities_ok && a >= 10.0 && b >= 10.0,
        format!("eps_z/eps_r = {a:.2}, eps_r/eps_l = {b:.2}"),
    )]
}

fn criterion_4() -> Vec<Check> {
    let w = 3.142;
    let tau = PI / w;
    let p0 = transition_probability_closed_form(0.0, w, tau);
    // half-maximum on the central lobe: P decreases monotonically on (0, √3Ω_R)
    let (mut a, mut b) = (0.0, 3f64.sqrt() * w);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if transition_probability_closed_form(m, w, tau) > 0.5 {
            a = m;
        } else {
            b = m;
        }
    }
    let fwhm = (a + b) / w;
    vec![
        check(
            "P0(0, Omega_R) = 1 at tau = pi/Omega_R",
            p0 == 1.0,
            format!("P0(0) = {p0:.17}"),
        ),
        check(
            "FWHM = 1.597 Omega_R +- 0.001",
            (fwhm - 1.597).abs() <= 1e-3,
            format!("FWHM = {fwhm:.6} Omega_R"),
        ),
    ]
}

fn criterion_5() -> Vec<Check> {
    let w = 3.142;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for k in 0..10 {
            let delta = w * (-4.0 + 8.0 * i as f64 / 9.0);
            let tau = (0.1 + 3.0 * k as f64 / 9.0) * PI / w;
            let d = (evolve_rwa(delta, w, tau) - transition_probability_closed_form(delta, w, tau)).abs();
            worst = worst.max(d);
        }
    }
    vec![check(
        "expm evolution = closed-form P over 10x10 (delta, tau) grid within 1e-10",
        worst <= 1e-10,
        format!("max |difference| = {worst:.2e}"),
    )]
}

fn criterion_6() -> Vec<Check> {
    let w = 3.142;
    let drive = RabiDrive::pi_pulse(w, 25);
    let cal = calibrate_quadratic_scale(&drive, 80, -0.5374 * w).unwrap();
    let ens = Ensemble {
        offsets: (-80i32..=80).map(|j| cal.scale * (j * j) as f64).collect(),
        drive,
    };
    let grid = uniform_grid(w, -8.0, 8.0, 801);
    let (d_max, p_max) = ens.peak(grid[0], grid[800]);
    let ls = ens.sample(&grid, 80).unwrap();
    let mut out = vec![
        check(
            "calibrated delta_max = -0.5374 Omega_R",
            cal.reached && (d_max / w + 0.5374).abs() <= 1e-3,
            format!(
                "delta_max = {:.4} Omega_R, scale s = {:.4e} Omega_R, reached = {}",
                d_max / w,
                cal.scale / w,
                cal.reached
            ),
        ),
        check(
            "P_max = 0.6989 +- 0.005",
            (p_max - 0.6989).abs() <= 5e-3,
            format!("P_max = {p_max:.4}"),
        ),
    ];
    match fit_lineshape(&ls, FitModel::PiPulse) {
        Ok(f) => {
            out.push(check(
                "fit A = 0.6799 +- 0.005",
                (f.amplitude_a - 0.6799).abs() <= 5e-3,
                format!("A = {:.4}", f.amplitude_a),
            ));
            out.push(check(
                "fit delta_0 = -0.640 +- 0.01 Omega_R",
                (f.delta_0 / w + 0.640).abs() <= 1e-2,
                format!("delta_0 = {:.4} Omega_R", f.delta_0 / w),
            ));
            out.push(check(
                "fit Omega_R_eff = 1.4865 +- 0.01 Omega_R",
                (f.omega_r_eff / w - 1.4865).abs() <= 1e-2,
                format!(
                    "Omega_R_eff = {:.4} Omega_R (rms residual {:.2e})",
                    f.omega_r_eff / w,
                    f.rms_residual
                ),
            ));
        }
        Err(e) => out.push(check("three-parameter fit converges", false, e.to_string())),
    }
    out
}

fn criterion_7() -> Vec<Check> {
    let (l, w0) = (25u32, 21.13);
    let mut rng = StdRng::seed_from_u64(7);
    let mut split_ok = true;
    let mut worst_split: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for _ in 0..200 {
        let omega: f64 = rng.gen_range(-60.0..60.0);
        for m in -3..=3 {
            let s = line_splitting(m, l, w0, omega).unwrap();
            let want = 4.0 * l as f64 * omega;
            worst_split = worst_split.max((s - want).abs() / (4.0 * (l * l) as f64 * w0));
            split_ok &= (s - want).abs() <= 1e-12 * (4.0 * (l * l) as f64 * w0);
            for zeta in [-1, 1] {
                let a = transition_frequency(m, zeta, l, w0, omega).unwrap();
                let b = transition_frequency_closed_form(m, zeta, l, w0, omega);
                worst_closed = worst_closed.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    let mut periodic = true;
    for m in -5..=5 {
        for mo in -5..=5 {
            let omega: f64 = rng.gen_range(-60.0..60.0);
            periodic &= periodicity_check(m, mo, l, w0, omega).unwrap();
        }
    }
    vec![
        check(
            "splitting = 4 L Omega for m in -3..3",
            split_ok,
            format!("max deviation {worst_split:.2e} (relative to 4L^2 w0)"),
        ),
        check(
            "closed form = energy differences within 1e-12",
            worst_closed <= 1e-12,
            format!("max relative difference {worst_closed:.2e}"),
        ),
        check("periodicity on {-5..5}^2", periodic, "random Omega per pair".into()),
    ]
}

fn criterion_8() -> Vec<Check> {
    let base = SensorConfig {
        kick_oam_l: 25,
        ring_count: 161,
        omega_0: 21.13,
        omega_r: 3.142,
        freq_uncertainty_pump: 2.86e-9,
        freq_uncertainty_stokes: 2.86e-9,
        photon_count_pump: 1e29,
        photon_count_stokes: 1e29,
        delta_hf: 1.26e8,
    };
    // δω = 2.86e-9 is the combined pump + Stokes stability in the δΩ formula
    let combined = SensorConfig {
        freq_uncertainty_pump: 1.43e-9,
        freq_uncertainty_stokes: 1.43e-9,
        ..base.clone()
    };
    let d_omega = budget_frequency(&combined);
    let (rabi, _) = budget_rabi_fluctuation(&base, base.omega_0).unwrap();
    let shot = budget_shot_noise(&base).unwrap();
    [
        ("dOmega = 2.25e-12 s^-1", d_omega, 2.25e-12),
        ("dphi_w/phi_R = 3.21e-17", rabi.phase / PI, 3.21e-17),
        ("deps_w = hbar x 1.267e-15 s^-1", rabi.energy / HBAR, 1.267e-15),
        ("dOmega_w = 9.985e-19 s^-1", rabi.d_omega, 9.985e-19),
        ("dphi_I = 1.987e-14", shot.phase, 1.987e-14),
        ("deps_I = hbar x 7.949e-14 s^-1", shot.energy / HBAR, 7.949e-14),
        ("dOmega_I = 6.265e-17 s^-1", shot.d_omega, 6.265e-17),
    ]
    .into_iter()
    .map(|(label, x, want)| check(&format!("{label} (1%)"), rel(x, want) <= 1e-2, format!("{x:.4e}")))
    .collect()
}

/// Five-level config with ω_2L : Δ_hf : |Δ_e| = 1 : 10^a : 10^(a+b) and
/// RF/kick strengths set as fractions of Δ_hf and ω_2L.
fn five_level_case(hf_ratio: f64, e_ratio: f64) -> Check {
    let sp = lithium6();
    let beam = fig2_beam();
    let l = 25u32;
    let omega_0 = 21.13;
    let w2l = 4.0 * (l * l) as f64 * omega_0;
    let delta_hf = hf_ratio * w2l;
    let m_f = HalfInteger::from_twice(1);
    let gm = sp.g_factor * CODATA.mu_b / HBAR;
    let beta = SQRT_2 / 3.0 * gm * m_f.value().abs();
    let b = 0.02 * delta_hf / beta;
    // d²/|Δ_e| = 3V_e/(√2 m_F² ħ) set to 0.05 ω_2L
    let v_e_target = 0.05 * w2l * SQRT_2 * m_f.value().powi(2) / 3.0 * HBAR;
    let mut cfg = RamanConfig {
        b_p0: b,
        b_s0: b,
        omega_p: sp.hyperfine_splitting + delta_hf,
        omega_s: sp.hyperfine_splitting + delta_hf - w2l,
        delta_hf,
        kick_power: 1.0,
        kick_waist: RamanConfig::matched_kick_waist(&beam, l),
        kick_oam_l: l,
        delta_e: -e_ratio * delta_hf,
        polarizability: 2.7e-39,
        pulse_duration: 0.0,
        omega_0,
    };
    cfg.kick_power = v_e_target / kick_potential(&cfg);
    let eff = effective_coupling(&cfg, &sp).unwrap();
    cfg.pulse_duration = 1.3 * PI / eff.omega_r;
    let label = format!(
        "five-level Rabi frequency = 2 sqrt2 V/hbar within 5% (Delta_hf/w_2L = {hf_ratio:.0e}, |Delta_e|/Delta_hf = {e_ratio:.0e})"
    );
    let model = match five_level_model(&cfg, &sp, m_f) {
        Ok(m) => m,
        Err(e) => return check(&label, false, e.to_string()),
    };
    let resonance = model.raman_resonance();
    let trace = model.with_drive(resonance).evolve(cfg.pulse_duration, 24);
    match rabi_frequency_from_trace(&trace.times, &trace.final_population) {
        Ok((_, p_peak, omega)) => {
            let ratio = omega / eff.omega_r;
            check(
                &label,
                (ratio - 1.0).abs() <= 0.05,
                format!(
                    "Omega_5level/Omega_R = {ratio:.4} (Omega_R = {:.4} s^-1, peak transfer {p_peak:.4}, norm drift {:.1e})",
                    eff.omega_r, trace.norm_drift
                ),
            )
        }
        Err(e) => check(&label, false, e.to_string()),
    }
}

fn criterion_9() -> Vec<Check> {
    vec![five_level_case(100.0, 100.0), five_level_case(100.0, 1000.0)]
}

/// Runs the `qrotor` command line entry point with `--out` pointed at a
/// fresh file and returns the bytes written.
fn run_cli(dir: &Path, tag: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = dir.join(tag);
    let mut argv = vec!["qrotor", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    run(cli).map_err(|e| e.to_string())?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn criterion_10() -> Vec<Check> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("fig2.json", "spectrum"),
        ("fig4.json", "lineshape"),
        ("budget.json", "budget"),
        ("rotation_scan.json", "rotation-scan"),
        ("tilt.json", "tilt"),
    ];
    let mut out = Vec::new();
    for (file, cmd) in cases {
        let cfg = root.join("configs").join(file);
        let cfg = cfg.to_str().unwrap();
        let runs: Result<Vec<Vec<u8>>, String> =
            [("json", "1"), ("json", "1"), ("json", "4"), ("csv", "1"), ("csv", "4")]
                .iter()
                .enumerate()
                .map(|(i, (fmt, par))| {
                    run_cli(
                        dir.path(),
                        &format!("{cmd}-{i}.{fmt}"),
                        &["--config", cfg, "--format", fmt, "--parallel", par, cmd],
                    )
                })
                .collect();
        let name = format!("{cmd} on configs/{file}: byte-identical across runs and --parallel 1/4");
        match runs {
            Ok(r) => {
                let ok = r.iter().all(|b| !b.is_empty()) && r[0] == r[1] && r[0] == r[2] && r[3] == r[4];
                out.push(check(
                    &name,
                    ok,
                    format!("{} bytes json, {} bytes csv", r[0].len(), r[3].len()),
                ));
            }
            Err(e) => out.push(check(&name, false, e)),
        }
    }
    out
}

fn main() {
    let criteria: [(u32, fn() -> Vec<Check>); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, f) in criteria {
        let checks = f();
        let pass = checks.iter().all(|c| c.pass);
        println!("criterion {n:>2}: {}", if pass { "PASS" } else { "FAIL" });
        for c in &checks {
            println!("    [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}

//! Rotation readout: Raman line frequencies in the rotating frame, the
//! three uncertainty channels, and tilt compensation for in-plane
//! acceleration.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::units::HBAR;

/// Rotor energy ε_m(Ω)/ħ = m²ω₀ + Ωm.
fn rotor_level(m: i64, omega_0: f64, omega: f64) -> f64 {
    (m * m) as f64 * omega_0 + omega * m as f64
}

/// Frequency of the transition from ζm_ℓ to ζ(m_ℓ + 2L), computed as a
/// difference of rotating-frame rotor energies.
pub fn transition_frequency(m_ell: i32, zeta: i32, l: u32, omega_0: f64, omega: f64) -> Result<f64> {
    if zeta != 1 && zeta != -1 {
        return Err(invalid("zeta", format!("must be +1 or -1, got {zeta}")));
    }
    if l == 0 {
        return Err(invalid("L", "must be >= 1"));
    }
    let start = zeta as i64 * m_ell as i64;
    let end = zeta as i64 * (m_ell as i64 + 2 * l as i64);
    Ok(rotor_level(end, omega_0, omega) - rotor_level(start, omega_0, omega))
}

/// Closed form 4L(L + m_ℓ)ω₀ + 2ζLΩ of the same frequency.
pub fn transition_frequency_closed_form(m_ell: i32, zeta: i32, l: u32, omega_0: f64, omega: f64) -> f64 {
    let l = l as f64;
    4.0 * l * (l + m_ell as f64) * omega_0 + 2.0 * zeta as f64 * l * omega
}

/// ω_{m,m+2L}(Ω) − ω_{−m,−m−2L}(Ω); equals 4LΩ.
pub fn line_splitting(m_ell: i32, l: u32, omega_0: f64, omega: f64) -> Result<f64> {
    Ok(transition_frequency(m_ell, 1, l, omega_0, omega)? - transition_frequency(m_ell, -1, l, omega_0, omega)?)
}

/// Relative agreement of ω_{m+m_Ω, m+m_Ω+2L}(Ω − 2m_Ωω₀) with ω_{m,m+2L}(Ω).
pub fn periodicity_residual(m_ell: i32, m_omega: i32, l: u32, omega_0: f64, omega: f64, shift: f64) -> Result<f64> {
    let lhs = transition_frequency(m_ell + m_omega, 1, l, omega_0, omega - shift)?;
    let rhs = transition_frequency(m_ell, 1, l, omega_0, omega)?;
    Ok((lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE))
}

pub fn periodicity_check(m_ell: i32, m_omega: i32, l: u32, omega_0: f64, omega: f64) -> Result<bool> {
    let shift = 2.0 * m_omega as f64 * omega_0;
    Ok(periodicity_residual(m_ell, m_omega, l, omega_0, omega, shift)? <= 1e-12)
}

/// One point of the six-line rotation scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub omega: f64,
    pub m_ell: i32,
    pub zeta: i32,
    pub frequency: f64,
}

/// The six lines starting from ζm_ℓ with m_ℓ ∈ {0, +1, −1}.
pub const SCAN_LINES: [(i32, i32); 6] = [(0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

pub fn rotation_scan(l: u32, omega_0: f64, omegas: &[f64]) -> Result<Vec<ScanPoint>> {
    let mut out = Vec::with_capacity(omegas.len() * SCAN_LINES.len());
    for &omega in omegas {
        for (m_ell, zeta) in SCAN_LINES {
            out.push(ScanPoint {
                omega,
                m_ell,
                zeta,
                frequency: transition_frequency(m_ell, zeta, l, omega_0, omega)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorConfig {
    pub kick_oam_l: u32,
    pub ring_count: u32,
    pub omega_0: f64,
    pub omega_r: f64,
    pub freq_uncertainty_pump: f64,
    pub freq_uncertainty_stokes: f64,
    pub photon_count_pump: f64,
    pub photon_count_stokes: f64,
    pub delta_hf: f64,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kick_oam_l == 0 {
            return Err(invalid("sensor.kick_oam_l", "must be >= 1"));
        }
        if self.ring_count == 0 || self.ring_count.is_multiple_of(2) {
            return Err(invalid(
                "sensor.ring_count",
                format!("must be a positive odd integer, got {}", self.ring_count),
            ));
        }
        for (name, v) in [
            ("sensor.omega_0", self.omega_0),
            ("sensor.omega_r", self.omega_r),
            ("sensor.photon_count_pump", self.photon_count_pump),
            ("sensor.photon_count_stokes", self.photon_count_stokes),
            ("sensor.delta_hf", self.delta_hf),
        ] {
            crate::error::require_positive(name, v)?;
        }
        for (name, v) in [
            ("sensor.freq_uncertainty_pump", self.freq_uncertainty_pump),
            ("sensor.freq_uncertainty_stokes", self.freq_uncertainty_stokes),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// 4Lħ√N: converts an energy resolution into a rotation resolution.
    fn energy_to_rotation(&self) -> f64 {
        4.0 * self.kick_oam_l as f64 * HBAR * (self.ring_count as f64).sqrt()
    }
}

/// Channel of one SM budget item: phase error, energy error (J), rotation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channel {
    pub phase: f64,
    pub energy: f64,
    pub d_omega: f64,
}

/// δΩ = (δω_p + δω_s)/(4L√N).
pub fn budget_frequency(cfg: &SensorConfig) -> f64 {
    (cfg.freq_uncertainty_pump + cfg.freq_uncertainty_stokes)
        / (4.0 * cfg.kick_oam_l as f64 * (cfg.ring_count as f64).sqrt())
}

/// Rabi-phase noise from pump/Stokes frequency jitter, φ_R = π.
/// Also returns δε_ω/C so the caller can judge level resolution.
pub fn budget_rabi_fluctuation(cfg: &SensorConfig, c_over_hbar: f64) -> Result<(Channel, f64)> {
    if !(cfg.delta_hf > 0.0) {
        return Err(invalid("sensor.delta_hf", "must be > 0"));
    }
    let phase = PI * (cfg.freq_uncertainty_pump / cfg.delta_hf).hypot(cfg.freq_uncertainty_stokes / cfg.delta_hf);
    let energy = 4.0 * HBAR * cfg.omega_r * phase;
    Ok((
        Channel {
            phase,
            energy,
            d_omega: energy / cfg.energy_to_rotation(),
        },
        energy / (HBAR * c_over_hbar),
    ))
}

/// Photon shot noise in the RF fields: δφ_I = π(N_p^{−½} + N_s^{−½}),
/// δε_I/(4ħΩ_R) = δφ_I/φ_R.
pub fn budget_shot_noise(cfg: &SensorConfig) -> Result<Channel> {
    if !(cfg.photon_count_pump > 0.0 && cfg.photon_count_stokes > 0.0) {
        return Err(invalid("sensor.photon_count", "must be > 0"));
    }
    let phase = PI * (cfg.photon_count_pump.powf(-0.5) + cfg.photon_count_stokes.powf(-0.5));
    let energy = 4.0 * HBAR * cfg.omega_r * phase / PI;
    Ok(Channel {
        phase,
        energy,
        d_omega: energy / cfg.energy_to_rotation(),
    })
}

/// Channels reported side by side; they are not combined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensorBudget {
    pub d_omega_freq: f64,
    pub d_omega_rabi: f64,
    pub d_omega_shot: f64,
    pub rabi: Channel,
    pub shot: Channel,
    /// δε_ω / C(r_l).
    pub rabi_energy_over_c: f64,
}

pub fn sensor_budget(cfg: &SensorConfig) -> Result<SensorBudget> {
    cfg.validate()?;
    let (rabi, ratio) = budget_rabi_fluctuation(cfg, cfg.omega_0)?;
    let shot = budget_shot_noise(cfg)?;
    Ok(SensorBudget {
        d_omega_freq: budget_frequency(cfg),
        d_omega_rabi: rabi.d_omega,
        d_omega_shot: shot.d_omega,
        rabi,
        shot,
        rabi_energy_over_c: ratio,
    })
}

/// Two levels separated by `level_phase` are distinguishable when it
/// exceeds `threshold` times the Rabi-phase noise.
pub fn levels_resolvable(level_phase: f64, rabi: &Channel, threshold: f64) -> bool {
    level_phase > threshold * rabi.phase
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltGeometry {
    pub gravity: [f64; 3],
    pub acceleration: [f64; 3],
    pub angular_velocity: [f64; 3],
    /// Angle between g and g′ = g − a, rad.
    pub tilt_angle: f64,
    /// New lattice axis ê′_z = −g′/|g′|.
    pub axis: [f64; 3],
    /// Ω′ = Ω·ê′_z, rad/s.
    pub effective_omega: f64,
}

pub fn tilt_compensation(g: [f64; 3], a: [f64; 3], omega: [f64; 3]) -> Result<TiltGeometry> {
    let gv = Vector3::from(g);
    let gp = gv - Vector3::from(a);
    let n = gp.norm();
    if !(n > 0.0 && n.is_finite()) || !(gv.norm() > 0.0) {
        return Err(Error::InvalidInput {
            field: "tilt".into(),
            reason: "effective gravity g - a vanishes; lattice orientation undefined".into(),
        });
    }
    let axis = -gp / n;
    let cos = (gv.dot(&gp) / (gv.norm() * n)).clamp(-1.0, 1.0);
    Ok(TiltGeometry {
        gravity: g,
        acceleration: a,
        angular_velocity: omega,
        tilt_angle: cos.acos(),
        axis: axis.into(),
        effective_omega: Vector3::from(omega).dot(&axis),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ground_band_line() {
        let f = transition_frequency(0, 1, 25, 21.13, 0.0).unwrap();
        assert!((f - 2500.0 * 21.13).abs() < 1e-9);
        assert!(transition_frequency(0, 0, 25, 21.13, 0.0).is_err());
    }

    #[test]
    fn degenerate_at_rest() {
        for m in [-1, 0, 1] {
            let a = transition_frequency(m, 1, 25, 21.13, 0.0).unwrap();
            let b = transition_frequency(m, -1, 25, 21.13, 0.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn scan_at_rest_has_three_frequencies() {
        let pts = rotation_scan(25, 21.13, &[0.0]).unwrap();
        let mut f: Vec<f64> = pts.iter().map(|p| p.frequency).collect();
        f.sort_by(f64::total_cmp);
        f.dedup();
        assert_eq!(f.len(), 3);
    }

    #[test]
    fn splitting_sign_follows_rotation() {
        assert_eq!(line_splitting(1, 25, 21.13, 0.0).unwrap(), 0.0);
        assert!(line_splitting(1, 25, 21.13, 0.01).unwrap() > 0.0);
        assert!(line_splitting(1, 25, 21.13, -0.01).unwrap() < 0.0);
    }

    #[test]
    fn periodicity_negative_case() {
        let l = 25;
        let w0 = 21.13;
        assert!(periodicity_check(2, 0, l, w0, 0.3).unwrap());
        let shifted = 1.01 * 2.0 * 3.0 * w0;
        assert!(periodicity_residual(2, 3, l, w0, 0.3, shifted).unwrap() > 1e-12);
    }

    fn paper_cfg() -> SensorConfig {
        SensorConfig {
            kick_oam_l: 25,
            ring_count: 161,
            omega_0: 21.13,
            omega_r: 3.142,
            freq_uncertainty_pump: 2.86e-9,
            freq_uncertainty_stokes: 2.86e-9,
            photon_count_pump: 1e29,
            photon_count_stokes: 1e29,
            delta_hf: 1.26e8,
        }
    }

    #[test]
    fn budget_scaling() {
        let base = paper_cfg();
        let f1 = budget_frequency(&base);
        let mut c = base.clone();
        c.kick_oam_l = 50;
        assert!((budget_frequency(&c) * 2.0 / f1 - 1.0).abs() < 1e-14);
        let mut zero = base.clone();
        zero.freq_uncertainty_pump = 0.0;
        zero.freq_uncertainty_stokes = 0.0;
        assert_eq!(budget_frequency(&zero), 0.0);
        let b1 = sensor_budget(&SensorConfig {
            ring_count: 1,
            ..base.clone()
        })
        .unwrap();
        for n in [9u32, 161, 1001] {
            let b = sensor_budget(&SensorConfig {
                ring_count: n,
                ..base.clone()
            })
            .unwrap();
            let s = (n as f64).sqrt();
            for (x, y) in [
                (b.d_omega_freq, b1.d_omega_freq),
                (b.d_omega_rabi, b1.d_omega_rabi),
                (b.d_omega_shot, b1.d_omega_shot),
            ] {
                assert!((x * s / y - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_ordering() {
        let b = sensor_budget(&paper_cfg()).unwrap();
        assert!(b.d_omega_rabi < 0.05 * b.d_omega_shot);
        assert!(b.d_omega_shot <= b.d_omega_freq);
        assert!(b.rabi_energy_over_c < 1e-10);
    }

    #[test]
    fn channel_values() {
        let cfg = paper_cfg();
        let close = |x: f64, want: f64| (x / want - 1.0).abs() < 1e-2;
        let (rabi, _) = budget_rabi_fluctuation(&cfg, cfg.omega_0).unwrap();
        assert!(close(rabi.phase / PI, 3.21e-17));
        assert!(close(rabi.energy / HBAR, 1.267e-15));
        assert!(close(rabi.d_omega, 9.985e-19));
        let shot = budget_shot_noise(&cfg).unwrap();
        assert!(close(shot.phase, 1.987e-14));
        assert!(close(shot.energy / HBAR, 7.949e-14));
        assert!(close(shot.d_omega, 6.265e-17));
        let combined = SensorConfig {
            freq_uncertainty_pump: 1.43e-9,
            freq_uncertainty_stokes: 1.43e-9,
            ..cfg
        };
        assert!(close(budget_frequency(&combined), 2.25e-12));
    }

    #[test]
    fn rejects_even_ring_count() {
        let mut c = paper_cfg();
        c.ring_count = 160;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tilt_cases() {
        let g = [0.0, 0.0, -9.81];
        let w = [0.1, 0.2, 0.3];
        let t = tilt_compensation(g, [0.0; 3], w).unwrap();
        assert_eq!(t.tilt_angle, 0.0);
        assert!((t.effective_omega - 0.3).abs() < 1e-15);
        let t = tilt_compensation(g, [9.81, 0.0, 0.0], w).unwrap();
        assert!((t.tilt_angle - PI / 4.0).abs() < 1e-12);
        assert!((t.effective_omega - (0.3 + 0.1) / 2f64.sqrt()).abs() < 1e-12);
        let t = tilt_compensation(g, [0.0; 3], [1.0, -2.0, 0.0]).unwrap();
        assert_eq!(t.effective_omega, 0.0);
        assert!(tilt_compensation(g, g, w).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_matches_energy_difference(m in -40i32..40, zeta in prop::sample::select(vec![-1, 1]), l in 1u32..60, w0 in 0.1f64..100.0, om in -50.0f64..50.0) {
            let a = transition_frequency(m, zeta, l, w0, om).unwrap();
            let b = transition_frequency_closed_form(m, zeta, l, w0, om);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
        }

        #[test]
        fn splitting_is_4l_omega(m in -3i32..=3, l in 1u32..60, w0 in 0.1f64..100.0, om in -50.0f64..50.0) {
            let s = line_splitting(m, l, w0, om).unwrap();
            let want = 4.0 * l as f64 * om;
            prop_assert!((s - want).abs() <= 1e-12 * (4.0 * l as f64 * l as f64 * w0).max(want.abs()));
        }

        #[test]
        fn periodicity_holds(m in -5i32..=5, mo in -5i32..=5, om in -30.0f64..30.0) {
            prop_assert!(periodicity_check(m, mo, 25, 21.13, om).unwrap());
        }
    }
}

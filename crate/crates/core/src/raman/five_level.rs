//! The five-level ladder behind the effective Raman coupling.
//!
//! Basis: |0⟩, |1⟩ rotor states |0⟩, |f⟩ in the lower hyperfine level;
//! |2⟩, |3⟩ the same rotor states in the upper hyperfine level; |4⟩ the
//! electronically excited state reached by the kick beam. The frame rotates
//! with the pump and kick frequencies, so H₀/ħ is diagonal with
//! (0, ω_2L, Δ_hf, Δ_hf + ω_2L, −Δ_e). With Δ_e = ω_e − ω_res the excited
//! state sits at −Δ_e, i.e. above the ground pair for red detuning.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;

use super::integrate::magnus4;
use super::rabi::C64;
use super::{kick_potential, RamanConfig, PERTURBATIVE_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::units::{AtomSpecies, HalfInteger, CODATA, HBAR};

#[derive(Debug, Clone, PartialEq)]
pub struct FiveLevelModel {
    /// Diagonal of H₀/ħ, rad/s.
    pub levels: [f64; 5],
    /// RF matrix elements ⟨0|H|2⟩ = ⟨1|H|3⟩ split into pump and Stokes parts, rad/s.
    pub rf_pump: f64,
    pub rf_stokes: f64,
    /// Kick-beam element ⟨0|H|4⟩ = ⟨1|H|4⟩, rad/s.
    pub dipole: f64,
    /// Drive difference ω_p − ω_s, rad/s.
    pub omega_ps: f64,
}

/// Build the ladder for sublevel m_F.
///
/// The RF elements are (√2/3)gμ_B B m_F/ħ. The dipole element d is fixed so
/// that second-order elimination through |2⟩,|3⟩,|4⟩ reproduces the
/// three-level coupling √2V/ħ, i.e. Rabi frequency 2√2V/ħ between |0⟩ and
/// |f⟩: d²/|Δ_e| = √2 (gμ_B/ħ)² (V_e/ħ) / (3β²) with β the RF element per tesla.
pub fn five_level_model(cfg: &RamanConfig, species: &AtomSpecies, m_f: HalfInteger) -> Result<FiveLevelModel> {
    cfg.validate()?;
    species.validate()?;
    if let Some(v) = cfg.hierarchy_violations().into_iter().next() {
        return Err(v);
    }
    if m_f.twice() == 0 || m_f.twice().abs() > species.f_ground.twice() {
        return Err(invalid("m_F", format!("needs 0 < |m_F| <= F, got {m_f}")));
    }
    let gm = species.g_factor * CODATA.mu_b / HBAR;
    let beta = 2f64.sqrt() / 3.0 * gm * m_f.value().abs();
    let w2l = cfg.omega_2l();
    let v_e = kick_potential(cfg) / HBAR;
    let d2 = 2f64.sqrt() * gm * gm * v_e / (3.0 * beta * beta) * cfg.delta_e.abs();
    Ok(FiveLevelModel {
        levels: [0.0, w2l, cfg.delta_hf, cfg.delta_hf + w2l, -cfg.delta_e],
        rf_pump: beta * cfg.b_p0,
        rf_stokes: beta * cfg.b_s0,
        dipole: d2.sqrt(),
        omega_ps: cfg.omega_ps(),
    })
}

/// Population trace sampled once per drive period.
#[derive(Debug, Clone)]
pub struct Trace {
    pub times: Vec<f64>,
    /// |ψ₁|² + |ψ₃|²: probability of the final rotor state.
    pub final_population: Vec<f64>,
    pub norm_drift: f64,
}

impl FiveLevelModel {
    pub fn with_drive(mut self, omega_ps: f64) -> Self {
        self.omega_ps = omega_ps;
        self
    }

    /// H(t)/ħ, rad/s.
    pub fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let mut h = DMatrix::<C64>::zeros(5, 5);
        for (i, e) in self.levels.iter().enumerate() {
            h[(i, i)] = C64::new(*e, 0.0);
        }
        let rf = C64::new(self.rf_pump, 0.0) + C64::from_polar(self.rf_stokes, -self.omega_ps * t);
        for (a, b) in [(0, 2), (1, 3)] {
            h[(a, b)] = rf;
            h[(b, a)] = rf.conj();
        }
        for a in [0, 1] {
            h[(a, 4)] = C64::new(self.dipole, 0.0);
            h[(4, a)] = C64::new(self.dipole, 0.0);
        }
        h
    }

    /// Drive frequency resonant with the dressed |0⟩ ↔ |1⟩ pair: |4⟩ is
    /// eliminated into a static 2×2 block, weighted by the bare-state
    /// fraction 1 − v_b² left after RF dressing.
    pub fn raman_resonance(&self) -> f64 {
        let w = self.levels[1];
        let e4 = self.levels[4];
        let v2 = (self.rf_pump.powi(2) + self.rf_stokes.powi(2)) / self.levels[2].powi(2);
        let s = self.dipole.powi(2) * (1.0 - v2);
        let h = Matrix2::new(
            -s / e4,
            0.5 * s * (-1.0 / e4 + 1.0 / (w - e4)),
            0.5 * s * (-1.0 / e4 + 1.0 / (w - e4)),
            w + s / (w - e4),
        );
        let diff = h[(1, 1)] - h[(0, 0)];
        (diff * diff + 4.0 * h[(0, 1)] * h[(0, 1)]).sqrt()
    }

    /// Propagate |0⟩ for `duration` with `steps_per_period` Magnus steps per
    /// drive period, sampling stroboscopically at each period.
    pub fn evolve(&self, duration: f64, steps_per_period: usize) -> Trace {
        let period = 2.0 * std::f64::consts::PI / self.omega_ps.abs();
        let periods = (duration / period).ceil() as usize;
        let dt = period / steps_per_period as f64;
        let mut psi = DVector::<C64>::zeros(5);
        psi[0] = C64::new(1.0, 0.0);
        let mut times = vec![0.0];
        let mut pops = vec![0.0];
        magnus4(
            |t| self.hamiltonian(t),
            &mut psi,
            0.0,
            dt,
            periods * steps_per_period,
            |k, t, s| {
                if (k + 1) % steps_per_period == 0 {
                    times.push(t);
                    pops.push(s[1].norm_sqr() + s[3].norm_sqr());
                }
            },
        );
        Trace {
            times,
            final_population: pops,
            norm_drift: (psi.norm() - 1.0).abs(),
        }
    }
}

/// First-peak Rabi frequency estimate from a transfer curve: with
/// P(t) = (Ω²/W²)sin²(Wt/2), the first maximum sits at t = π/W with height
/// Ω²/W², so Ω = (π/t_peak)√P_peak independently of detuning.
pub fn rabi_frequency_from_trace(times: &[f64], pops: &[f64]) -> Result<(f64, f64, f64)> {
    let (i, _) = pops
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| invalid("trace", "empty"))?;
    if i == 0 || i + 1 >= pops.len() {
        return Err(Error::Convergence {
            context: "Rabi frequency estimate".into(),
            detail: "transfer maximum at the edge of the trace; lengthen the evolution".into(),
        });
    }
    // parabola through the three samples around the maximum
    let (t0, t1, t2) = (times[i - 1], times[i], times[i + 1]);
    let (p0, p1, p2) = (pops[i - 1], pops[i], pops[i + 1]);
    let h = t1 - t0;
    let denom = p0 - 2.0 * p1 + p2;
    let (t_peak, p_peak) = if denom < 0.0 && (t2 - t1 - h).abs() < 1e-9 * h {
        let off = 0.5 * h * (p0 - p2) / denom;
        (t1 + off, p1 - 0.125 * (p0 - p2).powi(2) / denom)
    } else {
        (t1, p1)
    };
    Ok((t_peak, p_peak, std::f64::consts::PI / t_peak * p_peak.sqrt()))
}

/// Two-level problem left after eliminating |2⟩, |3⟩, |4⟩. Energies in J.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveTwoLevel {
    pub epsilon_2l: f64,
    /// 2ħ|h_e|²/Δ_e (sign follows Δ_e: negative for red detuning).
    pub stark_coupling: f64,
    /// Static part of the |0⟩–|1⟩ coupling.
    pub static_part: f64,
    /// Amplitude of the cos(ω_ps t) part; equals 2V in magnitude.
    pub cos_amplitude: f64,
    pub omega_ps: f64,
    pub v_b: f64,
    pub v_e: f64,
}

impl EffectiveTwoLevel {
    pub fn coupling(&self, t: f64) -> f64 {
        self.static_part + self.cos_amplitude * (self.omega_ps * t).cos()
    }

    pub fn hamiltonian(&self, t: f64) -> Matrix2<f64> {
        let c = self.coupling(t);
        Matrix2::new(0.0, c, c, self.epsilon_2l)
    }
}

/// Eliminate the RF-excited and optically excited states. The kick element
/// obeys 2|h_e|²/|Δ_e| = V_e/ħ; the RF dressing multiplies it by
/// 1 − (1/3)(gμ_B/ħΔ_hf)²(B_p² + B_s² + 2B_pB_s cos ω_ps t).
pub fn adiabatic_eliminate(cfg: &RamanConfig, species: &AtomSpecies) -> Result<EffectiveTwoLevel> {
    cfg.validate()?;
    let ve = kick_potential(cfg);
    let he2 = ve / HBAR * cfg.delta_e.abs() / 2.0;
    let kappa = species.g_factor * CODATA.mu_b / (HBAR * cfg.delta_hf.abs());
    let v_b = kappa * (cfg.b_p0 + cfg.b_s0) / 3f64.sqrt();
    let v_e = he2.sqrt() / cfg.delta_e.abs();
    for (name, v) in [("|v_b|", v_b), ("|v_e|", v_e)] {
        if v > PERTURBATIVE_LIMIT {
            return Err(Error::Validity {
                quantity: name.into(),
                ratio: v,
                limit: PERTURBATIVE_LIMIT,
            });
        }
    }
    let stark = 2.0 * HBAR * he2 / cfg.delta_e;
    let k2 = kappa * kappa / 3.0;
    Ok(EffectiveTwoLevel {
        epsilon_2l: HBAR * cfg.omega_2l(),
        stark_coupling: stark,
        static_part: stark * (1.0 - k2 * (cfg.b_p0.powi(2) + cfg.b_s0.powi(2))),
        cos_amplitude: -stark * 2.0 * k2 * cfg.b_p0 * cfg.b_s0,
        omega_ps: cfg.omega_ps(),
        v_b,
        v_e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raman::effective_coupling;
    use crate::units::lithium6;

    /// A deliberately compressed hierarchy (ratios 10) so that explicit RK
    /// can integrate it quickly.
    fn small_config() -> RamanConfig {
        RamanConfig {
            b_p0: 5e-9,
            b_s0: 5e-9,
            omega_p: 1.43e9 + 400.0,
            omega_s: 1.43e9,
            delta_hf: 4000.0,
            kick_power: 1e-8,
            kick_waist: 4.47e-6,
            kick_oam_l: 1,
            delta_e: -4.0e4,
            polarizability: 2.7e-39,
            pulse_duration: 1.0,
            omega_0: 100.0,
        }
    }

    #[test]
    fn hermitian_at_all_times() {
        let m = five_level_model(&small_config(), &lithium6(), HalfInteger::from_twice(1)).unwrap();
        for k in 0..20 {
            let h = m.hamiltonian(0.37 * k as f64);
            assert!((&h - h.adjoint()).norm() < 1e-12 * h.norm());
        }
    }

    #[test]
    fn no_fields_no_transfer() {
        let mut cfg = small_config();
        cfg.b_p0 = 0.0;
        cfg.b_s0 = 0.0;
        cfg.kick_power = 0.0;
        let m = five_level_model(&cfg, &lithium6(), HalfInteger::from_twice(1)).unwrap();
        let tr = m.evolve(0.05, 32);
        assert!(tr.final_population.iter().all(|&p| p < 1e-28));
    }

    #[test]
    fn magnus_matches_adaptive_rk() {
        use crate::raman::integrate::{dormand_prince, AdaptiveOptions};
        let m = five_level_model(&small_config(), &lithium6(), HalfInteger::from_twice(1)).unwrap();
        let m = m.clone().with_drive(m.raman_resonance());
        let mut psi0 = DVector::<C64>::zeros(5);
        psi0[0] = C64::new(1.0, 0.0);
        let period = 2.0 * std::f64::consts::PI / m.omega_ps;
        let t1 = 3.0 * period;
        let rk = dormand_prince(|t| m.hamiltonian(t), &psi0, 0.0, t1, AdaptiveOptions::default()).unwrap();
        let mut mg = psi0.clone();
        magnus4(|t| m.hamiltonian(t), &mut mg, 0.0, period / 400.0, 1200, |_, _, _| {});
        assert!((rk - mg).norm() < 1e-7);
    }

    #[test]
    fn rejects_zero_projection_and_bad_hierarchy() {
        let sp = lithium6();
        assert!(five_level_model(&small_config(), &sp, HalfInteger::from_twice(0)).is_err());
        let mut cfg = small_config();
        cfg.delta_e = -5000.0;
        assert!(matches!(
            five_level_model(&cfg, &sp, HalfInteger::from_twice(1)),
            Err(Error::Validity { .. })
        ));
    }

    #[test]
    fn elimination_reproduces_raman_coupling() {
        let cfg = small_config();
        let sp = lithium6();
        let eff = adiabatic_eliminate(&cfg, &sp).unwrap();
        let c = effective_coupling(&cfg, &sp).unwrap();
        assert!((eff.cos_amplitude.abs() / (2.0 * c.v) - 1.0).abs() < 1e-12);
        // red detuning: attractive static Stark term
        assert!(eff.stark_coupling < 0.0);
        let mut off = cfg.clone();
        off.b_p0 = 0.0;
        off.b_s0 = 0.0;
        let e0 = adiabatic_eliminate(&off, &sp).unwrap();
        assert_eq!(e0.cos_amplitude, 0.0);
        assert_eq!(e0.static_part, e0.stark_coupling);
        let h = eff.hamiltonian(0.3);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn elimination_reports_strong_rf() {
        let mut cfg = small_config();
        cfg.b_p0 = 1e-3;
        match adiabatic_eliminate(&cfg, &lithium6()) {
            Err(Error::Validity { quantity, ratio, .. }) => {
                assert_eq!(quantity, "|v_b|");
                assert!(ratio > PERTURBATIVE_LIMIT);
            }
            other => panic!("expected validity error, got {other:?}"),
        }
    }

    #[test]
    fn rabi_estimate_on_ideal_curve() {
        let (w, d) = (2.0f64, 0.7f64);
        let big_w = (w * w + d * d).sqrt();
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.01).collect();
        let pops: Vec<f64> = times
            .iter()
            .map(|t| w * w / (big_w * big_w) * (0.5 * big_w * t).sin().powi(2))
            .collect();
        let (_, _, est) = rabi_frequency_from_trace(&times, &pops).unwrap();
        assert!((est / w - 1.0).abs() < 1e-4);
    }
}

//! Raman transfer between rotor states |0⟩ and |f⟩ = (|2L⟩ + |−2L⟩)/√2:
//! effective couplings, three-level RWA dynamics, the five-level ladder it
//! is derived from, ensemble lineshapes and the lineshape fit.

pub mod fit;
pub mod five_level;
pub mod integrate;
pub mod lineshape;
pub mod rabi;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, require_positive, Error, Result};
use crate::optics::BeamConfig;
use crate::units::{AtomSpecies, CODATA, HBAR};

/// Ratio read as "≫" in the detuning hierarchy |Δ_e| ≫ |Δ_hf| ≫ ω_{2L,0}.
pub const HIERARCHY_RATIO: f64 = 10.0;

/// Largest |v_b|, |v_e| accepted by the adiabatic elimination.
pub const PERTURBATIVE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RamanConfig {
    /// Pump and Stokes RF magnetic amplitudes, T.
    pub b_p0: f64,
    pub b_s0: f64,
    pub omega_p: f64,
    pub omega_s: f64,
    /// Detuning of the RF pair from the hyperfine transition, rad/s.
    pub delta_hf: f64,
    /// Kick beam: power (W), waist (m), OAM L.
    pub kick_power: f64,
    pub kick_waist: f64,
    pub kick_oam_l: u32,
    /// Δ_e = ω_e − ω_res; red detuning is negative.
    pub delta_e: f64,
    /// Scalar polarizability α(ω_e), SI (C·m²/V).
    pub polarizability: f64,
    pub pulse_duration: f64,
    /// Rotor constant ω₀ = C(r_l)/ħ of the trapped atoms, rad/s.
    pub omega_0: f64,
}

impl RamanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("raman.b_p0", self.b_p0),
            ("raman.b_s0", self.b_s0),
            ("raman.kick_power", self.kick_power),
            ("raman.polarizability", self.polarizability),
            ("raman.pulse_duration", self.pulse_duration),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        require_positive("raman.kick_waist", self.kick_waist)?;
        require_positive("raman.omega_0", self.omega_0)?;
        if self.kick_oam_l == 0 {
            return Err(invalid("raman.kick_oam_l", "must be >= 1"));
        }
        for (name, v) in [("raman.delta_hf", self.delta_hf), ("raman.delta_e", self.delta_e)] {
            if !(v.is_finite() && v != 0.0) {
                return Err(invalid(name, format!("must be finite and nonzero, got {v}")));
            }
        }
        Ok(())
    }

    /// The kick beam's intensity ring must sit on the trap ring:
    /// w_e√(L/2) = w0√(l/2).
    pub fn check_matching(&self, beam: &BeamConfig) -> Result<()> {
        let kick = self.kick_waist * (self.kick_oam_l as f64 / 2.0).sqrt();
        let trap = beam.ring_radius(0.0);
        let rel = (kick - trap).abs() / trap;
        if rel > 1e-6 {
            return Err(invalid(
                "raman.kick_waist",
                format!("kick ring radius {kick:e} m does not match trap ring {trap:e} m (relative {rel:.2e})"),
            ));
        }
        Ok(())
    }

    /// Kick waist that satisfies the matching condition for `beam`.
    pub fn matched_kick_waist(beam: &BeamConfig, kick_oam_l: u32) -> f64 {
        beam.ring_radius(0.0) / (kick_oam_l as f64 / 2.0).sqrt()
    }

    /// ω_{2L,0} = ε_{2L}/ħ = 4L²ω₀.
    pub fn omega_2l(&self) -> f64 {
        4.0 * (self.kick_oam_l as f64).powi(2) * self.omega_0
    }

    pub fn omega_ps(&self) -> f64 {
        self.omega_p - self.omega_s
    }

    /// Violations of |Δ_e| ≥ r|Δ_hf| and |Δ_hf| ≥ r ω_{2L,0}.
    pub fn hierarchy_violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let a = self.delta_hf.abs() / self.delta_e.abs();
        if a > 1.0 / HIERARCHY_RATIO {
            out.push(Error::Validity {
                quantity: "|Delta_hf|/|Delta_e|".into(),
                ratio: a,
                limit: 1.0 / HIERARCHY_RATIO,
            });
        }
        let b = self.omega_2l() / self.delta_hf.abs();
        if b > 1.0 / HIERARCHY_RATIO {
            out.push(Error::Validity {
                quantity: "omega_2L/|Delta_hf|".into(),
                ratio: b,
                limit: 1.0 / HIERARCHY_RATIO,
            });
        }
        out
    }
}

/// Couplings of the effective two-level problem, all energies in J.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveCoupling {
    pub v: f64,
    pub v_b: f64,
    pub v_e: f64,
    /// Ω_R = 2√2 V/ħ, rad/s.
    pub omega_r: f64,
    /// Hierarchy violations; not fatal here.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// V_e = (4α/(ε₀πL!))·P_e L^L e^{−L}/(w_e²c): depth of the kick beam's
/// ring potential. α is SI, hence the 1/ε₀.
pub fn kick_potential(cfg: &RamanConfig) -> f64 {
    let l = cfg.kick_oam_l as f64;
    let shape = (l * l.ln() - l - ln_factorial(cfg.kick_oam_l)).exp();
    4.0 * cfg.polarizability / (CODATA.epsilon_0 * PI) * cfg.kick_power * shape
        / (cfg.kick_waist * cfg.kick_waist * CODATA.c)
}

/// V_b = g²μ_B²B_pB_s/(3ħΔ_hf).
pub fn rf_potential(cfg: &RamanConfig, species: &AtomSpecies) -> f64 {
    let gm = species.g_factor * CODATA.mu_b;
    gm * gm * cfg.b_p0 * cfg.b_s0 / (3.0 * HBAR * cfg.delta_hf.abs())
}

pub fn effective_coupling(cfg: &RamanConfig, species: &AtomSpecies) -> Result<EffectiveCoupling> {
    cfg.validate()?;
    let v_b = rf_potential(cfg, species);
    let v_e = kick_potential(cfg);
    let v = v_e * v_b / (HBAR * cfg.delta_hf.abs());
    Ok(EffectiveCoupling {
        v,
        v_b,
        v_e,
        omega_r: 2.0 * 2f64.sqrt() * v / HBAR,
        warnings: cfg.hierarchy_violations().iter().map(ToString::to_string).collect(),
    })
}

pub use five_level::{adiabatic_eliminate, five_level_model, EffectiveTwoLevel, FiveLevelModel};
pub use rabi::{evolve_rwa, rwa_hamiltonian, transition_probability_closed_form};

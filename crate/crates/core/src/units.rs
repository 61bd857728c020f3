//! Physical constants, atomic species and the handful of unit conversions the
//! model needs. Energies are joules everywhere; these helpers convert to
//! k_B·kelvin and angular frequency for reporting.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};

/// CODATA 2018 values (SI). Only constructible through `CODATA`.
#[allow(clippy::manual_non_exhaustive)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub mu_b: f64,
    pub c: f64,
    pub epsilon_0: f64,
    pub atomic_mass_unit: f64,
    _sealed: (),
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    mu_b: 9.274_010_078_3e-24,
    c: 299_792_458.0,
    epsilon_0: 8.854_187_812_8e-12,
    atomic_mass_unit: 1.660_539_066_60e-27,
    _sealed: (),
};

pub const HBAR: f64 = CODATA.hbar;
pub const K_B: f64 = CODATA.k_b;

/// A half-integer quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInteger(twice)
    }

    /// Accepts values that are integer multiples of ½.
    pub fn from_f64(x: f64) -> Option<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 {
            return None;
        }
        Some(HalfInteger(twice.round() as i32))
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// 2F + 1 for a hyperfine manifold F.
    pub fn multiplicity(self) -> u32 {
        (self.0 + 1).max(0) as u32
    }
}

impl std::fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub label: String,
    /// kg
    pub mass: f64,
    /// |g_F| of the ground hyperfine manifold.
    pub g_factor: f64,
    /// ω_hf, rad/s
    pub hyperfine_splitting: f64,
    pub f_ground: HalfInteger,
}

/// ⁶Li ground state. |g_F| = 2/3 for F = 1/2; ω_hf ≈ 2π × 228 MHz.
pub fn lithium6() -> AtomSpecies {
    AtomSpecies {
        label: "6Li".to_string(),
        mass: 6.015_122_887_4 * CODATA.atomic_mass_unit,
        g_factor: 2.0 / 3.0,
        hyperfine_splitting: 1.43e9,
        f_ground: HalfInteger::from_twice(1),
    }
}

impl AtomSpecies {
    pub fn validate(&self) -> Result<()> {
        require_positive("species.mass", self.mass)?;
        require_positive("species.hyperfine_splitting", self.hyperfine_splitting)?;
        if !self.g_factor.is_finite() {
            return Err(invalid("species.g_factor", "must be finite"));
        }
        if self.f_ground.twice() < 1 {
            return Err(invalid("species.f_ground", "must be one of 1/2, 1, 3/2, ..."));
        }
        Ok(())
    }
}

/// E₀ = ħ²k²/(2M) with k = 2π/λ.
pub fn recoil_energy(species: &AtomSpecies, wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    let k = 2.0 * std::f64::consts::PI / wavelength;
    Ok(HBAR * HBAR * k * k / (2.0 * species.mass))
}

pub fn joule_to_kelvin(e: f64) -> f64 {
    e / K_B
}

pub fn kelvin_to_joule(t: f64) -> f64 {
    t * K_B
}

pub fn joule_to_angular(e: f64) -> f64 {
    e / HBAR
}

pub fn angular_to_joule(w: f64) -> f64 {
    w * HBAR
}

/// How a trap depth is supplied in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySpec {
    /// Multiples of the recoil energy at the trap wavelength.
    Recoil(f64),
    Joules(f64),
    Kelvin(f64),
}

impl EnergySpec {
    pub fn to_joules(self, recoil: f64) -> f64 {
        match self {
            EnergySpec::Recoil(x) => x * recoil,
            EnergySpec::Joules(x) => x,
            EnergySpec::Kelvin(x) => kelvin_to_joule(x),
        }
    }
}

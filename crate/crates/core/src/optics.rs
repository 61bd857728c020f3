//! Laguerre–Gauss beams and the ring-lattice potential formed by two
//! counter-propagating LG modes.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::units::{recoil_energy, AtomSpecies, CODATA, HBAR};

/// How the beam radius varies along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// Standard Gaussian-beam spreading with z_R = πw0²/λ.
    Rayleigh,
    /// w(z) = w0 everywhere.
    Collimated,
    /// Gaussian-beam form with z_R replaced by the given length (m).
    Effective(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub wavelength: f64,
    pub waist_w0: f64,
    pub power_p0: f64,
    pub oam_l: i32,
    pub radial_p: u32,
    pub phase_z0: f64,
    /// V₀ in joules.
    pub trap_depth_v0: f64,
    pub divergence: Divergence,
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("beam.wavelength", self.wavelength)?;
        require_positive("beam.waist_w0", self.waist_w0)?;
        if !(self.power_p0.is_finite() && self.power_p0 >= 0.0) {
            return Err(invalid("beam.power_p0", "must be finite and >= 0"));
        }
        if !(self.phase_z0 > 0.0 && self.phase_z0 < self.wavelength / 2.0) {
            return Err(invalid(
                "beam.phase_z0",
                format!(
                    "must satisfy 0 < z0 < wavelength/2 = {:e} m, got {:e} m",
                    self.wavelength / 2.0,
                    self.phase_z0
                ),
            ));
        }
        require_positive("beam.trap_depth_v0", self.trap_depth_v0)?;
        if let Divergence::Effective(z) = self.divergence {
            require_positive("beam.divergence.effective", z)?;
        }
        Ok(())
    }

    pub(crate) fn require_fundamental_radial(&self) -> Result<()> {
        if self.radial_p != 0 {
            return Err(Error::UnsupportedMode(format!(
                "radial index p = {} (only p = 0 ring traps are modelled)",
                self.radial_p
            )));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist_w0 * self.waist_w0 / self.wavelength
    }

    /// The length scale controlling w(z); `None` when collimated.
    fn spread_length(&self) -> Option<f64> {
        match self.divergence {
            Divergence::Rayleigh => Some(self.rayleigh_range()),
            Divergence::Collimated => None,
            Divergence::Effective(z) => Some(z),
        }
    }

    /// w(z) = w0·√(1 + (z/z_R)²).
    pub fn beam_radius(&self, z: f64) -> f64 {
        self.waist_w0 * self.waist_ratio(z)
    }

    /// 𝔴(z) = w(z)/w0.
    pub fn waist_ratio(&self, z: f64) -> f64 {
        match self.spread_length() {
            Some(zr) => (1.0 + (z / zr).powi(2)).sqrt(),
            None => 1.0,
        }
    }

    /// Radius of maximal intensity, r_l(z) = w(z)·√(|l|/2).
    pub fn ring_radius(&self, z: f64) -> f64 {
        self.beam_radius(z) * (self.oam_l.unsigned_abs() as f64 / 2.0).sqrt()
    }

    /// Axial position of ring j: z_j = πj/k + z₀.
    pub fn ring_z(&self, j: i32) -> f64 {
        PI * j as f64 / self.wavenumber() + self.phase_z0
    }
}

/// Generalized Laguerre polynomial L_p^α(x) by upward recurrence.
pub fn assoc_laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// u_{l,p}(r, φ, z): the LG mode amplitude with Gouy phase, wavefront
/// curvature and azimuthal phase e^{−ilφ}. Scale is √(P0/c)/w(z).
pub fn lg_mode_amplitude(beam: &BeamConfig, r: f64, phi: f64, z: f64) -> Result<Complex<f64>> {
    if !(r >= 0.0) {
        return Err(invalid("r", "must be >= 0"));
    }
    let l = beam.oam_l.unsigned_abs();
    let p = beam.radial_p;
    let w = beam.beam_radius(z);
    let ln_norm = 0.5 * ((2.0f64).ln() + ln_factorial(p) - PI.ln() - ln_factorial(p + l));
    let x = 2.0 * r * r / (w * w);
    let radial = if l == 0 {
        1.0
    } else {
        (r * 2f64.sqrt() / w).powi(l as i32)
    };
    let mag = ln_norm.exp() * (beam.power_p0 / CODATA.c).sqrt() / w
        * radial
        * (-r * r / (w * w)).exp()
        * assoc_laguerre(p, l as f64, x);
    let (curvature, gouy) = match beam.spread_length() {
        Some(zr) => (
            -beam.wavenumber() * r * r * z / (2.0 * (z * z + zr * zr)),
            (2 * p + l + 1) as f64 * (z / zr).atan(),
        ),
        None => (0.0, 0.0),
    };
    let phase = curvature - beam.oam_l as f64 * phi + gouy;
    Ok(Complex::from_polar(mag, phase))
}

/// Radial intensity profile normalized to 1 at the ring maximum of the
/// same z-plane: ρ^{2|l|} e^{−|l|(ρ²−1)}, or e^{−2r²/w²} for l = 0.
fn ring_profile(l: u32, r: f64, w: f64) -> f64 {
    let x = 2.0 * r * r / (w * w);
    if l == 0 {
        return (-x).exp();
    }
    if x == 0.0 {
        return 0.0;
    }
    let l = l as f64;
    (l * (x / l).ln() - x + l).exp()
}

/// V(r, z) = −V₀ cos²(k(z − z₀)) · ρ^{2|l|} e^{−|l|(ρ²−1)} / 𝔴²(z).
pub fn optical_potential(beam: &BeamConfig, r: f64, z: f64) -> Result<f64> {
    beam.require_fundamental_radial()?;
    let c = (beam.wavenumber() * (z - beam.phase_z0)).cos();
    let wr = beam.waist_ratio(z);
    Ok(-beam.trap_depth_v0 * c * c * ring_profile(beam.oam_l.unsigned_abs(), r, beam.beam_radius(z)) / (wr * wr))
}

/// Local geometry of ring j in the harmonic approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapGeometry {
    pub ring_index_j: i32,
    pub z_j: f64,
    pub r_l: f64,
    pub w_at_zj: f64,
    pub omega_z: f64,
    pub b_z: f64,
    pub omega_r: f64,
    pub b_r: f64,
    pub depth_at_ring: f64,
}

fn geometry(beam: &BeamConfig, species: &AtomSpecies, j: i32) -> Result<TrapGeometry> {
    let e0 = recoil_energy(species, beam.wavelength)?;
    let v0 = beam.trap_depth_v0;
    let z_j = beam.ring_z(j);
    let wr = beam.waist_ratio(z_j);
    let w = beam.beam_radius(z_j);
    let k = beam.wavenumber();
    let omega_z = 2.0 / wr * (e0 * v0).sqrt() / HBAR;
    let b_z = wr.sqrt() / k * (e0 / v0).powf(0.25);
    let l = beam.oam_l.unsigned_abs();
    let radial_stiffness = if l == 0 {
        4.0 * v0 / (wr * wr * w * w)
    } else {
        8.0 * v0 / (wr * wr * w * w)
    };
    let omega_r = (radial_stiffness / species.mass).sqrt();
    Ok(TrapGeometry {
        ring_index_j: j,
        z_j,
        r_l: beam.ring_radius(z_j),
        w_at_zj: w,
        omega_z,
        b_z,
        omega_r,
        b_r: (HBAR / (species.mass * omega_r)).sqrt(),
        depth_at_ring: -v0 / (wr * wr),
    })
}

/// Geometry of every ring in `j_range`.
pub fn ring_minima(
    beam: &BeamConfig,
    species: &AtomSpecies,
    j_range: std::ops::RangeInclusive<i32>,
) -> Result<Vec<TrapGeometry>> {
    beam.validate()?;
    j_range.map(|j| geometry(beam, species, j)).collect()
}

/// Separated potentials of ring j: the full radial profile V_l(r) = V(r, z_j)
/// and the harmonic axial well W_j(z).
#[derive(Debug, Clone)]
pub struct HarmonicDecomposition {
    beam: BeamConfig,
    pub geometry: TrapGeometry,
    /// Coefficient of (z − z_j)² in W_j, i.e. V₀k²/𝔴²(z_j).
    pub axial_coefficient: f64,
}

impl HarmonicDecomposition {
    pub fn radial(&self, r: f64) -> f64 {
        let z = self.geometry.z_j;
        let wr = self.beam.waist_ratio(z);
        -self.beam.trap_depth_v0 * ring_profile(self.beam.oam_l.unsigned_abs(), r, self.beam.beam_radius(z)) / (wr * wr)
    }

    pub fn axial(&self, z: f64) -> f64 {
        let d = z - self.geometry.z_j;
        self.axial_coefficient * d * d
    }

    /// Analytic V_l''(r_l) = 4|l|V₀/(𝔴² r_l²).
    pub fn radial_curvature(&self) -> f64 {
        let g = &self.geometry;
        let wr = g.w_at_zj / self.beam.waist_w0;
        4.0 * self.beam.oam_l.unsigned_abs() as f64 * self.beam.trap_depth_v0 / (wr * wr * g.r_l * g.r_l)
    }
}

pub fn harmonic_decomposition(beam: &BeamConfig, species: &AtomSpecies, j: i32) -> Result<HarmonicDecomposition> {
    beam.validate()?;
    beam.require_fundamental_radial()?;
    let geometry = geometry(beam, species, j)?;
    let wr = beam.waist_ratio(geometry.z_j);
    let k = beam.wavenumber();
    Ok(HarmonicDecomposition {
        beam: beam.clone(),
        geometry,
        axial_coefficient: beam.trap_depth_v0 * k * k / (wr * wr),
    })
}

/// Optional route to V₀ from a polarizability (SI, C·m²/V) and beam power:
/// V₀ = 4(α/ε₀)|u(r_l, z=0)|², the factor 4 coming from the standing wave.
pub fn trap_depth_from_polarizability(alpha_si: f64, power: f64, w0: f64, oam_l: i32) -> f64 {
    let l = oam_l.unsigned_abs();
    let lf = l as f64;
    let peak = if l == 0 { 1.0 } else { (lf * lf.ln() - lf).exp() };
    let u2 = 2.0 / (PI * ln_factorial(l).exp()) * power / CODATA.c / (w0 * w0) * peak;
    4.0 * alpha_si / CODATA.epsilon_0 * u2
}

//! Run configuration: JSON sections with defaults for every field, turned
//! into validated module configs before anything is computed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, require_positive, Error, Result};
use crate::optics::{BeamConfig, Divergence};
use crate::raman::fit::FitModel;
use crate::raman::lineshape::ShiftModel;
use crate::raman::RamanConfig;
use crate::sensor::SensorConfig;
use crate::spectrum::{rotational_constant, SolverOptions, SpectrumLimits};

/// Reference two-photon Rabi frequency (rad/s); not π.
#[allow(clippy::approx_constant)]
const REFERENCE_OMEGA_R: f64 = 3.142;
use crate::units::{lithium6, recoil_energy, AtomSpecies, EnergySpec, HalfInteger, CODATA, HBAR};

/// An angle given either as a bare number (radians) or as a string with an
/// explicit `deg` or `rad` suffix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (num, scale) = if let Some(v) = t.strip_suffix("deg") {
            (v, std::f64::consts::PI / 180.0)
        } else if let Some(v) = t.strip_suffix("rad") {
            (v, 1.0)
        } else {
            return Err(invalid(
                "angle",
                format!("`{s}` needs an explicit `deg` or `rad` suffix"),
            ));
        };
        let x: f64 = num
            .trim()
            .parse()
            .map_err(|_| invalid("angle", format!("`{s}` is not a number followed by a unit")))?;
        if !x.is_finite() {
            return Err(invalid("angle", format!("`{s}` is not finite")));
        }
        Ok(Angle(x * scale))
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Angle(x)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesSection {
    pub label: String,
    /// Atomic mass units.
    pub mass_u: f64,
    pub g_factor: f64,
    /// rad/s
    pub hyperfine_splitting: f64,
    pub f_ground: f64,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        let li = lithium6();
        SpeciesSection {
            label: li.label,
            mass_u: 6.015_122_887_4,
            g_factor: li.g_factor,
            hyperfine_splitting: li.hyperfine_splitting,
            f_ground: 0.5,
        }
    }
}

impl SpeciesSection {
    pub fn build(&self) -> Result<AtomSpecies> {
        let f_ground = HalfInteger::from_f64(self.f_ground)
            .ok_or_else(|| invalid("species.f_ground", format!("{} is not a half-integer", self.f_ground)))?;
        let s = AtomSpecies {
            label: self.label.clone(),
            mass: self.mass_u * CODATA.atomic_mass_unit,
            g_factor: self.g_factor,
            hyperfine_splitting: self.hyperfine_splitting,
            f_ground,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub wavelength: f64,
    pub waist_w0: f64,
    pub power_p0: f64,
    pub oam_l: i32,
    pub radial_p: u32,
    /// Defaults to a quarter wavelength.
    pub phase_z0: Option<f64>,
    pub trap_depth_v0: EnergySpec,
    pub divergence: Divergence,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            wavelength: 671e-9,
            waist_w0: 10e-6,
            power_p0: 1.0,
            oam_l: 5,
            radial_p: 0,
            phase_z0: None,
            trap_depth_v0: EnergySpec::Recoil(10.0),
            divergence: Divergence::Rayleigh,
        }
    }
}

impl BeamSection {
    pub fn build(&self, species: &AtomSpecies) -> Result<BeamConfig> {
        require_positive("beam.wavelength", self.wavelength)?;
        let recoil = recoil_energy(species, self.wavelength)?;
        let b = BeamConfig {
            wavelength: self.wavelength,
            waist_w0: self.waist_w0,
            power_p0: self.power_p0,
            oam_l: self.oam_l,
            radial_p: self.radial_p,
            phase_z0: self.phase_z0.unwrap_or(self.wavelength / 4.0),
            trap_depth_v0: self.trap_depth_v0.to_joules(recoil),
            divergence: self.divergence,
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub n_z_max: u32,
    pub n_r_max: u32,
    pub m_max: u32,
    pub grid_points: usize,
    pub richardson: bool,
    /// Ratio read as "≫" in ε_z ≫ ε_r ≫ ε_ℓ.
    pub threshold: f64,
    /// Exit with a validity error when the chain fails.
    pub fatal_inequalities: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            n_z_max: 1,
            n_r_max: 1,
            m_max: 10,
            grid_points: 2000,
            richardson: true,
            threshold: 10.0,
            fatal_inequalities: false,
        }
    }
}

impl SpectrumSection {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 50 {
            return Err(invalid("spectrum.grid_points", "must be >= 50"));
        }
        require_positive("spectrum.threshold", self.threshold)
    }

    pub fn limits(&self) -> SpectrumLimits {
        SpectrumLimits {
            n_z_max: self.n_z_max,
            n_r_max: self.n_r_max,
            m_max: self.m_max,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            points: self.grid_points,
            richardson: self.richardson,
            ..SolverOptions::default()
        }
    }
}

/// Ring-to-ring shift as configured; `calibrated_quadratic` picks the
/// quadratic scale that places the ensemble peak at `target_delta_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftSection {
    Zero,
    /// Scale in units of Ω_R.
    Quadratic {
        scale: f64,
    },
    /// Target peak position in units of Ω_R.
    CalibratedQuadratic {
        target_delta_max: f64,
    },
    Physical {
        z_eff: f64,
    },
    AsPrinted {
        z_eff: f64,
    },
}

impl ShiftSection {
    /// The model for a fixed scale; `None` when calibration is needed.
    pub fn fixed(&self, omega_r: f64) -> Option<ShiftModel> {
        match *self {
            ShiftSection::Zero => Some(ShiftModel::Zero),
            ShiftSection::Quadratic { scale } => Some(ShiftModel::Quadratic { scale: scale * omega_r }),
            ShiftSection::CalibratedQuadratic { .. } => None,
            ShiftSection::Physical { z_eff } => Some(ShiftModel::Physical { z_eff }),
            ShiftSection::AsPrinted { z_eff } => Some(ShiftModel::AsPrinted { z_eff }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// δ/Ω_R range and sample count.
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            lo: -8.0,
            hi: 8.0,
            points: 801,
        }
    }
}

fn default_fig4_omega_r() -> Option<f64> {
    Some(REFERENCE_OMEGA_R)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineshapeSection {
    /// rad/s; `null` derives it from the `raman` section.
    #[serde(default = "default_fig4_omega_r")]
    pub omega_r: Option<f64>,
    /// s; defaults to π/Ω_R.
    pub tau: Option<f64>,
    pub kick_oam_l: u32,
    pub j_max: u32,
    pub shift: ShiftSection,
    pub grid: GridSection,
    pub fit: FitModel,
}

impl Default for LineshapeSection {
    fn default() -> Self {
        LineshapeSection {
            omega_r: default_fig4_omega_r(),
            tau: None,
            kick_oam_l: 25,
            j_max: 80,
            shift: ShiftSection::CalibratedQuadratic {
                target_delta_max: -0.5374,
            },
            grid: GridSection::default(),
            fit: FitModel::PiPulse,
        }
    }
}

impl LineshapeSection {
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.omega_r {
            require_positive("lineshape.omega_r", w)?;
        }
        if let Some(t) = self.tau {
            require_positive("lineshape.tau", t)?;
        }
        if self.kick_oam_l == 0 {
            return Err(invalid("lineshape.kick_oam_l", "must be >= 1"));
        }
        if !(self.grid.lo < self.grid.hi) || !self.grid.lo.is_finite() || !self.grid.hi.is_finite() {
            return Err(invalid("lineshape.grid", "need finite lo < hi"));
        }
        if self.grid.points < 2 {
            return Err(invalid("lineshape.grid.points", "must be >= 2"));
        }
        match self.shift {
            ShiftSection::Quadratic { scale } if !(scale.is_finite() && scale >= 0.0) => {
                Err(invalid("lineshape.shift.scale", "must be >= 0"))
            }
            ShiftSection::CalibratedQuadratic { target_delta_max } if !(target_delta_max < 0.0) => Err(invalid(
                "lineshape.shift.target_delta_max",
                "must be negative (quadratic shifts move the peak to the red)",
            )),
            ShiftSection::Physical { z_eff } | ShiftSection::AsPrinted { z_eff } => {
                require_positive("lineshape.shift.z_eff", z_eff)
            }
            _ => Ok(()),
        }?;
        if let FitModel::FixedDuration { tau } = self.fit {
            require_positive("lineshape.fit.tau", tau)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanSection {
    pub b_p0: f64,
    pub b_s0: f64,
    pub omega_p: f64,
    pub omega_s: f64,
    pub delta_hf: f64,
    pub kick_power: f64,
    /// Defaults to the waist matching the trap ring.
    #[serde(default)]
    pub kick_waist: Option<f64>,
    pub kick_oam_l: u32,
    pub delta_e: f64,
    pub polarizability: f64,
    #[serde(default)]
    pub pulse_duration: f64,
    /// Defaults to C(r_l)/ħ of the configured beam.
    #[serde(default)]
    pub omega_0: Option<f64>,
    /// Treat detuning-hierarchy violations as errors.
    #[serde(default)]
    pub fatal_hierarchy: bool,
}

impl RamanSection {
    pub fn build(&self, beam: &BeamConfig, species: &AtomSpecies) -> Result<RamanConfig> {
        let omega_0 = match self.omega_0 {
            Some(w) => w,
            None => rotational_constant(beam.ring_radius(0.0), species)? / HBAR,
        };
        let cfg = RamanConfig {
            b_p0: self.b_p0,
            b_s0: self.b_s0,
            omega_p: self.omega_p,
            omega_s: self.omega_s,
            delta_hf: self.delta_hf,
            kick_power: self.kick_power,
            kick_waist: self
                .kick_waist
                .unwrap_or_else(|| RamanConfig::matched_kick_waist(beam, self.kick_oam_l.max(1))),
            kick_oam_l: self.kick_oam_l,
            delta_e: self.delta_e,
            polarizability: self.polarizability,
            pulse_duration: self.pulse_duration,
            omega_0,
        };
        cfg.validate()?;
        if self.fatal_hierarchy {
            if let Some(e) = cfg.hierarchy_violations().into_iter().next() {
                return Err(e);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub kick_oam_l: u32,
    pub ring_count: u32,
    pub omega_0: f64,
    pub omega_r: f64,
    /// rad/s; default is half of `fractional_stability·omega_p` on each laser.
    pub freq_uncertainty_pump: Option<f64>,
    pub freq_uncertainty_stokes: Option<f64>,
    pub fractional_stability: f64,
    /// rad/s; defaults to the species hyperfine splitting.
    pub omega_p: Option<f64>,
    pub photon_count_pump: f64,
    pub photon_count_stokes: f64,
    pub delta_hf: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        SensorSection {
            kick_oam_l: 25,
            ring_count: 161,
            omega_0: 21.13,
            omega_r: REFERENCE_OMEGA_R,
            freq_uncertainty_pump: None,
            freq_uncertainty_stokes: None,
            fractional_stability: 2e-18,
            omega_p: None,
            photon_count_pump: 1e29,
            photon_count_stokes: 1e29,
            delta_hf: 1.26e8,
        }
    }
}

impl SensorSection {
    pub fn build(&self, species: &AtomSpecies) -> Result<SensorConfig> {
        if !(self.fractional_stability.is_finite() && self.fractional_stability >= 0.0) {
            return Err(invalid("sensor.fractional_stability", "must be >= 0"));
        }
        let omega_p = self.omega_p.unwrap_or(species.hyperfine_splitting);
        require_positive("sensor.omega_p", omega_p)?;
        let half = 0.5 * self.fractional_stability * omega_p;
        let cfg = SensorConfig {
            kick_oam_l: self.kick_oam_l,
            ring_count: self.ring_count,
            omega_0: self.omega_0,
            omega_r: self.omega_r,
            freq_uncertainty_pump: self.freq_uncertainty_pump.unwrap_or(half),
            freq_uncertainty_stokes: self.freq_uncertainty_stokes.unwrap_or(half),
            photon_count_pump: self.photon_count_pump,
            photon_count_stokes: self.photon_count_stokes,
            delta_hf: self.delta_hf,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    /// rad/s
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            omega_min: -50.0,
            omega_max: 50.0,
            points: 201,
        }
    }
}

impl ScanSection {
    pub fn omegas(&self) -> Result<Vec<f64>> {
        if !(self.omega_min.is_finite() && self.omega_max.is_finite() && self.omega_min <= self.omega_max) {
            return Err(invalid("rotation_scan.omega_min", "need finite omega_min <= omega_max"));
        }
        if self.points == 0 {
            return Err(invalid("rotation_scan.points", "must be >= 1"));
        }
        if self.points == 1 {
            return Ok(vec![self.omega_min]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.omega_min + (self.omega_max - self.omega_min) * i as f64 / n)
            .collect())
    }
}

/// In-plane acceleration given by magnitude and azimuth in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InPlaneAcceleration {
    pub magnitude: f64,
    pub azimuth: Angle,
}

impl InPlaneAcceleration {
    pub fn vector(&self) -> [f64; 3] {
        let phi = self.azimuth.radians();
        [self.magnitude * phi.cos(), self.magnitude * phi.sin(), 0.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiltSection {
    pub gravity: [f64; 3],
    pub acceleration: [f64; 3],
    /// Overrides `acceleration` when present.
    pub acceleration_in_plane: Option<InPlaneAcceleration>,
    pub angular_velocity: [f64; 3],
}

impl Default for TiltSection {
    fn default() -> Self {
        TiltSection {
            gravity: [0.0, 0.0, -9.81],
            acceleration: [0.0; 3],
            acceleration_in_plane: None,
            angular_velocity: [0.0, 0.0, 7.292e-5],
        }
    }
}

impl TiltSection {
    pub fn acceleration_vector(&self) -> [f64; 3] {
        self.acceleration_in_plane.map_or(self.acceleration, |a| a.vector())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tilt.gravity", self.gravity),
            ("tilt.acceleration", self.acceleration_vector()),
            ("tilt.angular_velocity", self.angular_velocity),
        ] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(name, "components must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub species: SpeciesSection,
    pub beam: BeamSection,
    pub spectrum: SpectrumSection,
    pub lineshape: LineshapeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raman: Option<RamanSection>,
    pub sensor: SensorSection,
    pub rotation_scan: ScanSection,
    pub tilt: TiltSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
}

/// Validated module configs derived from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub species: AtomSpecies,
    pub beam: BeamConfig,
    pub raman: Option<RamanConfig>,
    pub sensor: SensorConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let species = self.species.build()?;
        let beam = self.beam.build(&species)?;
        self.spectrum.validate()?;
        self.lineshape.validate()?;
        self.tilt.validate()?;
        self.rotation_scan.omegas()?;
        if self.parallelism == Some(0) {
            return Err(invalid("parallelism", "must be >= 1"));
        }
        let raman = self.raman.as_ref().map(|r| r.build(&beam, &species)).transpose()?;
        if self.lineshape.omega_r.is_none() && raman.is_none() {
            return Err(invalid(
                "lineshape.omega_r",
                "null requires a `raman` section to derive it from",
            ));
        }
        let sensor = self.sensor.build(&species)?;
        Ok(Resolved {
            species,
            beam,
            raman,
            sensor,
        })
    }
}

/// Read, parse and validate a config file.
pub fn parse_config(path: &Path) -> Result<(RunConfig, Resolved)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read `{}`: {e}", path.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let resolved = cfg.resolve()?;
    Ok((cfg, resolved))
}

//! Ensemble lineshape over the ring lattice: every ring j sees the Raman
//! drive at its own detuning δ_j, and the measured transfer is the mean of
//! the single-ring probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rabi::transition_probability_closed_form;
use crate::error::{invalid, require_positive, Result};
use crate::optics::BeamConfig;
use crate::spectrum::rotational_constant;
use crate::units::{AtomSpecies, HBAR};

/// How the resonance of ring j moves away from that of ring 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShiftModel {
    /// All rings identical.
    Zero,
    /// δ_j = δ + s·j² with s ≥ 0 in rad/s.
    Quadratic { scale: f64 },
    /// δ_j = δ + 4L²(ω₀(r_l(z_0)) − ω₀(r_l(z_j))) with the ring radius
    /// following w(z) of the given divergence length.
    Physical { z_eff: f64 },
    /// The same difference additionally multiplied by j².
    AsPrinted { z_eff: f64 },
}

/// Pulse parameters shared by every ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiDrive {
    pub omega_r: f64,
    pub tau: f64,
    pub kick_oam_l: u32,
}

impl RabiDrive {
    /// π pulse at resonance.
    pub fn pi_pulse(omega_r: f64, kick_oam_l: u32) -> Self {
        RabiDrive {
            omega_r,
            tau: std::f64::consts::PI / omega_r,
            kick_oam_l,
        }
    }
}

/// δ_j − δ for j = −j_max..=j_max.
pub fn ring_offsets(
    beam: &BeamConfig,
    species: &AtomSpecies,
    drive: &RabiDrive,
    j_max: u32,
    model: &ShiftModel,
) -> Result<Vec<f64>> {
    let js = -(j_max as i32)..=(j_max as i32);
    match *model {
        ShiftModel::Zero => Ok(js.map(|_| 0.0).collect()),
        ShiftModel::Quadratic { scale } => {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(invalid("shift_model.scale", format!("must be >= 0, got {scale}")));
            }
            Ok(js.map(|j| scale * (j * j) as f64).collect())
        }
        ShiftModel::Physical { z_eff } | ShiftModel::AsPrinted { z_eff } => {
            require_positive("shift_model.z_eff", z_eff)?;
            let mut b = beam.clone();
            b.divergence = crate::optics::Divergence::Effective(z_eff);
            let w0 = |j: i32| -> Result<f64> { Ok(rotational_constant(b.ring_radius(b.ring_z(j)), species)? / HBAR) };
            let reference = w0(0)?;
            let l2 = 4.0 * (drive.kick_oam_l as f64).powi(2);
            let as_printed = matches!(model, ShiftModel::AsPrinted { .. });
            js.map(|j| {
                let d = l2 * (reference - w0(j)?);
                Ok(if as_printed { d * (j * j) as f64 } else { d })
            })
            .collect()
        }
    }
}

/// P(δ) = (1/N)Σ_j P₀(δ + offset_j) for a fixed set of ring offsets.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub offsets: Vec<f64>,
    pub drive: RabiDrive,
}

impl Ensemble {
    pub fn probability(&self, delta: f64) -> f64 {
        let sum: f64 = self
            .offsets
            .iter()
            .map(|o| transition_probability_closed_form(delta + o, self.drive.omega_r, self.drive.tau))
            .sum();
        sum / self.offsets.len() as f64
    }

    /// Global maximum of P on [lo, hi]: dense scan then golden-section refinement.
    pub fn peak(&self, lo: f64, hi: f64) -> (f64, f64) {
        let n = (((hi - lo) / self.drive.omega_r) * 200.0).ceil().max(50.0) as usize;
        let step = (hi - lo) / n as f64;
        let best = (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|d| (d, self.probability(d)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty scan");
        self.refine(best.0 - step, best.0 + step)
    }

    /// Local maximum near `guess`, searched within ±`half_width`.
    pub fn local_peak(&self, guess: f64, half_width: f64) -> (f64, f64) {
        self.peak(guess - half_width, guess + half_width)
    }

    fn refine(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.probability(c), self.probability(d));
        for _ in 0..200 {
            if (b - a).abs() <= 1e-13 * self.drive.omega_r {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.probability(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.probability(d);
            }
        }
        let x = 0.5 * (a + b);
        (x, self.probability(x))
    }

    pub fn sample(&self, grid: &[f64], j_max: u32) -> Result<Lineshape> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "delta_grid",
                "must be strictly increasing with at least 2 points",
            ));
        }
        let probability = grid.par_iter().map(|&d| self.probability(d)).collect();
        Ok(Lineshape {
            delta_grid: grid.to_vec(),
            probability,
            omega_r: self.drive.omega_r,
            tau: self.drive.tau,
            j_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lineshape {
    pub delta_grid: Vec<f64>,
    pub probability: Vec<f64>,
    pub omega_r: f64,
    pub tau: f64,
    pub j_max: u32,
}

impl Lineshape {
    /// Grid point of maximal probability.
    pub fn grid_peak(&self) -> (f64, f64) {
        self.delta_grid
            .iter()
            .zip(&self.probability)
            .map(|(&d, &p)| (d, p))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty lineshape")
    }
}

pub fn ensemble(
    beam: &BeamConfig,
    species: &AtomSpecies,
    drive: &RabiDrive,
    j_max: u32,
    shift: &ShiftModel,
) -> Result<Ensemble> {
    require_positive("omega_r", drive.omega_r)?;
    Ok(Ensemble {
        offsets: ring_offsets(beam, species, drive, j_max, shift)?,
        drive: *drive,
    })
}

pub fn ensemble_lineshape(
    beam: &BeamConfig,
    species: &AtomSpecies,
    drive: &RabiDrive,
    j_max: u32,
    shift: &ShiftModel,
    delta_grid: &[f64],
) -> Result<Lineshape> {
    ensemble(beam, species, drive, j_max, shift)?.sample(delta_grid, j_max)
}

/// Uniform grid δ/Ω_R ∈ [lo, hi] with `points` samples, returned in rad/s.
pub fn uniform_grid(omega_r: f64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| omega_r * (lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub scale: f64,
    pub delta_max: f64,
    pub p_max: f64,
    /// False when the target peak position lies outside the principal branch;
    /// `scale` is then the point of closest approach.
    pub reached: bool,
}

/// Choose the quadratic scale s so that the ensemble peak sits at
/// `target_delta_max` (rad/s, negative). The peak is followed continuously
/// from s = 0 (the single-ring peak at δ = 0); if it never reaches the target
/// the scale of closest approach is returned with `reached = false`.
pub fn calibrate_quadratic_scale(drive: &RabiDrive, j_max: u32, target_delta_max: f64) -> Result<Calibration> {
    require_positive("omega_r", drive.omega_r)?;
    let w = drive.omega_r;
    let make = |s: f64| Ensemble {
        offsets: (-(j_max as i32)..=(j_max as i32)).map(|j| s * (j * j) as f64).collect(),
        drive: *drive,
    };
    let track = |s: f64, guess: f64| make(s).local_peak(guess, 0.25 * w);
    let calibration = |s: f64, reached: bool, guess: f64| {
        let (d, p) = track(s, guess);
        Calibration {
            scale: s,
            delta_max: d,
            p_max: p,
            reached,
        }
    };

    let mut s_prev = 0.0;
    let mut d_prev = 0.0;
    let mut s = 1e-7 * w;
    let ratio = 1.02;
    while s < 10.0 * w {
        let (d, _) = track(s, d_prev);
        if d <= target_delta_max {
            // bisection on the bracket [s_prev, s]
            let (mut a, mut b) = (s_prev, s);
            let mut guess = d_prev;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let (dm, _) = track(m, guess);
                if dm <= target_delta_max {
                    b = m;
                } else {
                    a = m;
                    guess = dm;
                }
            }
            return Ok(calibration(0.5 * (a + b), true, guess));
        }
        if d > d_prev && s_prev > 0.0 {
            // turned back: refine the minimum of δ_max(s) over [s/ratio², s]
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (s_prev / ratio, s);
            let f = |x: f64| track(x, d_prev).0;
            let mut c = b - g * (b - a);
            let mut e = a + g * (b - a);
            let (mut fc, mut fe) = (f(c), f(e));
            for _ in 0..100 {
                if fc < fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - g * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + g * (b - a);
                    fe = f(e);
                }
            }
            return Ok(calibration(0.5 * (a + b), false, d_prev));
        }
        s_prev = s;
        d_prev = d;
        s *= ratio;
    }
    Ok(calibration(s_prev, false, d_prev))
}

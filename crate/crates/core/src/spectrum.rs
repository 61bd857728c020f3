//! Bound states of an atom in one ring: axial and radial 1-D problems solved
//! by finite differences, then combined into the quantum-rotor spectrum.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::optics::{harmonic_decomposition, BeamConfig, HarmonicDecomposition};
use crate::tridiag::SymTridiagonal;
use crate::units::{AtomSpecies, HalfInteger, HBAR};

/// C(r) = ħ²/(2Mr²).
pub fn rotational_constant(r: f64, species: &AtomSpecies) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("must be > 0, got {r}")));
    }
    Ok(HBAR * HBAR / (2.0 * species.mass * r * r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Interior points of the coarse grid; the fine grid has 2n + 1.
    pub points: usize,
    /// Combine coarse and fine grids as (4E_fine − E_coarse)/3.
    pub richardson: bool,
    /// Axial half-width in units of b_z.
    pub axial_box: f64,
    /// Radial half-width in units of b_r.
    pub radial_box: f64,
    /// Smallest radius allowed for the radial grid, as a fraction of r_l.
    pub radial_floor: f64,
    /// Largest tolerated |E_fine − E_coarse| relative to the level spacing scale.
    pub max_grid_drift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            points: 2000,
            richardson: true,
            axial_box: 6.0,
            radial_box: 8.0,
            radial_floor: 1e-3,
            max_grid_drift: 1e-3,
        }
    }
}

/// Eigenpairs of a 1-D problem in oscillator units (length b, energy ħω):
/// H = −½ d²/dx² + u(x) on (x_min, x_max) with Dirichlet walls.
#[derive(Debug, Clone)]
pub struct Eigenstates {
    pub energies: Vec<f64>,
    /// Fine-grid abscissae.
    pub x: Vec<f64>,
    pub h: f64,
    /// Fine-grid eigenvectors, unit norm under Σ h·ψ².
    pub states: Vec<Vec<f64>>,
}

fn grid_matrix(u: &dyn Fn(f64) -> f64, x_min: f64, x_max: f64, n: usize) -> (SymTridiagonal, Vec<f64>, f64) {
    let h = (x_max - x_min) / (n + 1) as f64;
    let kin = 0.5 / (h * h);
    let x: Vec<f64> = (1..=n).map(|i| x_min + i as f64 * h).collect();
    let diag = x.iter().map(|&xi| 2.0 * kin + u(xi)).collect();
    (SymTridiagonal::new(diag, vec![-kin; n - 1]), x, h)
}

fn solve_scaled(
    context: &str,
    u: &dyn Fn(f64) -> f64,
    x_min: f64,
    x_max: f64,
    count: usize,
    opts: &SolverOptions,
    with_states: bool,
) -> Result<Eigenstates> {
    if opts.points < 16 {
        return Err(invalid("solver.points", "need at least 16 grid points"));
    }
    let (coarse, _, _) = grid_matrix(u, x_min, x_max, opts.points);
    let (fine, x, h) = grid_matrix(u, x_min, x_max, 2 * opts.points + 1);
    let e_c = coarse.lowest_eigenvalues(count);
    let e_f = fine.lowest_eigenvalues(count);
    let wall = u(x_min).min(u(x_max));
    let mut energies = Vec::with_capacity(count);
    for (k, (&c, &f)) in e_c.iter().zip(&e_f).enumerate() {
        let drift = (f - c).abs() / f.abs().max(1.0);
        if drift > opts.max_grid_drift {
            return Err(Error::Convergence {
                context: context.to_string(),
                detail: format!(
                    "level {k}: coarse/fine eigenvalues {c:.6e}/{f:.6e} differ by {drift:.2e} (limit {:.1e}); increase solver points",
                    opts.max_grid_drift
                ),
            });
        }
        if f >= wall {
            return Err(Error::Convergence {
                context: context.to_string(),
                detail: format!(
                    "level {k} at {f:.4} (oscillator units) is not bound below the box walls at {wall:.4}; enlarge the box"
                ),
            });
        }
        energies.push(if opts.richardson { (4.0 * f - c) / 3.0 } else { f });
    }
    let states = if with_states {
        e_f.iter()
            .map(|&l| {
                let s = h.sqrt();
                fine.eigenvector(l).into_iter().map(|v| v / s).collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Eigenstates { energies, x, h, states })
}

/// Axial levels ε_z(n_z), n_z = 0..=n_z_max, in joules above the well bottom.
pub fn solve_axial(
    beam: &BeamConfig,
    species: &AtomSpecies,
    j: i32,
    n_z_max: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let hd = harmonic_decomposition(beam, species, j)?;
    Ok(axial_states(&hd, n_z_max, opts, false)?
        .energies
        .into_iter()
        .map(|e| e * HBAR * hd.geometry.omega_z)
        .collect())
}

/// Axial eigenpairs in oscillator units about z_j (x = (z − z_j)/b_z).
pub fn axial_states(
    hd: &HarmonicDecomposition,
    n_z_max: usize,
    opts: &SolverOptions,
    with_states: bool,
) -> Result<Eigenstates> {
    let g = &hd.geometry;
    let scale = HBAR * g.omega_z;
    let u = |x: f64| hd.axial(g.z_j + x * g.b_z) / scale;
    solve_scaled(
        "axial eigensolve",
        &u,
        -opts.axial_box,
        opts.axial_box,
        n_z_max + 1,
        opts,
        with_states,
    )
}

/// Radial eigenpairs for χ = √r ψ in oscillator units about r_l
/// (x = (r − r_l)/b_r); energies relative to V_l(r_l).
pub fn radial_states(
    hd: &HarmonicDecomposition,
    m_ell: i32,
    n_r_max: usize,
    opts: &SolverOptions,
    with_states: bool,
) -> Result<Eigenstates> {
    let g = &hd.geometry;
    if g.r_l <= 0.0 {
        return Err(invalid("beam.oam_l", "a ring trap needs l != 0"));
    }
    let scale = HBAR * g.omega_r;
    let bottom = hd.radial(g.r_l);
    let m2 = (m_ell as f64).powi(2);
    let x_min = (-opts.radial_box).max((opts.radial_floor * g.r_l - g.r_l) / g.b_r);
    let u = |x: f64| {
        let r = g.r_l + x * g.b_r;
        (hd.radial(r) - bottom) / scale + 0.5 * (m2 - 0.25) * (g.b_r / r).powi(2)
    };
    solve_scaled(
        "radial eigensolve",
        &u,
        x_min,
        opts.radial_box,
        n_r_max + 1,
        opts,
        with_states,
    )
}

/// Radial levels ε_r(n_r, m_ℓ), n_r = 0..=n_r_max, in joules (absolute,
/// i.e. including the negative ring depth V_l(r_l)).
pub fn solve_radial(
    beam: &BeamConfig,
    species: &AtomSpecies,
    j: i32,
    m_ell: i32,
    n_r_max: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let hd = harmonic_decomposition(beam, species, j)?;
    radial_levels(&hd, m_ell, n_r_max, opts)
}

fn radial_levels(hd: &HarmonicDecomposition, m_ell: i32, n_r_max: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    let g = &hd.geometry;
    let bottom = hd.radial(g.r_l);
    Ok(radial_states(hd, m_ell, n_r_max, opts, false)?
        .energies
        .into_iter()
        .map(|e| bottom + e * HBAR * g.omega_r)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuantumNumbers {
    pub n_z: u32,
    pub n_r: u32,
    pub m_ell: i32,
    /// Sublevel label only; energies do not depend on it.
    #[serde(skip)]
    pub m_f: HalfInteger,
}

impl QuantumNumbers {
    pub fn new(n_z: u32, n_r: u32, m_ell: i32, m_f: HalfInteger, f_ground: HalfInteger) -> Result<Self> {
        if m_f.twice().abs() > f_ground.twice() || (m_f.twice() - f_ground.twice()) % 2 != 0 {
            return Err(invalid("m_F", format!("{m_f} is not a projection of F = {f_ground}")));
        }
        Ok(QuantumNumbers { n_z, n_r, m_ell, m_f })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLevel {
    pub qn: QuantumNumbers,
    /// Joules above the (0,0,0) level.
    pub energy: f64,
    /// (2F+1), doubled for m_ℓ ≠ 0 to cover ±m_ℓ.
    pub degeneracy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaps {
    pub axial: f64,
    pub radial: f64,
    pub orbital: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumLimits {
    pub n_z_max: u32,
    pub n_r_max: u32,
    pub m_max: u32,
}

#[derive(Debug, Clone)]
pub struct RotorSpectrum {
    /// Ascending in energy; one entry per (n_z, n_r, |m_ℓ|).
    pub levels: Vec<EnergyLevel>,
    pub gaps: Gaps,
    pub inequalities_ok: bool,
    /// Absolute energy of (0,0,0), joules.
    pub ground_energy: f64,
    /// Exact ε_r(0, m) − ε_r(0, 0) divided by m²C(r_l), per m = 1..=m_max.
    pub rigid_rotor_ratio: Vec<f64>,
}

impl RotorSpectrum {
    /// Level lookup accepting signed m_ℓ.
    pub fn level(&self, n_z: u32, n_r: u32, m_ell: i32) -> Option<EnergyLevel> {
        self.levels
            .iter()
            .find(|l| l.qn.n_z == n_z && l.qn.n_r == n_r && l.qn.m_ell == m_ell.abs())
            .map(|l| EnergyLevel {
                qn: QuantumNumbers { m_ell, ..l.qn },
                ..*l
            })
    }
}

/// ε(n_z, n_r, m_ℓ) = ε_z(n_z) + ε_r(n_r, m_ℓ) for ring j = 0, relative to
/// the ground level. `threshold` is the ratio read as "≫".
pub fn assemble_spectrum(
    beam: &BeamConfig,
    species: &AtomSpecies,
    limits: SpectrumLimits,
    opts: &SolverOptions,
    threshold: f64,
) -> Result<RotorSpectrum> {
    species.validate()?;
    let hd = harmonic_decomposition(beam, species, 0)?;
    let n_z_solve = limits.n_z_max.max(1) as usize;
    let n_r_solve = limits.n_r_max.max(1) as usize;
    let m_solve = limits.m_max.max(1);
    let eps_z: Vec<f64> = axial_states(&hd, n_z_solve, opts, false)?
        .energies
        .into_iter()
        .map(|e| e * HBAR * hd.geometry.omega_z)
        .collect();
    let eps_r: Vec<Vec<f64>> = (0..=m_solve)
        .into_par_iter()
        .map(|m| radial_levels(&hd, m as i32, n_r_solve, opts))
        .collect::<Result<_>>()?;

    let ground = eps_z[0] + eps_r[0][0];
    let gaps = Gaps {
        axial: eps_z[1] - eps_z[0],
        radial: eps_r[0][1] - eps_r[0][0],
        orbital: eps_r[1][0] - eps_r[0][0],
    };
    let inequalities_ok = gaps.axial > 0.0
        && gaps.radial > 0.0
        && gaps.orbital > 0.0
        && gaps.axial / gaps.radial >= threshold
        && gaps.radial / gaps.orbital >= threshold;

    let c = rotational_constant(hd.geometry.r_l, species)?;
    let rigid_rotor_ratio = (1..=limits.m_max as usize)
        .map(|m| (eps_r[m][0] - eps_r[0][0]) / ((m * m) as f64 * c))
        .collect();

    let f = species.f_ground;
    let mult = f.multiplicity();
    let mut levels = Vec::new();
    for n_z in 0..=limits.n_z_max {
        for n_r in 0..=limits.n_r_max {
            for m in 0..=limits.m_max {
                levels.push(EnergyLevel {
                    qn: QuantumNumbers::new(n_z, n_r, m as i32, f, f)?,
                    energy: eps_z[n_z as usize] + eps_r[m as usize][n_r as usize] - ground,
                    degeneracy: if m == 0 { mult } else { 2 * mult },
                });
            }
        }
    }
    levels.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then((a.qn.n_z, a.qn.n_r, a.qn.m_ell).cmp(&(b.qn.n_z, b.qn.n_r, b.qn.m_ell)))
    });
    Ok(RotorSpectrum {
        levels,
        gaps,
        inequalities_ok,
        ground_energy: ground,
        rigid_rotor_ratio,
    })
}

/// ε_{m_ℓ}(Ω) = ε + ħΩm_ℓ in the rotating frame.
pub fn rotating_frame_energy(level: &EnergyLevel, omega: f64) -> f64 {
    level.energy + HBAR * omega * level.qn.m_ell as f64
}

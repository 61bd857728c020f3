//! Three-parameter fit of a lineshape by 𝒜·P₀(δ − δ₀, Ω̃_R).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::lineshape::Lineshape;
use crate::error::{invalid, Error, Result};

/// Which pulse duration enters the fit function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FitModel {
    /// τ = π/Ω̃_R: the fitted curve is itself a π-pulse profile.
    PiPulse,
    /// τ held at the given value (s).
    FixedDuration { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub amplitude_a: f64,
    pub delta_0: f64,
    pub omega_r_eff: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 500;

/// Model value and ∂/∂(𝒜, δ₀, Ω̃).
fn model(model: FitModel, p: &Vector3<f64>, delta: f64) -> (f64, Vector3<f64>) {
    let (a, d0, w) = (p[0], p[1], p[2]);
    let d = delta - d0;
    match model {
        FitModel::PiPulse => {
            // g(x) = sin²(πW/2)/W², W = √(1 + x²), x = (δ − δ₀)/Ω̃
            let x = d / w;
            let big = (1.0 + x * x).sqrt();
            let s = (0.5 * std::f64::consts::PI * big).sin();
            let g = s * s / (big * big);
            let dg_dw =
                (0.5 * std::f64::consts::PI * (std::f64::consts::PI * big).sin() * big - 2.0 * s * s) / big.powi(3);
            let dg_dx = dg_dw * x / big;
            (a * g, Vector3::new(g, -a * dg_dx / w, -a * dg_dx * x / w))
        }
        FitModel::FixedDuration { tau } => {
            // P = Ω²h(W), h(W) = sin²(τW/2)/W², W = √(Ω² + d²)
            let big = (w * w + d * d).sqrt();
            if big == 0.0 {
                return (0.0, Vector3::new(0.0, 0.0, 0.0));
            }
            let s = (0.5 * tau * big).sin();
            let h = s * s / (big * big);
            let dh = (0.5 * tau * (tau * big).sin() * big - 2.0 * s * s) / big.powi(3);
            let p_val = w * w * h;
            let dp_dd = w * w * dh * d / big;
            let dp_dw = 2.0 * w * h + w * w * dh * w / big;
            (a * p_val, Vector3::new(p_val, -a * dp_dd, a * dp_dw))
        }
    }
}

fn cost(fit: FitModel, p: &Vector3<f64>, ls: &Lineshape) -> f64 {
    ls.delta_grid
        .iter()
        .zip(&ls.probability)
        .map(|(&d, &y)| (model(fit, p, d).0 - y).powi(2))
        .sum()
}

fn project(p: Vector3<f64>, omega_r: f64) -> Vector3<f64> {
    Vector3::new(p[0].clamp(1e-12, 1.0), p[1], p[2].max(1e-9 * omega_r))
}

/// Levenberg–Marquardt from one starting point. Returns (params, cost,
/// iterations, converged).
fn levenberg_marquardt(fit: FitModel, ls: &Lineshape, start: Vector3<f64>) -> (Vector3<f64>, f64, usize, bool) {
    let mut p = project(start, ls.omega_r);
    let mut c = cost(fit, &p, ls);
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&d, &y) in ls.delta_grid.iter().zip(&ls.probability) {
            let (m, j) = model(fit, &p, d);
            jtj += j * j.transpose();
            jtr += j * (m - y);
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = project(p + step, ls.omega_r);
            let tc = cost(fit, &trial, ls);
            if tc <= c {
                let rel = (c - tc) / c.max(1e-300);
                let moved = (trial - p).abs();
                let scale = Vector3::new(1.0, ls.omega_r, ls.omega_r);
                let small_step = (0..3).all(|k| moved[k] <= 1e-12 * scale[k]);
                p = trial;
                c = tc;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if rel < 1e-14 || small_step || c < 1e-30 {
                    return (p, c, it, true);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no descent direction left: stationary to working precision
            return (p, c, it, true);
        }
    }
    (p, c, MAX_ITERATIONS, false)
}

/// Least-squares fit of 𝒜·P₀(δ − δ₀, Ω̃_R), multi-started at
/// Ω̃ ∈ {1, 1.5, 2}·Ω_R from the grid peak.
pub fn fit_lineshape(ls: &Lineshape, fit: FitModel) -> Result<FitResult> {
    if ls.delta_grid.len() < 50 {
        return Err(invalid(
            "lineshape",
            format!("need >= 50 points, got {}", ls.delta_grid.len()),
        ));
    }
    let (d_peak, p_peak) = ls.grid_peak();
    let span = 4.0 * ls.omega_r;
    let lo = ls.delta_grid[0];
    let hi = *ls.delta_grid.last().expect("non-empty");
    if d_peak - lo < span || hi - d_peak < span {
        return Err(invalid("lineshape", "grid must span at least ±4 Ω_R around its peak"));
    }
    if let FitModel::FixedDuration { tau } = fit {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("fit.tau", "must be > 0"));
        }
    }
    let mut best: Option<(Vector3<f64>, f64, usize, bool)> = None;
    for k in [1.0, 1.5, 2.0] {
        let start = Vector3::new(p_peak.max(1e-3), d_peak, k * ls.omega_r);
        let run = levenberg_marquardt(fit, ls, start);
        let better = match &best {
            None => true,
            Some(b) => (run.3 && !b.3) || (run.3 == b.3 && run.1 < b.1),
        };
        if better {
            best = Some(run);
        }
    }
    let (p, c, iterations, converged) = best.expect("three starts");
    if !converged {
        return Err(Error::FitFailure {
            iterations,
            best_cost: c,
            best: [p[0], p[1], p[2]],
        });
    }
    Ok(FitResult {
        amplitude_a: p[0],
        delta_0: p[1],
        omega_r_eff: p[2],
        rms_residual: (c / ls.delta_grid.len() as f64).sqrt(),
        iterations,
    })
}

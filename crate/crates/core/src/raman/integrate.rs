//! Propagators for i dψ/dt = H(t)ψ with H in rad/s.
//!
//! `magnus4` is the workhorse for long pulses: a fourth-order Magnus step with
//! Gauss–Legendre nodes, unitary by construction, cost set by the fastest
//! drive period rather than by the largest detuning. `dormand_prince` is the
//! adaptive explicit Runge–Kutta 5(4) pair, used as an independent check over
//! short windows where its stiffness cost is affordable.

use nalgebra::{DMatrix, DVector};

use super::rabi::{expm_hermitian, C64};
use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Advance `psi` by `steps` Magnus steps of size `dt` from `t0`. `observe`
/// is called after every step with (step index, time, state).
pub fn magnus4<H, O>(hamiltonian: H, psi: &mut DVector<C64>, t0: f64, dt: f64, steps: usize, mut observe: O)
where
    H: Fn(f64) -> DMatrix<C64>,
    O: FnMut(usize, f64, &DVector<C64>),
{
    let c = 3f64.sqrt() / 6.0;
    let comm = C64::new(0.0, -3f64.sqrt() / 12.0 * dt * dt);
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let h1 = hamiltonian(t + (0.5 - c) * dt);
        let h2 = hamiltonian(t + (0.5 + c) * dt);
        let commutator = &h2 * &h1 - &h1 * &h2;
        let gen = (&h1 + &h2) * C64::new(0.5 * dt, 0.0) + commutator * comm;
        *psi = expm_hermitian(&gen, 1.0) * &*psi;
        observe(k, t + dt, psi);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from t0 to t1 with adaptive Dormand–Prince 5(4).
pub fn dormand_prince<H>(
    hamiltonian: H,
    psi0: &DVector<C64>,
    t0: f64,
    t1: f64,
    opts: AdaptiveOptions,
) -> Result<DVector<C64>>
where
    H: Fn(f64) -> DMatrix<C64>,
{
    let rhs = |t: f64, y: &DVector<C64>| -> DVector<C64> { (hamiltonian(t) * y) * (-I) };
    let mut y = psi0.clone();
    let mut t = t0;
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y);
    }
    let mut h = span.min(1e-3 / hamiltonian(t0).norm().max(1e-300));
    let mut k1 = rhs(t, &y);
    for _ in 0..opts.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        let mut k: Vec<DVector<C64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s - 1][j];
                if a != 0.0 {
                    ys.axpy(C64::new(h * a, 0.0), kj, C64::new(1.0, 0.0));
                }
            }
            k.push(rhs(t + C[s] * h, &ys));
        }
        // the 7th stage is evaluated at the 5th-order solution (FSAL)
        let mut y_new = y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            y_new.axpy(C64::new(h * A[5][j], 0.0), kj, C64::new(1.0, 0.0));
        }
        let mut err = 0.0f64;
        for i in 0..y.len() {
            let mut e = C64::new(0.0, 0.0);
            for s in 0..7 {
                let b5 = if s < 6 { A[5][s] } else { 0.0 };
                e += k[s][i] * (h * (b5 - B4[s]));
            }
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k.pop().expect("seven stages");
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-15 * span.max(t.abs()) {
            return Err(Error::Convergence {
                context: "Dormand-Prince integration".into(),
                detail: format!("step size underflow at t = {t:e}"),
            });
        }
    }
    Err(Error::Convergence {
        context: "Dormand-Prince integration".into(),
        detail: format!("exceeded {} steps before t1 = {t1:e} (reached {t:e})", opts.max_steps),
    })
}

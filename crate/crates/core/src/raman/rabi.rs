//! Three-level RWA dynamics on {|0⟩, |2L⟩, |−2L⟩}.

use nalgebra::{Complex, DMatrix, DVector, Matrix3};

pub type C64 = Complex<f64>;

/// H/ħ in the RWA: |0⟩ couples to |±2L⟩ with Ω_R√2/4; |±2L⟩ sit at −δ.
pub fn rwa_hamiltonian(delta: f64, omega_r: f64) -> Matrix3<f64> {
    let g = omega_r * 2f64.sqrt() / 4.0;
    Matrix3::new(0.0, g, g, g, -delta, 0.0, g, 0.0, -delta)
}

/// P₀ = Ω²/(Ω² + δ²)·sin²(τ√(Ω² + δ²)/2).
pub fn transition_probability_closed_form(delta: f64, omega_r: f64, tau: f64) -> f64 {
    let w2 = omega_r * omega_r + delta * delta;
    if w2 == 0.0 {
        return 0.0;
    }
    let s = (0.5 * tau * w2.sqrt()).sin();
    omega_r * omega_r / w2 * s * s
}

/// exp(−iHt) for Hermitian H via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)),
    );
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * u.adjoint()
}

/// |Ψ(τ)⟩ = e^{−iHτ}|0⟩ under the RWA Hamiltonian.
pub fn evolve_rwa_state(delta: f64, omega_r: f64, tau: f64) -> DVector<C64> {
    let h = rwa_hamiltonian(delta, omega_r);
    let hc = DMatrix::from_fn(3, 3, |i, j| C64::new(h[(i, j)], 0.0));
    let psi0 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    expm_hermitian(&hc, tau) * psi0
}

/// |⟨f|Ψ(τ)⟩|² with |f⟩ = (|2L⟩ + |−2L⟩)/√2.
pub fn evolve_rwa(delta: f64, omega_r: f64, tau: f64) -> f64 {
    let psi = evolve_rwa_state(delta, omega_r, tau);
    let amp = (psi[1] + psi[2]) / 2f64.sqrt();
    amp.norm_sqr()
}

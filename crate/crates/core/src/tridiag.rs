//! Lowest eigenpairs of a real symmetric tridiagonal matrix: Sturm-sequence
//! bisection for eigenvalues, inverse iteration for eigenvectors.

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows i and i+1.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = 0.0;
        for i in 0..self.diag.len() {
            q = if i == 0 {
                self.diag[0] - x
            } else {
                self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q
            };
            // a vanishing pivot is treated as a tiny negative one
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.off[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-based), bisected to machine precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.len())).map(|k| self.eigenvalue(k)).collect()
    }

    /// Unit eigenvector for an eigenvalue `lambda` already accurate to
    /// round-off. Sign fixed so the largest component is positive.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let shift = lambda + 4.0 * f64::EPSILON * (hi - lo).max(1.0);
        let mut x = vec![1.0; n];
        for _ in 0..4 {
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let imax = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }

    /// Solve (T − σI)x = b by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            let d = self.diag[0] - sigma;
            return vec![b[0] / if d == 0.0 { f64::EPSILON } else { d }];
        }
        // rows stored as (main, upper, upper2) after pivoting
        let mut dl: Vec<f64> = self.off.clone();
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - sigma).collect();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut rhs = b.to_vec();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = f64::EPSILON;
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                rhs[i + 1] -= f * rhs[i];
                dl[i] = 0.0;
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                rhs.swap(i, i + 1);
                rhs[i + 1] -= f * rhs[i];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = f64::EPSILON;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = rhs[n - 1] / d[n - 1];
        x[n - 2] = (rhs[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (rhs[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn free_particle_in_a_box() {
        // −u'' on n interior points: eigenvalues 2 − 2cos(kπ/(n+1))
        let n = 200;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        for k in 0..5 {
            let exact = 4.0
                * ((k + 1) as f64 * std::f64::consts::PI / (2 * (n + 1)) as f64)
                    .sin()
                    .powi(2);
            let got = t.eigenvalue(k);
            assert!((got - exact).abs() < 1e-13, "k={k} got={got:e} exact={exact:e}");
        }
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        let n = 300;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 1e-3 * (i as f64 - 150.0).powi(2)).collect();
        let t = SymTridiagonal::new(diag, vec![-1.0; n - 1]);
        let lams = t.lowest_eigenvalues(4);
        let vecs: Vec<Vec<f64>> = lams.iter().map(|&l| t.eigenvector(l)).collect();
        for (l, v) in lams.iter().zip(&vecs) {
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut tv = t.diag[i] * v[i];
                if i > 0 {
                    tv += t.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += t.off[i] * v[i + 1];
                }
                res = res.max((tv - l * v[i]).abs());
            }
            assert!(res < 1e-10, "{res}");
        }
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn matches_dense_solver(diag in prop::collection::vec(-5.0f64..5.0, 2..30), seed in 0u64..1000) {
            let n = diag.len();
            let off: Vec<f64> = (0..n - 1).map(|i| ((i as u64 * 7 + seed) % 13) as f64 / 6.0 - 1.0).collect();
            let t = SymTridiagonal::new(diag.clone(), off.clone());
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = diag[i];
                if i + 1 < n {
                    m[(i, i + 1)] = off[i];
                    m[(i + 1, i)] = off[i];
                }
            }
            let mut dense: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            dense.sort_by(f64::total_cmp);
            for (k, want) in dense.iter().enumerate() {
                prop_assert!((t.eigenvalue(k) - want).abs() < 1e-10);
            }
        }
    }
}

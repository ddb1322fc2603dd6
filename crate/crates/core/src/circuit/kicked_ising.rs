//! Kicked Ising Floquet evolution `U_F = exp(-iH)` with
//! `H = J Σ Z_i Z_{i+1} + b Σ X_i + h Σ Z_i` on an open chain of qubits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Krylov error tolerance per step.
pub const KRYLOV_TOLERANCE: f64 = 1e-10;
const KRYLOV_MAX_DIM: usize = 40;

/// Couplings of the Ising Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KimParams {
    pub j: f64,
    pub b: f64,
    pub h: f64,
}

impl Default for KimParams {
    /// The chaotic point `J = 1`, `b = (√5+5)/8`, `h = (√5+1)/4`.
    fn default() -> Self {
        let s5 = 5f64.sqrt();
        Self {
            j: 1.0,
            b: (s5 + 5.0) / 8.0,
            h: (s5 + 1.0) / 4.0,
        }
    }
}

/// Sparse action of the Hamiltonian on `n` qubits.
#[derive(Clone, Debug)]
pub struct IsingHamiltonian {
    pub n: usize,
    pub params: KimParams,
    diagonal: Vec<f64>,
}

impl IsingHamiltonian {
    pub fn new(n: usize, params: KimParams) -> Self {
        let dim = 1usize << n;
        let diagonal = (0..dim)
            .map(|x| {
                // Z eigenvalue of site i (0-based, most significant first)
                let z = |i: usize| if (x >> (n - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 };
                let zz: f64 = (0..n.saturating_sub(1)).map(|i| z(i) * z(i + 1)).sum();
                let zs: f64 = (0..n).map(z).sum();
                params.j * zz + params.h * zs
            })
            .collect();
        Self { n, params, diagonal }
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let mut s = v[x] * self.diagonal[x];
            for i in 0..self.n {
                s += v[x ^ (1 << i)] * self.params.b;
            }
            *o = s;
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::from_diagonal(&DVector::from_vec(self.diagonal.clone()));
        for x in 0..dim {
            for i in 0..self.n {
                m[(x ^ (1 << i), x)] += self.params.b;
            }
        }
        m
    }

    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply(v, &mut hv);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i H time) v` by Lanczos with adaptive sub-steps. Each sub-step is
/// accepted when the a-posteriori Krylov residual falls below
/// `tol · |step| / time`.
pub fn expm_krylov(ham: &IsingHamiltonian, v: &[Complex64], time: f64, tol: f64) -> Result<Vec<Complex64>> {
    let dim = v.len();
    let mut state = v.to_vec();
    let mut done = 0.0;
    let mut step = time;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    while done < time * (1.0 - 1e-15) {
        step = step.min(time - done);
        let beta0 = norm(&state);
        // Lanczos basis
        let mut basis: Vec<Vec<Complex64>> = vec![state.iter().map(|x| x / beta0).collect()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut breakdown = false;
        for j in 0..KRYLOV_MAX_DIM.min(dim) {
            ham.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            for (wi, bi) in w.iter_mut().zip(&basis[j]) {
                *wi -= bi * a;
            }
            if j > 0 {
                let b = betas[j - 1];
                for (wi, bi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= bi * b;
                }
            }
            // full reorthogonalization keeps the basis numerically orthonormal
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
            alphas.push(a);
            let b = norm(&w);
            betas.push(b);
            if b < 1e-13 {
                breakdown = true;
                break;
            }
            if j + 1 < KRYLOV_MAX_DIM.min(dim) {
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        loop {
            // c = exp(-i T step) e_1
            let c: Vec<Complex64> = (0..m)
                .map(|r| {
                    (0..m)
                        .map(|l| {
                            let phase = Complex64::new(0.0, -eig.eigenvalues[l] * step).exp();
                            phase * eig.eigenvectors[(r, l)] * eig.eigenvectors[(0, l)]
                        })
                        .sum()
                })
                .collect();
            let residual = if breakdown || m == dim { 0.0 } else { beta0 * betas[m - 1] * c[m - 1].norm() };
            if residual <= tol * step / time {
                for x in state.iter_mut() {
                    *x = Complex64::new(0.0, 0.0);
                }
                for (ci, q) in c.iter().zip(&basis) {
                    for (s, qi) in state.iter_mut().zip(q) {
                        *s += qi * ci * beta0;
                    }
                }
                done += step;
                break;
            }
            step /= 2.0;
            if step < time * 1e-8 {
                return Err(Error::numerical("Krylov propagation failed to reach tolerance", Some(residual)));
            }
        }
        // try a longer step next time
        step *= 1.5;
    }
    Ok(state)
}

/// Dense propagator `exp(-iH)` from the eigendecomposition of `H`.
pub fn dense_floquet(ham: &IsingHamiltonian) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(ham.dense());
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new(0.0, -e).exp()));
    &v * phases * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use rand::Rng;

    fn random_state(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = stream(seed, Domain::InitialState, 0);
        let mut v: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    }

    #[test]
    fn krylov_matches_dense_propagator() {
        for n in [1usize, 3, 6, 8] {
            let ham = IsingHamiltonian::new(n, KimParams::default());
            let v = random_state(n, n as u64);
            let k = expm_krylov(&ham, &v, 1.0, KRYLOV_TOLERANCE).unwrap();
            let u = dense_floquet(&ham);
            let d = &u * DVector::from_vec(v.clone());
            let err = k.iter().zip(d.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n = {n}: {err}");
        }
    }

    #[test]
    fn energy_is_conserved() {
        let n = 10;
        let ham = IsingHamiltonian::new(n, KimParams::default());
        let mut v = random_state(n, 7);
        let e0 = ham.expectation(&v);
        for _ in 0..5 {
            v = expm_krylov(&ham, &v, 1.0, KRYLOV_TOLERANCE).unwrap();
            assert!((ham.expectation(&v) - e0).abs() < 1e-8);
            assert!((norm(&v) - 1.0).abs() < 1e-10);
        }
    }
}

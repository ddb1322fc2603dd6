use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Amplitude count above which gate application is split across threads.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Pure state of `n` qudits of dimension `d`, site 1 being the most
/// significant digit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    pub n: usize,
    pub d: usize,
    pub amplitudes: Vec<Complex64>,
}

/// `d^n`, or a capacity error when it exceeds `cap`.
pub fn checked_dimension(n: usize, d: usize, cap: usize) -> Result<usize> {
    let mut dim: u128 = 1;
    for _ in 0..n {
        dim *= d as u128;
        if dim > cap as u128 {
            return Err(Error::Capacity {
                what: "statevector amplitudes d^N",
                requested: (d as u128).saturating_pow(n as u32),
                limit: cap as u128,
            });
        }
    }
    Ok(dim as usize)
}

impl PureState {
    /// Computational basis state `|0…0⟩`.
    pub fn zero(n: usize, d: usize, cap: usize) -> Result<Self> {
        let dim = checked_dimension(n, d, cap)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, d, amplitudes })
    }

    /// Flat superposition over all basis states.
    pub fn uniform(n: usize, d: usize, cap: usize) -> Result<Self> {
        let dim = checked_dimension(n, d, cap)?;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n,
            d,
            amplitudes: vec![a; dim],
        })
    }

    /// Tensor product of single-site states, site 1 first.
    pub fn product(sites: &[Vec<Complex64>], cap: usize) -> Result<Self> {
        let d = sites.first().map_or(2, |s| s.len());
        let n = sites.len();
        checked_dimension(n, d, cap)?;
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for s in sites {
            if s.len() != d {
                return Err(Error::arg("product state sites must share one local dimension"));
            }
            amplitudes = amplitudes
                .iter()
                .flat_map(|a| s.iter().map(move |b| a * b))
                .collect();
        }
        Ok(Self { n, d, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` (dimension `d^width`) to sites `start..start+width`
    /// (0-based).
    pub fn apply_block(&mut self, start: usize, width: usize, gate: &DMatrix<Complex64>) {
        let g = self.d.pow(width as u32);
        assert!(start + width <= self.n, "gate sites out of range");
        assert_eq!(gate.nrows(), g, "gate dimension does not match its support");
        let stride = self.d.pow((self.n - start - width) as u32);
        let chunk = g * stride;
        let m: Vec<Complex64> = (0..g * g).map(|i| gate[(i / g, i % g)]).collect();
        let kernel = |c: &mut [Complex64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); g];
            for lo in 0..stride {
                for (a, b) in buf.iter_mut().enumerate() {
                    *b = c[a * stride + lo];
                }
                for a in 0..g {
                    let row = &m[a * g..(a + 1) * g];
                    let mut s = Complex64::new(0.0, 0.0);
                    for (x, y) in row.iter().zip(&buf) {
                        s += x * y;
                    }
                    c[a * stride + lo] = s;
                }
            }
        };
        if self.dim() >= PARALLEL_THRESHOLD {
            self.amplitudes.par_chunks_mut(chunk).for_each(kernel);
        } else {
            self.amplitudes.chunks_mut(chunk).for_each(kernel);
        }
    }

    /// Purity `tr ρ_A²` of the reduced state on sites `1..=n_left`.
    pub fn bipartite_purity(&self, n_left: usize) -> f64 {
        let da = self.d.pow(n_left as u32);
        let db = self.dim() / da;
        // ψ as a da × db matrix (row-major in the basis index)
        let psi = DMatrix::from_fn(da, db, |i, j| self.amplitudes[i * db + j]);
        let rho = if da <= db {
            &psi * psi.adjoint()
        } else {
            psi.adjoint() * &psi
        };
        rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn half_chain_purity(&self) -> f64 {
        self.bipartite_purity(self.n / 2)
    }

    /// `⟨ψ|φ⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

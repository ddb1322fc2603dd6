//! Commutants of the k-fold tensor powers of the unitary and orthogonal
//! groups, together with their Gram and Weingarten matrices.
//!
//! Unitary commutant elements are permutations of `S_k` in one-line notation.
//! Orthogonal elements are perfect matchings (Brauer pairings) of `2k` points,
//! where points `0..k` carry the ket legs and `k..2k` the bra legs of the `k`
//! replicas. A permutation `π` embeds as the pairing `{(i, k + π(i))}`.
//!
//! Overlaps are `⟨⟨σ|τ⟩⟩ = q^{c(σ,τ)}` with `c` the number of cycles of
//! `σ⁻¹τ` (unitary) or the number of closed loops of the union of two
//! pairings (orthogonal).

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};

/// Default cap on the replica order.
pub const DEFAULT_MAX_K: usize = 6;

/// Relative singular-value cutoff of the pseudo-inverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// A permutation of `{0, …, k-1}` in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermutationElement {
    mapping: Vec<usize>,
}

impl PermutationElement {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &m in &mapping {
            if m >= k || seen[m] {
                return Err(Error::arg(format!("{mapping:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            mapping: (0..k).collect(),
        }
    }

    /// The transposition exchanging `a` and `b`.
    pub fn transposition(k: usize, a: usize, b: usize) -> Self {
        let mut mapping: Vec<usize> = (0..k).collect();
        mapping.swap(a, b);
        Self { mapping }
    }

    pub fn k(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.k()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            mapping: other.mapping.iter().map(|&j| self.mapping[j]).collect(),
        }
    }

    pub fn cycle_count(&self) -> usize {
        let k = self.k();
        let mut seen = vec![false; k];
        let mut cycles = 0;
        for start in 0..k {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.mapping[i];
            }
        }
        cycles
    }

    pub fn fixed_points(&self) -> usize {
        self.mapping.iter().enumerate().filter(|(i, &m)| *i == m).count()
    }

    /// Embedding into the Brauer pairings of `2k` points.
    pub fn to_pairing(&self) -> PairingElement {
        let k = self.k();
        PairingElement::from_pairs((0..k).map(|i| (i, k + self.mapping[i])).collect())
            .expect("permutation pairing is a perfect matching")
    }
}

/// A perfect matching of `{0, …, 2k-1}`, stored as `k` pairs `(a, b)` with
/// `a < b`, sorted by `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairingElement {
    pairs: Vec<(usize, usize)>,
}

impl PairingElement {
    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * pairs.len();
        let mut seen = vec![false; n];
        let mut canon = Vec::with_capacity(pairs.len());
        for &(a, b) in &pairs {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if a == b || b >= n || seen[a] || seen[b] {
                return Err(Error::arg(format!("{pairs:?} is not a perfect matching")));
            }
            seen[a] = true;
            seen[b] = true;
            canon.push((a, b));
        }
        canon.sort_unstable();
        Ok(Self { pairs: canon })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn partners(&self) -> Vec<usize> {
        let mut p = vec![0; 2 * self.k()];
        for &(a, b) in &self.pairs {
            p[a] = b;
            p[b] = a;
        }
        p
    }

    /// Closed loops of the union multigraph of two matchings.
    pub fn loops_with(&self, other: &Self) -> usize {
        assert_eq!(self.k(), other.k());
        let pa = self.partners();
        let pb = other.partners();
        let mut seen = vec![false; pa.len()];
        let mut loops = 0;
        for start in 0..pa.len() {
            if seen[start] {
                continue;
            }
            loops += 1;
            let mut i = start;
            loop {
                seen[i] = true;
                let j = pa[i];
                seen[j] = true;
                i = pb[j];
                if i == start {
                    break;
                }
            }
        }
        loops
    }
}

/// The element list of a commutant basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisElements {
    Permutations(Vec<PermutationElement>),
    Pairings(Vec<PairingElement>),
}

/// Canonically ordered basis of the k-commutant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutantBasis {
    ensemble: EnsembleKind,
    k: usize,
    elements: BasisElements,
}

/// Cycle statistics of a pair of permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermStats {
    /// Cycles of `σ⁻¹τ`.
    pub cycles: usize,
    /// Transposition distance `k - cycles`.
    pub distance: usize,
    /// Fixed points of `στ⁻¹`.
    pub fixed_points: usize,
}

pub fn perm_stats(sigma: &PermutationElement, tau: &PermutationElement) -> Result<PermStats> {
    if sigma.k() != tau.k() {
        return Err(Error::arg(format!(
            "permutations act on different sets (k = {} and {})",
            sigma.k(),
            tau.k()
        )));
    }
    let cycles = sigma.inverse().compose(tau).cycle_count();
    Ok(PermStats {
        cycles,
        distance: sigma.k() - cycles,
        fixed_points: sigma.compose(&tau.inverse()).fixed_points(),
    })
}

/// All permutations of `S_k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<PermutationElement> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![PermutationElement {
        mapping: cur.clone(),
    }];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(PermutationElement {
            mapping: cur.clone(),
        });
    }
    out
}

/// All perfect matchings of `2k` points in lexicographic order.
pub fn pairings(k: usize) -> Vec<PairingElement> {
    fn rec(free: &mut Vec<usize>, acc: &mut Vec<(usize, usize)>, out: &mut Vec<PairingElement>) {
        if free.is_empty() {
            out.push(PairingElement { pairs: acc.clone() });
            return;
        }
        let a = free.remove(0);
        for idx in 0..free.len() {
            let b = free.remove(idx);
            acc.push((a, b));
            rec(free, acc, out);
            acc.pop();
            free.insert(idx, b);
        }
        free.insert(0, a);
    }
    let mut out = Vec::new();
    rec(&mut (0..2 * k).collect(), &mut Vec::new(), &mut out);
    out
}

impl CommutantBasis {
    /// Enumerates the commutant with the default capacity `k ≤ 6`.
    pub fn enumerate(ensemble: EnsembleKind, k: usize) -> Result<Self> {
        Self::enumerate_with_limit(ensemble, k, DEFAULT_MAX_K)
    }

    pub fn enumerate_with_limit(ensemble: EnsembleKind, k: usize, max_k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("replica order k must be at least 1"));
        }
        if k > max_k {
            return Err(Error::Capacity {
                what: "replica order k",
                requested: k as u128,
                limit: max_k as u128,
            });
        }
        let elements = match ensemble {
            EnsembleKind::Unitary => BasisElements::Permutations(permutations(k)),
            EnsembleKind::Orthogonal => BasisElements::Pairings(pairings(k)),
        };
        Ok(Self {
            ensemble,
            k,
            elements,
        })
    }

    pub fn ensemble(&self) -> EnsembleKind {
        self.ensemble
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        match &self.elements {
            BasisElements::Permutations(v) => v.len(),
            BasisElements::Pairings(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> &BasisElements {
        &self.elements
    }

    /// Exponent `c(σ_i, σ_j)` with `⟨⟨σ_i|σ_j⟩⟩ = q^c`.
    pub fn overlap_exponent(&self, i: usize, j: usize) -> usize {
        match &self.elements {
            BasisElements::Permutations(v) => v[i].inverse().compose(&v[j]).cycle_count(),
            BasisElements::Pairings(v) => v[i].loops_with(&v[j]),
        }
    }

    /// Matrix of overlap exponents.
    pub fn exponent_matrix(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.overlap_exponent(i, j)).collect())
            .collect()
    }

    /// Position of the commutant element realizing the permutation `perm`.
    pub fn index_of_permutation(&self, perm: &PermutationElement) -> Option<usize> {
        if perm.k() != self.k {
            return None;
        }
        match &self.elements {
            BasisElements::Permutations(v) => v.iter().position(|p| p == perm),
            BasisElements::Pairings(v) => {
                let target = perm.to_pairing();
                v.iter().position(|p| *p == target)
            }
        }
    }

    pub fn identity_index(&self) -> usize {
        self.index_of_permutation(&PermutationElement::identity(self.k))
            .expect("identity is in every commutant")
    }

    /// Index of the replica swap `(0 1)`; requires `k ≥ 2`.
    pub fn swap_index(&self) -> Option<usize> {
        (self.k >= 2)
            .then(|| self.index_of_permutation(&PermutationElement::transposition(self.k, 0, 1)))
            .flatten()
    }
}

/// Gram matrix `G_{στ}(q) = ⟨⟨σ|τ⟩⟩`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub basis: Arc<CommutantBasis>,
    pub q: u64,
    pub entries: DMatrix<f64>,
}

/// Weingarten matrix, the pseudo-inverse of the Gram matrix.
#[derive(Clone, Debug)]
pub struct WeingartenMatrix {
    pub basis: Arc<CommutantBasis>,
    pub q: u64,
    pub entries: DMatrix<f64>,
    /// Numerical rank kept by the pseudo-inverse.
    pub rank: usize,
    /// `σ_max / σ_min` over the kept singular values.
    pub condition: f64,
}

pub fn gram_matrix(basis: &Arc<CommutantBasis>, q: u64) -> Result<GramMatrix> {
    if q == 0 {
        return Err(Error::arg("local dimension q must be positive"));
    }
    let n = basis.len();
    let exps = basis.exponent_matrix();
    let qf = q as f64;
    let entries = DMatrix::from_fn(n, n, |i, j| qf.powi(exps[i][j] as i32));
    Ok(GramMatrix {
        basis: Arc::clone(basis),
        q,
        entries,
    })
}

pub fn weingarten_matrix(basis: &Arc<CommutantBasis>, q: u64) -> Result<WeingartenMatrix> {
    let gram = gram_matrix(basis, q)?;
    let (entries, rank, condition) = pseudo_inverse(&gram.entries)?;
    Ok(WeingartenMatrix {
        basis: Arc::clone(basis),
        q,
        entries,
        rank,
        condition,
    })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix with relative
/// singular-value cutoff [`PINV_RELATIVE_CUTOFF`]. For a symmetric matrix the
/// singular value decomposition follows from the eigendecomposition, with
/// singular values `|λ|`, which keeps paired singular vectors consistent
/// inside degenerate clusters. Fails when a singular value sits in the
/// ambiguous band just above the cutoff, where the numerical rank is not
/// well defined.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize, f64)> {
    if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max() {
        return Err(Error::arg("pseudo_inverse expects a symmetric matrix"));
    }
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        Error::numerical("eigensolver did not converge while pseudo-inverting the Gram matrix", None)
    })?;
    let s: Vec<f64> = eig.eigenvalues.iter().map(|x| x.abs()).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok((DMatrix::zeros(m.ncols(), m.nrows()), 0, f64::INFINITY));
    }
    let cutoff = PINV_RELATIVE_CUTOFF * smax;
    let mut smin_kept = smax;
    let mut rank = 0;
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (idx, &sv) in s.iter().enumerate() {
        if sv <= cutoff {
            continue;
        }
        if sv < 1e3 * cutoff {
            return Err(Error::numerical(
                format!("numerical rank is ambiguous: singular value {sv:e} against σ_max {smax:e}"),
                Some(smax / sv),
            ));
        }
        rank += 1;
        smin_kept = smin_kept.min(sv);
        let v = eig.eigenvectors.column(idx);
        out += (v * v.transpose()) / eig.eigenvalues[idx];
    }
    Ok((out, rank, smax / smin_kept))
}

pub mod rational {
    //! Exact rational versions of the Gram and Weingarten matrices.

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    use super::CommutantBasis;

    pub type Matrix = Vec<Vec<BigRational>>;

    pub fn gram(basis: &CommutantBasis, q: u64) -> Vec<Vec<BigInt>> {
        let qb = BigInt::from(q);
        basis
            .exponent_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|e| qb.pow(e as u32)).collect())
            .collect()
    }

    pub fn rising_product(basis: &CommutantBasis, q: u64) -> BigInt {
        (0..basis.k() as u64)
            .map(|m| BigInt::from(q + basis.ensemble().shift(m)))
            .product()
    }

    fn mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        let p = b[0].len();
        a.iter()
            .map(|row| {
                let mut out = vec![BigInt::zero(); p];
                for (x, brow) in row.iter().zip(b) {
                    if x.is_zero() {
                        continue;
                    }
                    for (o, y) in out.iter_mut().zip(brow) {
                        *o += x * y;
                    }
                }
                out
            })
            .collect()
    }

    fn transpose(a: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
    }

    /// Fraction-free (Bareiss) forward elimination, pivoting on the first
    /// `cols` columns. Every intermediate entry is a minor of the input, so
    /// the divisions are exact. Returns the pivot columns.
    fn forward(m: &mut [Vec<BigInt>], cols: usize) -> Vec<usize> {
        let rows = m.len();
        let mut prev = BigInt::one();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let (top, rest) = m.split_at_mut(r + 1);
            let pivot = &top[r];
            for row in rest.iter_mut() {
                let f = std::mem::take(&mut row[c]);
                for j in c + 1..row.len() {
                    row[j] = (&pivot[c] * &row[j] - &f * &pivot[j]) / &prev;
                }
            }
            prev = pivot[c].clone();
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// `(D M⁻¹, D)` for a nonsingular integer matrix, with `D = ±det M`.
    fn scaled_inverse(a: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, BigInt) {
        let n = a.len();
        let mut m: Vec<Vec<BigInt>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
                r
            })
            .collect();
        assert_eq!(forward(&mut m, n).len(), n, "matrix is invertible");
        let d = m[n - 1][n - 1].clone();
        let mut x = vec![vec![BigInt::zero(); n]; n];
        for col in 0..n {
            for i in (0..n).rev() {
                let mut acc = &d * &m[i][n + col];
                for j in i + 1..n {
                    acc -= &m[i][j] * &x[j][col];
                }
                x[i][col] = acc / &m[i][i];
            }
        }
        (x, d)
    }

    fn pivot_columns(g: &[Vec<BigInt>]) -> Vec<usize> {
        let mut m = g.to_vec();
        forward(&mut m, g[0].len())
    }

    fn over(m: Vec<Vec<BigInt>>, d: &BigInt) -> Matrix {
        m.into_iter()
            .map(|r| r.into_iter().map(|x| BigRational::new(x, d.clone())).collect())
            .collect()
    }

    /// Exact Moore-Penrose pseudo-inverse of the Gram matrix.
    ///
    /// With `C` the independent columns of `G` and `G_PP` the matching
    /// principal block, `G⁺ = C (CᵀC)⁻¹ G_PP (CᵀC)⁻¹ Cᵀ`.
    pub fn weingarten(basis: &CommutantBasis, q: u64) -> Matrix {
        let g = gram(basis, q);
        let piv = pivot_columns(&g);
        if piv.len() == g.len() {
            let (x, d) = scaled_inverse(&g);
            return over(x, &d);
        }
        let c: Vec<Vec<BigInt>> = g.iter().map(|r| piv.iter().map(|&j| r[j].clone()).collect()).collect();
        let gpp: Vec<Vec<BigInt>> = piv.iter().map(|&i| piv.iter().map(|&j| g[i][j].clone()).collect()).collect();
        let ct = transpose(&c);
        let (minv, d) = scaled_inverse(&mul(&ct, &c));
        let left = mul(&mul(&mul(&c, &minv), &gpp), &minv);
        over(mul(&left, &ct), &(&d * &d))
    }

    pub fn rank(basis: &CommutantBasis, q: u64) -> usize {
        pivot_columns(&gram(basis, q)).len()
    }
}

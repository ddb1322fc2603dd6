//! Closed-form ensemble averages: Haar IPRs and finite-D Porter-Thomas
//! densities, random matrix product states (Haar and Ginibre staircases) and
//! the random phase model in the large local-dimension limit.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::commutant::{gram_matrix, perm_stats, permutations, CommutantBasis, PermutationElement};
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};

/// Hilbert-space dimension, with an explicit sentinel for the `D → ∞` limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dimension {
    Finite(f64),
    Infinite,
}

/// `D · ∏_{m<k} (1 + f(m)) / (D + f(m))`.
pub fn haar_ipr(ensemble: EnsembleKind, dim: f64, k: usize) -> Result<f64> {
    if !(dim >= 1.0) || k == 0 {
        return Err(Error::arg(format!("haar_ipr needs D ≥ 1 and k ≥ 1 (D = {dim}, k = {k})")));
    }
    Ok(dim
        * (0..k as u64)
            .map(|m| {
                let f = ensemble.shift(m) as f64;
                (1.0 + f) / (dim + f)
            })
            .product::<f64>())
}

/// Haar IPR in the `D → ∞` scaling form `m_k / D^{k-1}`.
pub fn haar_ipr_asymptotic(ensemble: EnsembleKind, dim: f64, k: usize) -> f64 {
    ensemble.haar_moment(k) / dim.powi(k as i32 - 1)
}

/// Density of `ω = D|⟨x|ψ⟩|²` for a Haar-random state.
pub fn porter_thomas_pdf(ensemble: EnsembleKind, dim: Dimension, omega: f64) -> f64 {
    if omega < 0.0 {
        return 0.0;
    }
    match (ensemble, dim) {
        (EnsembleKind::Unitary, Dimension::Infinite) => (-omega).exp(),
        (EnsembleKind::Orthogonal, Dimension::Infinite) => {
            (-omega / 2.0).exp() / (2.0 * std::f64::consts::PI * omega).sqrt()
        }
        (_, Dimension::Finite(d)) if omega > d => 0.0,
        (EnsembleKind::Unitary, Dimension::Finite(d)) => {
            (d - 1.0) / d * (1.0 - omega / d).powf(d - 2.0)
        }
        (EnsembleKind::Orthogonal, Dimension::Finite(d)) => {
            let log_norm = ln_gamma(d / 2.0) - ln_gamma((d - 1.0) / 2.0) - 0.5 * d.ln();
            log_norm.exp() / (std::f64::consts::PI * omega).sqrt()
                * (1.0 - omega / d).powf((d - 3.0) / 2.0)
        }
    }
}

/// Staircase random matrix product state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmpsSpec {
    pub d: u64,
    pub chi: u64,
    pub n: usize,
    pub ensemble: EnsembleKind,
}

impl RmpsSpec {
    /// `r = log_d χ`; fails unless `χ` is an integer power of `d`.
    pub fn r(&self) -> Result<usize> {
        if self.d < 2 || self.chi < 1 {
            return Err(Error::arg(format!("need d ≥ 2 and χ ≥ 1 (d = {}, χ = {})", self.d, self.chi)));
        }
        let mut c = self.chi;
        let mut r = 0;
        while c % self.d == 0 {
            c /= self.d;
            r += 1;
        }
        if c != 1 {
            return Err(Error::arg(format!("χ = {} is not a power of d = {}", self.chi, self.d)));
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<usize> {
        let r = self.r()?;
        if self.n < r + 1 {
            return Err(Error::arg(format!("N = {} must be at least log_d χ + 1 = {}", self.n, r + 1)));
        }
        Ok(r)
    }

    pub fn x(&self) -> f64 {
        let d = self.d as f64;
        self.n as f64 / self.chi as f64 * (d - 1.0) / d
    }
}

/// Exact disorder-averaged IPR of a Haar staircase RMPS, evaluated in log space.
pub fn rmps_ipr_exact(spec: &RmpsSpec, k: usize) -> Result<f64> {
    let r = spec.validate()?;
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let d = spec.d as f64;
    let chi = spec.chi as f64;
    let mut log = spec.n as f64 * d.ln();
    let mut log_bulk = 0.0;
    for m in 0..k as u64 {
        let f = spec.ensemble.shift(m) as f64;
        log += (1.0 + f).ln() - (d * chi + f).ln();
        log_bulk += (chi + f).ln() - (d * chi + f).ln();
    }
    log += (spec.n - r - 1) as f64 * log_bulk;
    Ok(log.exp())
}

/// Crossover variables of the universal distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingVariables {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_thouless: f64,
}

/// Scaling variables of a staircase RMPS. The logarithmic correction is
/// evaluated as written, `log_d[N(d-1)/(x d)]`, which equals `log_d χ`.
pub fn rmps_scaling_params(spec: &RmpsSpec) -> Result<ScalingVariables> {
    spec.validate()?;
    let d = spec.d as f64;
    let n = spec.n as f64;
    let x = spec.x();
    let log_term = (n * (d - 1.0) / (x * d)).ln() / d.ln();
    let alpha = x * (1.0 - d / (n * (d - 1.0)) - log_term / n);
    let beta_u = x * x * (d + 1.0) / (6.0 * n * (d - 1.0));
    let beta = match spec.ensemble {
        EnsembleKind::Unitary => beta_u,
        EnsembleKind::Orthogonal => 4.0 * beta_u,
    };
    Ok(ScalingVariables {
        x,
        alpha,
        beta,
        n_thouless: spec.chi as f64 * d / (d - 1.0),
    })
}

/// Moment prediction `m_k e^{k(k-1)α/2} e^{-k²(k-1)β}` relative to Haar.
pub fn universal_ratio(k: usize, alpha: f64, beta: f64) -> f64 {
    let k = k as f64;
    (k * (k - 1.0) / 2.0 * alpha - k * k * (k - 1.0) * beta).exp()
}

/// Ginibre staircase grouped into `n_blocks` blocks of matrix size `M`:
/// `I_k = D ν^{2kÑ} 1ᵀ G^{Ñ-1} 1` with `G` the permutation Gram matrix at
/// `q = M` and `D = d^N`. `nu_sq = None` selects the normalizing default
/// `ν² = d^{-N/Ñ} M^{-(Ñ-1)/Ñ}`.
pub fn ginibre_rmps_ipr(
    d: u64,
    n: usize,
    m: u64,
    n_blocks: usize,
    k: usize,
    nu_sq: Option<f64>,
) -> Result<f64> {
    if d < 2 || m < 1 || n_blocks < 1 || n < 1 {
        return Err(Error::arg("ginibre_rmps_ipr needs d ≥ 2, M ≥ 1, N ≥ 1 and Ñ ≥ 1"));
    }
    let basis = Arc::new(CommutantBasis::enumerate(EnsembleKind::Unitary, k)?);
    let gram = gram_matrix(&basis, m)?;
    let nb = n_blocks as f64;
    let ln_d = n as f64 * (d as f64).ln();
    let ln_nu_sq = match nu_sq {
        Some(v) if v > 0.0 => v.ln(),
        Some(v) => return Err(Error::arg(format!("variance ν² = {v} must be positive"))),
        None => -ln_d / nb - (nb - 1.0) / nb * (m as f64).ln(),
    };
    let (ln_sum, _) = log_power_sum(&gram.entries, n_blocks - 1);
    Ok((ln_d + k as f64 * nb * ln_nu_sq + ln_sum).exp())
}

/// `ln(1ᵀ T^p 1)` by repeated normalized products; also returns the final
/// normalized vector.
fn log_power_sum(t: &nalgebra::DMatrix<f64>, p: usize) -> (f64, DVector<f64>) {
    let mut v = DVector::from_element(t.nrows(), 1.0);
    let mut log_scale = 0.0;
    for _ in 0..p {
        v = t * v;
        let s = v.amax();
        v /= s;
        log_scale += s.ln();
    }
    (log_scale + v.sum().ln(), v)
}

/// Random phase model at large local dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpmSpec {
    pub epsilon: f64,
    pub t: usize,
    pub n: usize,
    pub k: usize,
}

impl RpmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t % 2 != 0 {
            return Err(Error::arg(format!("RPM depth t = {} must be even", self.t)));
        }
        if self.n < 2 || self.k < 1 || !(self.epsilon > 0.0) {
            return Err(Error::arg("RPM needs N ≥ 2, k ≥ 1 and ε > 0"));
        }
        Ok(())
    }

    /// `x = N / e^{εt}`.
    pub fn x(&self) -> f64 {
        self.n as f64 / (self.epsilon * self.t as f64).exp()
    }
}

/// Transfer matrix `T_{σσ'} = exp{-ε(k - n_F(σσ'⁻¹))}^{t/2}` over `S_k`.
pub fn rpm_transfer_matrix(spec: &RpmSpec) -> Result<(Vec<PermutationElement>, nalgebra::DMatrix<f64>)> {
    spec.validate()?;
    // capacity check shared with the commutant enumeration
    CommutantBasis::enumerate(EnsembleKind::Unitary, spec.k)?;
    let perms = permutations(spec.k);
    let half = spec.t as f64 / 2.0;
    let n = perms.len();
    let t = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let nf = perm_stats(&perms[i], &perms[j]).unwrap().fixed_points;
        (-spec.epsilon * half * (spec.k - nf) as f64).exp()
    });
    Ok((perms, t))
}

/// `(1ᵀT^{N-1}1, 1ᵀT^{N-1}1 / k!)`.
pub fn rpm_ipr_exact(spec: &RpmSpec) -> Result<(f64, f64)> {
    let (perms, t) = rpm_transfer_matrix(spec)?;
    let (ln_sum, _) = log_power_sum(&t, spec.n - 1);
    let raw = ln_sum.exp();
    Ok((raw, (ln_sum - (perms.len() as f64).ln()).exp()))
}

/// Finite-size asymptotics `e^{k(k-1)x/2}(1 - k(k-1)(k-2) x^{3/2} / (3√N))`.
pub fn rpm_ipr_asymptotic(k: usize, x: f64, n: f64) -> Result<f64> {
    if x < 0.0 || n < 1.0 {
        return Err(Error::arg("rpm_ipr_asymptotic needs x ≥ 0 and N ≥ 1"));
    }
    let kf = k as f64;
    Ok((kf * (kf - 1.0) * x / 2.0).exp()
        * (1.0 - kf * (kf - 1.0) * (kf - 2.0) * x.powf(1.5) / (3.0 * n.sqrt())))
}

/// RPM scaling variables: `x = N/e^{εt}`, `N_Th = e^{εt}`.
pub fn rpm_scaling_params(spec: &RpmSpec) -> Result<ScalingVariables> {
    spec.validate()?;
    let x = spec.x();
    Ok(ScalingVariables {
        x,
        alpha: x,
        beta: 0.0,
        n_thouless: (spec.epsilon * spec.t as f64).exp(),
    })
}

//! The universal two-parameter overlap distribution `P(ω; α, β)`.
//!
//! The base density is a Porter-Thomas variable times an independent
//! lognormal with `E[ω₂^k] = e^{k(k-1)α/2}` (`σ² = α`, `μ = -α/2`), written
//! as a Gaussian integral over the lognormal exponent. The first-order
//! correction applies `β [3 + 12ω∂ + (15/2)ω²∂² + ω³∂³]` to the base
//! density; the derivatives act analytically on each quadrature node.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::quadrature::NormalRule;

/// Coefficients of `ω^n ∂^n`, `n = 0..=3`, in the first-order operator.
const OPERATOR: [f64; 4] = [3.0, 12.0, 7.5, 1.0];
pub const CDF_GRID_POINTS: usize = 4096;
pub const CDF_GRID_LOW: f64 = 1e-8;
const TAIL_BOUND: f64 = 1e-10;

/// Parameters `(ensemble, α, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalParams {
    pub ensemble: EnsembleKind,
    pub alpha: f64,
    pub beta: f64,
}

impl UniversalParams {
    pub fn new(ensemble: EnsembleKind, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !(beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::arg(format!("need α ≥ 0 and β ≥ 0 (α = {alpha}, β = {beta})")));
        }
        Ok(Self { ensemble, alpha, beta })
    }

    /// Whether `β k²(k-1) ≤ 1/2`, the range where the first-order expansion
    /// of the order-`k` moment is trusted.
    pub fn within_validity(&self, k: usize) -> bool {
        let k = k as f64;
        self.beta * k * k * (k - 1.0) <= 0.5
    }

    /// Logs a warning when outside the validity window; returns the verdict.
    pub fn check_validity(&self, k: usize) -> bool {
        let ok = self.within_validity(k);
        if !ok {
            log::warn!(
                "β = {} is outside the first-order window for moment order {k} (β·k²(k−1) > 0.5)",
                self.beta
            );
        }
        ok
    }
}

/// `E[ω^k] = m_k e^{k(k-1)α/2} e^{-k²(k-1)β}`.
pub fn theoretical_moment(k: usize, params: &UniversalParams) -> f64 {
    params.ensemble.haar_moment(k) * crate::closed_forms::universal_ratio(k, params.alpha, params.beta)
}

/// Exact moments of the first-order density:
/// `m_k e^{k(k-1)α/2} (1 - k(k-1)(k-1/2)β)`.
pub fn linearized_moment(k: usize, params: &UniversalParams) -> f64 {
    let kf = k as f64;
    params.ensemble.haar_moment(k)
        * (kf * (kf - 1.0) * params.alpha / 2.0).exp()
        * (1.0 - kf * (kf - 1.0) * (kf - 0.5) * params.beta)
}

/// One quadrature node of the base density: `weight · ω^{-p} e^{-rate·ω}`
/// with `p = 0` (unitary) or `p = 1/2` (orthogonal).
#[derive(Clone, Copy, Debug)]
struct Node {
    weight: f64,
    rate: f64,
}

#[derive(Clone, Debug)]
struct CdfGrid {
    omega: Vec<f64>,
    /// Distribution function of the positive-part law on the grid.
    cdf: Vec<f64>,
    /// Cumulative negative mass `∫_0^ω max(-pdf, 0)` on the grid.
    negative: Vec<f64>,
    /// Slopes of `ln ω` against the CDF for monotone cubic interpolation.
    slopes: Vec<f64>,
    report: NegativityReport,
}

/// Where the first-order density fails to be a probability density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    /// Smallest density on the sampling grid and where it occurs.
    pub min_pdf: f64,
    pub min_pdf_omega: f64,
    /// `∫ max(-pdf, 0) dω` over the grid.
    pub negative_mass: f64,
    /// Largest decrease of the raw distribution function along the grid.
    pub cdf_decrease: f64,
}

/// Integral of `max(-f, 0)` on a log-spaced grid, cumulated. The integrand
/// is interpolated linearly in `ln ω` and its positive part integrated
/// exactly per interval, which keeps the result differentiable in the
/// parameters when a sign change moves across a grid point.
pub(crate) fn cumulative_negative_mass(omega: &[f64], pdf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(omega.len());
    out.push(0.0);
    for i in 1..omega.len() {
        let (g0, g1) = (-pdf[i - 1] * omega[i - 1], -pdf[i] * omega[i]);
        let h = omega[i].ln() - omega[i - 1].ln();
        acc += if g0 >= 0.0 && g1 >= 0.0 {
            0.5 * (g0 + g1) * h
        } else if g0 > 0.0 {
            0.5 * g0 * g0 / (g0 - g1) * h
        } else if g1 > 0.0 {
            0.5 * g1 * g1 / (g1 - g0) * h
        } else {
            0.0
        };
        out.push(acc);
    }
    out
}

/// Density, distribution function and sampler for fixed parameters.
#[derive(Debug)]
pub struct UniversalDistribution {
    pub params: UniversalParams,
    nodes: Vec<Node>,
    /// Polynomial `Σ c_m y^m` produced by the operator on one node.
    correction: [f64; 4],
    grid: OnceLock<CdfGrid>,
}

impl Clone for UniversalDistribution {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            nodes: self.nodes.clone(),
            correction: self.correction,
            grid: OnceLock::new(),
        }
    }
}

fn falling(a: f64, j: usize) -> f64 {
    (0..j).map(|i| a - i as f64).product()
}

fn binom(n: usize, j: usize) -> f64 {
    (0..j).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

impl UniversalDistribution {
    pub fn new(params: UniversalParams) -> Result<Self> {
        Self::with_rule(params, NormalRule::default_rule())
    }

    pub fn with_rule(params: UniversalParams, rule: &NormalRule) -> Result<Self> {
        let p = UniversalParams::new(params.ensemble, params.alpha, params.beta)?;
        let a = p.alpha;
        let sa = a.sqrt();
        let nodes = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&v, &w)| match p.ensemble {
                EnsembleKind::Unitary => Node {
                    weight: w * a.exp(),
                    rate: (sa * v + 1.5 * a).exp(),
                },
                EnsembleKind::Orthogonal => Node {
                    weight: w * (3.0 * a / 8.0).exp() / (2.0 * PI).sqrt(),
                    rate: 0.5 * (sa * v + a).exp(),
                },
            })
            .filter(|n| n.weight > 0.0)
            .collect();
        // ω^n ∂^n (ω^{-p} e^{-sω}) = ω^{-p} e^{-sω} Σ_j C(n,j) (-p)_j (-sω)^{n-j}
        let power = match p.ensemble {
            EnsembleKind::Unitary => 0.0,
            EnsembleKind::Orthogonal => -0.5,
        };
        let mut correction = [0.0; 4];
        for (n, &coef) in OPERATOR.iter().enumerate() {
            for j in 0..=n {
                let m = n - j;
                correction[m] += coef * binom(n, j) * falling(power, j) * (-1f64).powi(m as i32);
            }
        }
        Ok(Self {
            params: p,
            nodes,
            correction,
            grid: OnceLock::new(),
        })
    }

    fn prefactor(&self, omega: f64) -> f64 {
        match self.params.ensemble {
            EnsembleKind::Unitary => 1.0,
            EnsembleKind::Orthogonal => omega.powf(-0.5),
        }
    }

    fn poly(&self, y: f64) -> f64 {
        let c = &self.correction;
        c[0] + y * (c[1] + y * (c[2] + y * c[3]))
    }

    /// Base density and the coefficient of `β`: `pdf = base + β · slope`.
    pub fn pdf_parts(&self, omega: f64) -> Result<(f64, f64)> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("ω = {omega} must be non-negative")));
        }
        let pre = self.prefactor(omega);
        let mut base = 0.0;
        let mut corr = 0.0;
        for n in &self.nodes {
            let y = n.rate * omega;
            let e = n.weight * (-y).exp();
            base += e;
            corr += e * self.poly(y);
        }
        Ok((pre * base, pre * corr))
    }

    pub fn pdf(&self, omega: f64) -> Result<f64> {
        let (b, c) = self.pdf_parts(omega)?;
        Ok(b + self.params.beta * c)
    }

    /// `∫_0^ω x^{m-p} e^{-s x} dx` for `m = 0..=3`, in units where the
    /// node's weight is applied by the caller.
    fn node_partial_integrals(&self, rate: f64, omega: f64) -> [f64; 4] {
        let y = rate * omega;
        let ey = (-y).exp();
        let mut out = [0.0; 4];
        match self.params.ensemble {
            EnsembleKind::Unitary => {
                // γ(m+1, y) / s
                let mut g = 1.0 - ey;
                let mut pw = 1.0;
                out[0] = g / rate;
                for m in 1..4 {
                    pw *= y;
                    g = m as f64 * g - pw * ey;
                    out[m] = g / rate;
                }
            }
            EnsembleKind::Orthogonal => {
                // γ(m+1/2, y) / √s
                let mut g = PI.sqrt() * erf(y.sqrt());
                let mut pw = y.sqrt();
                let rs = rate.sqrt();
                out[0] = g / rs;
                for m in 1..4 {
                    let a = m as f64 - 0.5;
                    g = a * g - pw * ey;
                    pw *= y;
                    out[m] = g / rs;
                }
            }
        }
        out
    }

    /// Closed-form distribution function, summed node by node.
    pub fn cdf(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("ω = {omega} must be non-negative")));
        }
        if omega == f64::INFINITY {
            return Ok(1.0);
        }
        let beta = self.params.beta;
        let c = &self.correction;
        let mut total = 0.0;
        for n in &self.nodes {
            let g = self.node_partial_integrals(n.rate, omega);
            let corr = c[0] * g[0] + c[1] * g[1] + c[2] * g[2] + c[3] * g[3];
            total += n.weight * (g[0] + beta * corr);
        }
        Ok(total)
    }

    /// Smallest `ω_hi` (doubling from 16) whose tail mass is below 1e-10.
    pub fn upper_cutoff(&self) -> f64 {
        let mut hi = 16.0;
        while hi < 1e12 {
            if (1.0 - self.cdf(hi).unwrap()).abs() < TAIL_BOUND {
                return hi;
            }
            hi *= 2.0;
        }
        hi
    }

    /// Log-spaced grid `[10⁻⁸, ω_hi]` with the raw distribution function,
    /// the density and the derived positive-part law.
    fn grid(&self) -> &CdfGrid {
        self.grid.get_or_init(|| {
            let hi = self.upper_cutoff();
            let (l0, l1) = (CDF_GRID_LOW.ln(), hi.ln());
            let omega: Vec<f64> = (0..CDF_GRID_POINTS)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (CDF_GRID_POINTS - 1) as f64).exp())
                .collect();
            let raw: Vec<f64> = omega.iter().map(|&w| self.cdf(w).unwrap()).collect();
            let pdf: Vec<f64> = omega.iter().map(|&w| self.pdf(w).unwrap()).collect();
            let negative = cumulative_negative_mass(&omega, &pdf);
            let total = 1.0 + negative[negative.len() - 1];
            let mut report = NegativityReport {
                min_pdf: f64::INFINITY,
                min_pdf_omega: 0.0,
                negative_mass: total - 1.0,
                cdf_decrease: 0.0,
            };
            let mut high = f64::NEG_INFINITY;
            let mut run = 0.0f64;
            let mut cdf = Vec::with_capacity(raw.len());
            for i in 0..raw.len() {
                report.cdf_decrease = report.cdf_decrease.max(high - raw[i]);
                high = high.max(raw[i]);
                if pdf[i] < report.min_pdf {
                    report.min_pdf = pdf[i];
                    report.min_pdf_omega = omega[i];
                }
                run = run.max((raw[i] + negative[i]) / total);
                cdf.push(run);
            }
            let slopes = pchip_slopes(&cdf, &omega.iter().map(|w| w.ln()).collect::<Vec<_>>());
            CdfGrid {
                omega,
                cdf,
                negative,
                slopes,
                report,
            }
        })
    }

    /// Negativity diagnostics of the density on the sampling grid.
    pub fn negativity(&self) -> NegativityReport {
        self.grid().report
    }

    /// Distribution function of the positive-part law
    /// `max(pdf, 0) / ∫ max(pdf, 0)`, the law that [`Self::sample`] draws
    /// from. It equals [`Self::cdf`] whenever the density is non-negative.
    pub fn positive_cdf(&self, omega: f64) -> Result<f64> {
        let raw = self.cdf(omega)?;
        let g = self.grid();
        if g.report.negative_mass == 0.0 {
            return Ok(raw);
        }
        let last = g.omega.len() - 1;
        let total = 1.0 + g.report.negative_mass;
        if omega <= g.omega[0] {
            return Ok((raw / total).max(0.0).min(g.cdf[0]).min(1.0));
        }
        if omega >= g.omega[last] {
            return Ok(((raw + g.negative[last]) / total).max(g.cdf[last]).min(1.0));
        }
        let i = g.omega.partition_point(|&w| w <= omega) - 1;
        let s = (omega.ln() - g.omega[i].ln()) / (g.omega[i + 1].ln() - g.omega[i].ln());
        if g.negative[i + 1] > g.negative[i] {
            // the density changes sign here; the positive part is nearly
            // flat and the grid values are the reliable ones
            return Ok((g.cdf[i] + s * (g.cdf[i + 1] - g.cdf[i])).min(1.0));
        }
        Ok(((raw + g.negative[i]) / total).max(g.cdf[i]).min(g.cdf[i + 1]).min(1.0))
    }

    /// Quantile of the positive-part law by monotone cubic interpolation of
    /// `ln ω` against its distribution function on the cached grid.
    pub fn quantile(&self, u: f64) -> f64 {
        let g = self.grid();
        if u <= g.cdf[0] {
            // power-law head: F ∝ ω (unitary) or √ω (orthogonal)
            let exponent = match self.params.ensemble {
                EnsembleKind::Unitary => 1.0,
                EnsembleKind::Orthogonal => 2.0,
            };
            return if g.cdf[0] > 0.0 { g.omega[0] * (u / g.cdf[0]).powf(exponent) } else { 0.0 };
        }
        let last = g.cdf.len() - 1;
        if u >= g.cdf[last] {
            return g.omega[last];
        }
        let i = g.cdf.partition_point(|&f| f <= u) - 1;
        let (f0, f1) = (g.cdf[i], g.cdf[i + 1]);
        let (y0, y1) = (g.omega[i].ln(), g.omega[i + 1].ln());
        let h = f1 - f0;
        if h <= 0.0 {
            return g.omega[i + 1];
        }
        let s = (u - f0) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        (h00 * y0 + h10 * h * g.slopes[i] + h01 * y1 + h11 * h * g.slopes[i + 1]).exp()
    }

    /// Inverse-CDF samples from the positive-part law.
    pub fn sample_inverse_cdf<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.random::<f64>())).collect()
    }

    /// Product-form samples at `β = 0`: Porter-Thomas times lognormal.
    pub fn sample_product<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let a = self.params.alpha;
        (0..n)
            .map(|_| {
                let pt: f64 = match self.params.ensemble {
                    EnsembleKind::Unitary => rng.sample(Exp1),
                    EnsembleKind::Orthogonal => {
                        let g: f64 = rng.sample(StandardNormal);
                        g * g
                    }
                };
                let v: f64 = rng.sample(StandardNormal);
                pt * (a.sqrt() * v - a / 2.0).exp()
            })
            .collect()
    }

    /// `β = 0` uses the product form, otherwise inverse-CDF sampling. Where
    /// the first-order density is negative the draws follow its
    /// renormalized positive part; see [`Self::negativity`].
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        if self.params.beta == 0.0 {
            self.sample_product(n, rng)
        } else {
            self.sample_inverse_cdf(n, rng)
        }
    }
}

/// Fritsch-Carlson slopes `dy/dx` for strictly increasing `x` where
/// possible; flat segments get zero slope.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1)
        .map(|i| {
            let h = x[i + 1] - x[i];
            if h > 0.0 {
                (y[i + 1] - y[i]) / h
            } else {
                0.0
            }
        })
        .collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        let (d0, d1) = (delta[i - 1], delta[i]);
        if d0 <= 0.0 || d1 <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m
}

/// Samples from `P(ω; α, β)` (product form at `β = 0`).
pub fn sample_overlaps<R: Rng + ?Sized>(params: &UniversalParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptySample("requested zero samples".into()));
    }
    Ok(UniversalDistribution::new(*params)?.sample(n, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{porter_thomas_pdf, Dimension};
    use crate::quadrature::integrate_half_line;
    use crate::rng::{stream, Domain};

    fn dist(e: EnsembleKind, a: f64, b: f64) -> UniversalDistribution {
        UniversalDistribution::new(UniversalParams::new(e, a, b).unwrap()).unwrap()
    }

    #[test]
    fn porter_thomas_limits() {
        let u = dist(EnsembleKind::Unitary, 0.0, 0.0);
        let o = dist(EnsembleKind::Orthogonal, 0.0, 0.0);
        for w in [0.0, 0.3, 1.0, 4.0, 12.0] {
            assert!((u.pdf(w).unwrap() - (-w).exp()).abs() < 1e-10);
        }
        let expect = porter_thomas_pdf(EnsembleKind::Orthogonal, Dimension::Infinite, 2.0);
        assert!((o.pdf(2.0).unwrap() - expect).abs() < 1e-12);
        assert!((u.cdf(2f64.ln()).unwrap() - 0.5).abs() < 1e-12);
        assert!(u.pdf(-1.0).is_err());
    }

    #[test]
    fn correction_polynomials() {
        let u = dist(EnsembleKind::Unitary, 0.1, 0.01);
        assert_eq!(u.correction, [3.0, -12.0, 7.5, -1.0]);
        let o = dist(EnsembleKind::Orthogonal, 0.1, 0.01);
        let expect = [0.75, -6.75, 6.0, -1.0];
        for (a, b) in o.correction.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn moments_and_normalization() {
        for e in EnsembleKind::ALL {
            for a in [0.0, 0.3, 0.8] {
                for b in [0.0, 0.01, 0.05] {
                    let d = dist(e, a, b);
                    let z = integrate_half_line(|w| d.pdf(w).unwrap(), 1e-13);
                    assert!((z - 1.0).abs() < 1e-8, "{e} α={a} β={b}: {z}");
                    assert!((d.cdf(1e9).unwrap() - 1.0).abs() < 1e-8);
                    for k in 1..=5 {
                        let m = integrate_half_line(|w| w.powi(k as i32) * d.pdf(w).unwrap(), 1e-13);
                        let lin = linearized_moment(k, &d.params);
                        assert!((m - lin).abs() < 1e-6 * (1.0 + lin.abs()), "{e} α={a} β={b} k={k}: {m} vs {lin}");
                    }
                }
            }
        }
    }

    #[test]
    fn theoretical_moment_examples() {
        let p = UniversalParams::new(EnsembleKind::Unitary, 0.5, 0.0).unwrap();
        assert!((theoretical_moment(2, &p) - 2.0 * 0.5f64.exp()).abs() < 1e-12);
        let p = UniversalParams::new(EnsembleKind::Unitary, 0.5, 0.02).unwrap();
        assert!((theoretical_moment(2, &p) - 2.0 * 0.42f64.exp()).abs() < 1e-12);
        assert!((theoretical_moment(1, &p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        for e in EnsembleKind::ALL {
            let d = dist(e, 0.3, 0.01);
            for w in [0.01, 0.5, 2.0, 7.0] {
                let num = crate::quadrature::integrate_sqrt_endpoints(|x| d.pdf(x).unwrap(), 0.0, w, 1e-14);
                assert!((num - d.cdf(w).unwrap()).abs() < 1e-10, "{e} ω={w}");
            }
            assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn quantiles_invert_the_cdf() {
        for e in EnsembleKind::ALL {
            let d = dist(e, 0.3, 0.0);
            for u in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
                let w = d.quantile(u);
                assert!((d.cdf(w).unwrap() - u).abs() < 1e-6 * u.max(1e-3), "{e} u={u}");
            }
        }
    }

    #[test]
    fn product_sampler_moments() {
        let d = dist(EnsembleKind::Unitary, 0.5, 0.0);
        let mut rng = stream(3, Domain::Sampling, 0);
        let xs = d.sample(1_000_000, &mut rng);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd / n.sqrt());
        let m2: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let mm = m2.iter().sum::<f64>() / n;
        let sd2 = (m2.iter().map(|x| (x - mm).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mm - 2.0 * 0.5f64.exp()).abs() < 3.0 * sd2 / n.sqrt());
    }
}

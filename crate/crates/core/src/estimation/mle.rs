use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use super::ks::ks_statistic;
use super::SCHEMA_VERSION;
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::quadrature::NormalRule;
use crate::rng::{stream, Domain};
use crate::universal::{cumulative_negative_mass, UniversalDistribution, UniversalParams, CDF_GRID_LOW};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    AlphaOnly,
    AlphaBeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdErrorMethod {
    ObservedInformation,
    Bootstrap,
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub alpha_max: f64,
    pub beta_max: f64,
    /// Convergence threshold on the projected gradient of the mean
    /// log-likelihood.
    pub gradient_tolerance: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    /// Search bracket for `α`; `None` scans `[0, alpha_max]` first.
    pub alpha_bracket: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            alpha_max: 4.0,
            beta_max: 0.25,
            gradient_tolerance: 1e-7,
            bootstrap_resamples: 200,
            bootstrap_seed: 0,
            alpha_bracket: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema: u32,
    pub ensemble: EnsembleKind,
    pub mode: FitMode,
    pub alpha_hat: f64,
    /// Zero when `β` is held fixed.
    pub beta_hat: f64,
    pub alpha_std_error: f64,
    pub beta_std_error: f64,
    /// Row-major 2×2 covariance of `(α, β)`.
    pub covariance: [[f64; 2]; 2],
    pub std_error_method: StdErrorMethod,
    pub log_likelihood: f64,
    pub n_samples: usize,
    pub ks_statistic: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn params(&self) -> UniversalParams {
        UniversalParams {
            ensemble: self.ensemble,
            alpha: self.alpha_hat,
            beta: self.beta_hat,
        }
    }
}

/// Rule used inside the likelihood; narrower than the moment rule because
/// only densities at observed points are needed.
fn likelihood_rule() -> &'static NormalRule {
    static RULE: OnceLock<NormalRule> = OnceLock::new();
    RULE.get_or_init(|| NormalRule::equispaced(10.0, 0.25))
}

/// Density parts at fixed `α`, `pdf = base + β slope`, at the samples and
/// on a grid used for the normalization of the positive-part law.
struct Parts {
    base: Vec<f64>,
    slope: Vec<f64>,
    /// Largest `β` keeping every sample density positive.
    beta_feasible: f64,
    grid: Vec<f64>,
    grid_base: Vec<f64>,
    grid_slope: Vec<f64>,
}

const NORMALIZATION_GRID_POINTS: usize = 2048;

impl Parts {
    /// `Σ ln pdf_j - n ln(1 + ∫ max(-pdf, 0))`: the log-likelihood of the
    /// renormalized positive part of the first-order density.
    fn log_likelihood(&self, beta: f64) -> f64 {
        let mut total = 0.0;
        for (b, s) in self.base.iter().zip(&self.slope) {
            let p = b + beta * s;
            if !(p > 0.0) {
                return f64::NEG_INFINITY;
            }
            total += p.ln();
        }
        if beta > 0.0 {
            let pdf: Vec<f64> = self.grid_base.iter().zip(&self.grid_slope).map(|(b, s)| b + beta * s).collect();
            let negative = *cumulative_negative_mass(&self.grid, &pdf).last().unwrap();
            total -= self.base.len() as f64 * negative.ln_1p();
        }
        total
    }

    /// Score at `β` of the sample term alone.
    fn sample_score(&self, beta: f64) -> f64 {
        self.base.iter().zip(&self.slope).map(|(b, s)| s / (b + beta * s)).sum()
    }

    /// Negative mass of the density on the grid and its `β` derivative,
    /// differentiating the same piecewise-linear rule as
    /// [`cumulative_negative_mass`].
    fn negative_mass(&self, beta: f64) -> (f64, f64) {
        let (mut mass, mut deriv) = (0.0, 0.0);
        for i in 1..self.grid.len() {
            let g = |j: usize| -(self.grid_base[j] + beta * self.grid_slope[j]) * self.grid[j];
            let dg = |j: usize| -self.grid_slope[j] * self.grid[j];
            let (g0, g1, d0, d1) = (g(i - 1), g(i), dg(i - 1), dg(i));
            let h = self.grid[i].ln() - self.grid[i - 1].ln();
            if g0 >= 0.0 && g1 >= 0.0 {
                mass += 0.5 * (g0 + g1) * h;
                deriv += 0.5 * (d0 + d1) * h;
            } else if g0 > 0.0 || g1 > 0.0 {
                let (p, q, dp, dq) = if g0 > 0.0 { (g0, g1, d0, d1) } else { (g1, g0, d1, d0) };
                let w = p - q;
                mass += 0.5 * p * p / w * h;
                deriv += 0.5 * h * (2.0 * p * dp * w - p * p * (dp - dq)) / (w * w);
            }
        }
        (mass, deriv)
    }

    /// `∂ℓ/∂β` of [`Self::log_likelihood`].
    fn score(&self, beta: f64) -> f64 {
        let (mass, deriv) = self.negative_mass(beta);
        self.sample_score(beta) - self.base.len() as f64 * deriv / (1.0 + mass)
    }
}

struct Likelihood<'a> {
    samples: &'a [f64],
    ensemble: EnsembleKind,
    /// Upper end of the normalization grid, fixed per fit so that the
    /// likelihood is smooth in `α`.
    grid_top: f64,
}

impl Likelihood<'_> {
    fn parts(&self, alpha: f64) -> Parts {
        let d = UniversalDistribution::with_rule(
            UniversalParams {
                ensemble: self.ensemble,
                alpha,
                beta: 0.0,
            },
            likelihood_rule(),
        )
        .expect("validated parameters");
        let mut base = Vec::with_capacity(self.samples.len());
        let mut slope = Vec::with_capacity(self.samples.len());
        let mut beta_feasible = f64::INFINITY;
        for &w in self.samples {
            let (b, s) = d.pdf_parts(w).expect("validated samples");
            if s < 0.0 {
                beta_feasible = beta_feasible.min(-b / s);
            }
            base.push(b);
            slope.push(s);
        }
        let (l0, l1) = (CDF_GRID_LOW.ln(), self.grid_top.ln());
        let grid: Vec<f64> = (0..NORMALIZATION_GRID_POINTS)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (NORMALIZATION_GRID_POINTS - 1) as f64).exp())
            .collect();
        let (grid_base, grid_slope) = grid.iter().map(|&w| d.pdf_parts(w).unwrap()).unzip();
        Parts {
            base,
            slope,
            beta_feasible,
            grid,
            grid_base,
            grid_slope,
        }
    }

    fn at(&self, alpha: f64, beta: f64) -> f64 {
        if alpha < 0.0 || beta < 0.0 {
            return f64::NEG_INFINITY;
        }
        self.parts(alpha).log_likelihood(beta)
    }

    /// Maximizes over `β ∈ [0, beta_max]` at fixed `α`.
    fn profile(&self, alpha: f64, beta_max: f64) -> (f64, f64) {
        let parts = self.parts(alpha);
        let hi = beta_max.min(parts.beta_feasible * (1.0 - 1e-9));
        // the normalization is flat at β = 0, so the sample score decides
        // whether the optimum is on the boundary
        if hi <= 0.0 || parts.sample_score(0.0) <= 0.0 {
            return (0.0, parts.log_likelihood(0.0));
        }
        let (mut beta, _) = brent_max(|b| parts.log_likelihood(b), 0.0, hi, 1e-11);
        // polish on the analytic score where it changes sign nearby
        let (mut lo, mut up) = ((beta - 1e-7).max(0.0), (beta + 1e-7).min(hi));
        if parts.score(lo) > 0.0 && parts.score(up) < 0.0 {
            for _ in 0..60 {
                let mid = 0.5 * (lo + up);
                if parts.score(mid) > 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            beta = 0.5 * (lo + up);
        }
        (beta, parts.log_likelihood(beta))
    }

    fn profile_value(&self, alpha: f64, mode: FitMode, beta_max: f64) -> (f64, f64) {
        match mode {
            FitMode::AlphaOnly => (0.0, self.at(alpha, 0.0)),
            FitMode::AlphaBeta => self.profile(alpha, beta_max),
        }
    }
}

/// Brent's parabolic-interpolation search for the maximum of `f` on
/// `[a, b]`; returns the maximizer and value.
fn brent_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105;
    let mut g = |x: f64| -f(x);
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = tol + 1e-10 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, -fx)
}

struct Optimum {
    alpha: f64,
    beta: f64,
    value: f64,
}

fn maximize(lik: &Likelihood, mode: FitMode, opts: &FitOptions) -> Optimum {
    let (a, b) = match opts.alpha_bracket {
        Some((lo, hi)) => (lo.max(0.0), hi.min(opts.alpha_max)),
        None => {
            let grid: Vec<f64> = [0.0, 0.02, 0.06, 0.12, 0.2, 0.3, 0.45, 0.65, 0.9, 1.25, 1.7, 2.3, 3.1, 4.0]
                .iter()
                .map(|x| x * opts.alpha_max / 4.0)
                .collect();
            let values: Vec<f64> = grid.iter().map(|&x| lik.profile_value(x, mode, opts.beta_max).1).collect();
            let best = values
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .map(|p| p.0)
                .unwrap();
            (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)])
        }
    };
    let (alpha, _) = brent_max(|x| lik.profile_value(x, mode, opts.beta_max).1, a, b, 1e-10);
    let mut best = Optimum {
        alpha,
        beta: 0.0,
        value: f64::NEG_INFINITY,
    };
    // the bracket ends are candidates too, since the search never lands
    // exactly on a bound
    for x in [a, alpha, b] {
        let (beta, value) = lik.profile_value(x, mode, opts.beta_max);
        if value > best.value {
            best = Optimum { alpha: x, beta, value };
        }
    }
    polish(lik, mode, opts, best, a, b)
}

/// Newton steps on `∂ℓ/∂α` at the profiled `β`. Near the optimum the
/// log-likelihood changes by less than its roundoff, so a value-based
/// search stalls before the gradient criterion is met.
fn polish(lik: &Likelihood, mode: FitMode, opts: &FitOptions, mut best: Optimum, a: f64, b: f64) -> Optimum {
    const H: f64 = 1e-5;
    let slope = |o: &Optimum| (lik.at(o.alpha + H, o.beta) - lik.at(o.alpha - H, o.beta)) / (2.0 * H);
    for _ in 0..4 {
        let h2 = (0.5 * (best.alpha - a.max(0.0))).min(0.5 * (b - best.alpha)).min(1e-3);
        if h2 < 2.0 * H {
            break;
        }
        let g = slope(&best);
        // curvature at fixed β: a contraction of the profile step, checked below
        let curv = (lik.at(best.alpha + h2, best.beta) - 2.0 * lik.at(best.alpha, best.beta)
            + lik.at(best.alpha - h2, best.beta))
            / (h2 * h2);
        if !(curv < 0.0) {
            break;
        }
        let alpha = (best.alpha - g / curv).clamp(a.max(0.0), b);
        let (beta, value) = lik.profile_value(alpha, mode, opts.beta_max);
        let next = Optimum { alpha, beta, value };
        if !(slope(&next).abs() < g.abs()) {
            break;
        }
        best = next;
    }
    best
}

/// Observed information by central differences of the log-likelihood. The
/// stencil is shifted inside the domain when the optimum sits on a bound.
fn observed_information(lik: &Likelihood, opt: &Optimum, mode: FitMode) -> (Vec<Vec<f64>>, [f64; 2]) {
    let ha = 1e-3;
    // near the largest feasible β the log-likelihood is steep, so the
    // stencil shrinks to stay inside the support
    let room = lik.parts(opt.alpha).beta_feasible - opt.beta;
    let hb = 1e-4f64.min(0.25 * room);
    let a0 = opt.alpha.max(ha);
    let b0 = opt.beta.max(hb);
    let dims = if mode == FitMode::AlphaBeta { 2 } else { 1 };
    let f = |da: f64, db: f64| -> f64 {
        let b = if dims == 2 { b0 + db } else { 0.0 };
        lik.at(a0 + da, b)
    };
    let f00 = f(0.0, 0.0);
    let mut info = vec![vec![0.0; dims]; dims];
    info[0][0] = -(f(ha, 0.0) - 2.0 * f00 + f(-ha, 0.0)) / (ha * ha);
    if dims == 2 {
        info[1][1] = -(f(0.0, hb) - 2.0 * f00 + f(0.0, -hb)) / (hb * hb);
        let cross = (f(ha, hb) - f(ha, -hb) - f(-ha, hb) + f(-ha, -hb)) / (4.0 * ha * hb);
        info[0][1] = -cross;
        info[1][0] = -cross;
    }
    // gradient at the optimum itself, projected onto the feasible cone; the
    // β component is analytic because the normalization of the positive
    // part varies steeply where the negative tail first appears
    let n = lik.samples.len() as f64;
    let ga_step = 1e-5;
    let beta_at = if dims == 2 { opt.beta } else { 0.0 };
    let fa = |da: f64| lik.at(opt.alpha + da, beta_at);
    let ga = if opt.alpha >= ga_step {
        (fa(ga_step) - fa(-ga_step)) / (2.0 * ga_step)
    } else {
        (fa(ga_step) - fa(0.0)) / ga_step
    } / n;
    let mut grad = [ga, 0.0];
    if dims == 2 {
        grad[1] = lik.parts(opt.alpha).score(opt.beta) / n;
    }
    if opt.alpha < ga_step && grad[0] < 0.0 {
        grad[0] = 0.0;
    }
    if dims == 2 && opt.beta == 0.0 && grad[1] < 0.0 {
        grad[1] = 0.0;
    }
    (info, grad)
}

fn invert(info: &[Vec<f64>]) -> Option<[[f64; 2]; 2]> {
    match info.len() {
        1 => (info[0][0] > 0.0).then(|| [[1.0 / info[0][0], 0.0], [0.0, 0.0]]),
        _ => {
            let (a, b, c) = (info[0][0], info[0][1], info[1][1]);
            let det = a * c - b * b;
            // near-singular: condition number above 1e12
            let tr = a + c;
            let disc = ((a - c).powi(2) + 4.0 * b * b).sqrt();
            let (lmax, lmin) = (0.5 * (tr + disc), 0.5 * (tr - disc));
            if !(a > 0.0 && det > 0.0 && lmin > 1e-12 * lmax) {
                return None;
            }
            Some([[c / det, -b / det], [-b / det, a / det]])
        }
    }
}

fn checked(samples: &[f64]) -> Result<()> {
    if samples.len() < 100 {
        return Err(Error::arg(format!("likelihood fit needs at least 100 samples, got {}", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("sample {bad} is not a finite non-negative overlap")));
    }
    Ok(())
}

impl<'a> Likelihood<'a> {
    fn new(samples: &'a [f64], ensemble: EnsembleKind) -> Self {
        let top = samples.iter().copied().fold(0.0, f64::max);
        Self {
            samples,
            ensemble,
            grid_top: (4.0 * top).max(64.0),
        }
    }
}

fn point_fit(samples: &[f64], ensemble: EnsembleKind, mode: FitMode, opts: &FitOptions) -> Optimum {
    maximize(&Likelihood::new(samples, ensemble), mode, opts)
}

/// Standard deviations of `(α̂, β̂)` over bootstrap resamples. Each
/// resample refits inside a bracket around `center` when one is given.
pub fn bootstrap_std_errors(
    samples: &[f64],
    ensemble: EnsembleKind,
    mode: FitMode,
    opts: &FitOptions,
    center: Option<(f64, f64)>,
) -> Result<[f64; 2]> {
    checked(samples)?;
    let n = samples.len();
    let mut local = opts.clone();
    if let Some((alpha, width)) = center {
        local.alpha_bracket = Some(((alpha - width).max(0.0), alpha + width));
    }
    let fits: Vec<(f64, f64)> = (0..opts.bootstrap_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(opts.bootstrap_seed, Domain::Bootstrap, r);
            let resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            let o = point_fit(&resample, ensemble, mode, &local);
            (o.alpha, o.beta)
        })
        .collect();
    let m = fits.len() as f64;
    let sd = |xs: Vec<f64>| {
        let mean = xs.iter().sum::<f64>() / m;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    Ok([sd(fits.iter().map(|f| f.0).collect()), sd(fits.iter().map(|f| f.1).collect())])
}

/// Maximum-likelihood fit with default options.
pub fn mle_fit(samples: &[f64], ensemble: EnsembleKind, mode: FitMode) -> Result<FitResult> {
    mle_fit_with(samples, ensemble, mode, &FitOptions::default())
}

/// Maximizes `Σ ln P(ω_i; α, β)` over `α ∈ [0, α_max]`, `β ∈ [0, β_max]`.
/// `β` is profiled out exactly at each `α` and the profile is maximized by
/// a scan followed by golden-section search. Standard errors come from the
/// observed information, with a bootstrap fallback when it is
/// near-singular.
pub fn mle_fit_with(samples: &[f64], ensemble: EnsembleKind, mode: FitMode, opts: &FitOptions) -> Result<FitResult> {
    checked(samples)?;
    let lik = Likelihood::new(samples, ensemble);
    let opt = maximize(&lik, mode, opts);
    let mut diagnostics = Vec::new();
    if !opt.value.is_finite() {
        return Ok(FitResult {
            schema: SCHEMA_VERSION,
            ensemble,
            mode,
            alpha_hat: opt.alpha,
            beta_hat: opt.beta,
            alpha_std_error: f64::NAN,
            beta_std_error: f64::NAN,
            covariance: [[f64::NAN; 2]; 2],
            std_error_method: StdErrorMethod::Unavailable,
            log_likelihood: opt.value,
            n_samples: samples.len(),
            ks_statistic: f64::NAN,
            gradient_norm: f64::NAN,
            converged: false,
            diagnostics: vec!["log-likelihood is not finite anywhere on the search path".into()],
        });
    }
    let (info, grad) = observed_information(&lik, &opt, mode);
    let gradient_norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    let mut converged = gradient_norm < opts.gradient_tolerance;
    if !converged {
        diagnostics.push(format!(
            "projected gradient ({:.3e}, {:.3e}) has norm above {:.1e}",
            grad[0], grad[1], opts.gradient_tolerance
        ));
    }
    if opt.alpha >= opts.alpha_max * (1.0 - 1e-6) {
        diagnostics.push("α̂ sits on the upper search bound".into());
        converged = false;
    }
    if mode == FitMode::AlphaBeta && opt.beta >= opts.beta_max * (1.0 - 1e-6) {
        diagnostics.push("β̂ sits on the upper search bound".into());
        converged = false;
    }
    let (covariance, method) = match invert(&info) {
        Some(cov) => (cov, StdErrorMethod::ObservedInformation),
        None => {
            diagnostics.push("observed information is near-singular; using bootstrap".into());
            let se = bootstrap_std_errors(samples, ensemble, mode, opts, None)?;
            ([[se[0] * se[0], 0.0], [0.0, se[1] * se[1]]], StdErrorMethod::Bootstrap)
        }
    };
    let alpha_std_error = covariance[0][0].sqrt();
    let beta_std_error = covariance[1][1].max(0.0).sqrt();
    if converged && !(alpha_std_error > 0.0 && (mode == FitMode::AlphaOnly || beta_std_error > 0.0)) {
        diagnostics.push("non-positive standard error".into());
        converged = false;
    }
    let params = UniversalParams::new(ensemble, opt.alpha, opt.beta)?;
    let ks = ks_statistic(samples, &UniversalDistribution::new(params)?)?;
    Ok(FitResult {
        schema: SCHEMA_VERSION,
        ensemble,
        mode,
        alpha_hat: opt.alpha,
        beta_hat: opt.beta,
        alpha_std_error,
        beta_std_error,
        covariance,
        std_error_method: method,
        log_likelihood: opt.value,
        n_samples: samples.len(),
        ks_statistic: ks,
        gradient_norm,
        converged,
        diagnostics,
    })
}

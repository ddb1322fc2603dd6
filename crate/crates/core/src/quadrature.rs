//! One-dimensional quadrature helpers.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Half width of the default equispaced rule.
pub const DEFAULT_NORMAL_HALF_WIDTH: f64 = 26.0;
/// Node spacing of the default equispaced rule.
pub const DEFAULT_NORMAL_STEP: f64 = 0.2;

/// Quadrature rule for expectations over a standard normal variable:
/// `E[f(v)] ≈ Σ w_i f(v_i)` with `Σ w_i = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    /// Trapezoid rule on `[-half_width, half_width]`. For integrands like
    /// `e^{cv}` the aliasing error is about `e^{-2π²/step²}` regardless of
    /// the shift `c`, which a Gauss-Hermite rule of modest order does not
    /// manage once `c` exceeds a few units.
    pub fn equispaced(half_width: f64, step: f64) -> Self {
        assert!(half_width > 0.0 && step > 0.0, "rule extent and step must be positive");
        let m = (half_width / step).round() as i64;
        let nodes: Vec<f64> = (-m..=m).map(|i| i as f64 * step).collect();
        let raw: Vec<f64> = nodes.iter().map(|v| (-0.5 * v * v).exp()).collect();
        let total: f64 = raw.iter().sum();
        Self {
            nodes,
            weights: raw.iter().map(|w| w / total).collect(),
        }
    }

    /// Golub-Welsch construction from the probabilists' Hermite recurrence.
    pub fn gauss_hermite(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for i in 1..order {
            let b = (i as f64).sqrt();
            jacobi[(i, i - 1)] = b;
            jacobi[(i - 1, i)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize to remove eigensolver noise
        for i in 0..order / 2 {
            let j = order - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if order % 2 == 1 {
            pairs[order / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    /// Shared rule of the default order.
    pub fn default_rule() -> &'static NormalRule {
        static RULE: OnceLock<NormalRule> = OnceLock::new();
        RULE.get_or_init(|| NormalRule::equispaced(DEFAULT_NORMAL_HALF_WIDTH, DEFAULT_NORMAL_STEP))
    }

    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * f(v))
            .sum()
    }
}

/// Tanh-sinh integral over a finite interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::integrate(f, a, b, tol).integral
}

/// Integral over `[a, b]` for integrands with up to inverse square-root
/// singularities at either endpoint. Each half is mapped by `x = a + u²`
/// (resp. `x = b - u²`), which makes such integrands smooth.
pub fn integrate_sqrt_endpoints(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let h = (mid - a).sqrt();
    let left = integrate(|u| 2.0 * u * f(a + u * u), 0.0, h, tol);
    let right = integrate(|u| 2.0 * u * f(b - u * u), 0.0, h, tol);
    left + right
}

/// Integral over `[0, ∞)` for integrands with at worst an inverse
/// square-root singularity at 0 and exponential-type decay. The half line is
/// cut at `0, 1, 2, 4, …` and the sweep stops once successive pieces are
/// negligible.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut total = integrate(|u| 2.0 * u * f(u * u), 0.0, 1.0, tol);
    let mut lo = 1.0;
    let mut quiet = 0;
    while lo < 1e9 {
        let hi = 2.0 * lo;
        let piece = integrate(&f, lo, hi, tol);
        total += piece;
        if piece.abs() <= 1e-17 * total.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    total
}

use serde::{Deserialize, Serialize};

use super::SCHEMA_VERSION;
use crate::error::{Error, Result};

/// Inclusive depth range used by a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub t: f64,
    pub value: f64,
    /// `-log₂(value / N)`.
    pub scaled: f64,
    pub in_window: bool,
}

/// Result of fitting `value(t) ≈ C N 2^{-t/τ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub schema: u32,
    pub n: usize,
    pub tau: f64,
    pub tau_std_error: f64,
    pub intercept: f64,
    pub kappa: Option<f64>,
    pub kappa_std_error: Option<f64>,
    pub window: FitWindow,
    /// Root-mean-square residual of the linear fit in the window.
    pub residual: f64,
    pub points: Vec<DecayPoint>,
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    rms: f64,
}

fn regress(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = if n > 2.0 { (ss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Line {
        slope,
        intercept,
        slope_se,
        rms: (ss / n).sqrt(),
    }
}

fn select(series: &[(f64, f64)], window: Option<FitWindow>) -> Result<FitWindow> {
    if series.is_empty() {
        return Err(Error::EmptySample("decay fit needs a nonempty series".into()));
    }
    let window = window.unwrap_or_else(|| {
        // last half of the series
        let t_max = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let t_min = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        FitWindow {
            t_min: t_min + 0.5 * (t_max - t_min),
            t_max,
        }
    });
    if !(window.t_min <= window.t_max) {
        return Err(Error::arg(format!("empty fit window [{}, {}]", window.t_min, window.t_max)));
    }
    Ok(window)
}

fn in_window(t: f64, w: FitWindow) -> bool {
    t >= w.t_min && t <= w.t_max
}

/// Fits `-log₂(value/N)` linearly in `t` over the window (default: the
/// last half of the depth range); `τ` is the inverse slope.
pub fn fit_decay_timescale(series: &[(f64, f64)], n: usize, window: Option<FitWindow>) -> Result<DecayFit> {
    let window = select(series, window)?;
    let nf = n as f64;
    let mut points = Vec::with_capacity(series.len());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &(t, value) in series {
        let inside = in_window(t, window);
        if inside && !(value > 0.0) {
            return Err(Error::Domain(format!("non-positive value {value} at t = {t} inside the fit window")));
        }
        let scaled = if value > 0.0 { -(value / nf).log2() } else { f64::NAN };
        if inside {
            xs.push(t);
            ys.push(scaled);
        }
        points.push(DecayPoint {
            t,
            value,
            scaled,
            in_window: inside,
        });
    }
    if xs.len() < 4 {
        return Err(Error::arg(format!("fit window holds {} points, need at least 4", xs.len())));
    }
    let line = regress(&xs, &ys);
    if !(line.slope > 0.0) {
        return Err(Error::numerical(
            format!("series does not decay in the window (slope {})", line.slope),
            None,
        ));
    }
    Ok(DecayFit {
        schema: SCHEMA_VERSION,
        n,
        tau: 1.0 / line.slope,
        tau_std_error: line.slope_se / (line.slope * line.slope),
        intercept: line.intercept,
        kappa: None,
        kappa_std_error: None,
        window,
        residual: line.rms,
        points,
    })
}

/// Adds `κ` from a `β(t)` series, assuming `β ∝ N 2^{-κ t/τ}` with the
/// already fitted `τ`. All positive points of the series are used.
pub fn fit_kappa(fit: &mut DecayFit, beta_series: &[(f64, f64)]) -> Result<()> {
    let nf = fit.n as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = beta_series
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(t, b)| (t, -(b / nf).log2()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::arg(format!("κ fit needs at least 3 positive β values, got {}", xs.len())));
    }
    let line = regress(&xs, &ys);
    fit.kappa = Some(line.slope * fit.tau);
    fit.kappa_std_error = Some(line.slope_se * fit.tau);
    Ok(())
}

/// Shared-slope fit over several system sizes, each with its own intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledDecayFit {
    pub schema: u32,
    pub sizes: Vec<usize>,
    pub tau: f64,
    pub tau_std_error: f64,
    pub residual: f64,
    pub window: Option<FitWindow>,
}

/// Fits `-log₂(value/N) = c_N + t/τ` jointly over all sizes. Each size uses
/// its own default window when `window` is `None`.
pub fn fit_decay_pooled(series: &[(usize, Vec<(f64, f64)>)], window: Option<FitWindow>) -> Result<PooledDecayFit> {
    let (mut sxx, mut sxy, mut count) = (0.0, 0.0, 0usize);
    let mut groups = Vec::with_capacity(series.len());
    for (n, s) in series {
        let fit = fit_decay_timescale(s, *n, window)?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit.points.iter().filter(|p| p.in_window).map(|p| (p.t, p.scaled)).unzip();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        for (x, y) in xs.iter().zip(&ys) {
            sxx += (x - mx).powi(2);
            sxy += (x - mx) * (y - my);
        }
        count += xs.len();
        groups.push((xs, ys, mx, my));
    }
    if groups.is_empty() {
        return Err(Error::EmptySample("pooled decay fit needs at least one size".into()));
    }
    let slope = sxy / sxx;
    let mut ss = 0.0;
    for (xs, ys, mx, my) in &groups {
        for (x, y) in xs.iter().zip(ys) {
            ss += (y - my - slope * (x - mx)).powi(2);
        }
    }
    if !(slope > 0.0) {
        return Err(Error::numerical(format!("pooled series does not decay (slope {slope})"), None));
    }
    let dof = count.saturating_sub(groups.len() + 1).max(1) as f64;
    let slope_se = (ss / dof / sxx).sqrt();
    Ok(PooledDecayFit {
        schema: SCHEMA_VERSION,
        sizes: series.iter().map(|s| s.0).collect(),
        tau: 1.0 / slope,
        tau_std_error: slope_se / (slope * slope),
        residual: (ss / count as f64).sqrt(),
        window,
    })
}

/// Collapse abscissa `N / 2^{t/τ}`.
pub fn collapse_coordinate(n: usize, t: f64, tau: f64) -> f64 {
    n as f64 * (-t / tau).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let n = 20;
        let series: Vec<(f64, f64)> = (0..=30).map(|t| (t as f64, n as f64 * 0.8f64.powi(t))).collect();
        let fit = fit_decay_timescale(&series, n, None).unwrap();
        assert!((fit.tau - 1.0 / (1.25f64).log2()).abs() < 1e-9);
        assert!((fit.tau - 3.1063).abs() < 1e-4);
        assert_eq!(fit.window.t_min, 15.0);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let series: Vec<(f64, f64)> = (1..=20).map(|t| (t as f64, (1.0 + 0.1 * (t as f64).sin()) * 0.7f64.powi(t))).collect();
        let a = fit_decay_timescale(&series, 12, None).unwrap();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, 37.5 * v)).collect();
        let b = fit_decay_timescale(&scaled, 12, None).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let bad: Vec<(f64, f64)> = (0..10).map(|t| (t as f64, if t == 8 { 0.0 } else { 1.0 })).collect();
        assert!(matches!(fit_decay_timescale(&bad, 4, None), Err(Error::Domain(_))));
        let short: Vec<(f64, f64)> = (0..5).map(|t| (t as f64, 0.5f64.powi(t))).collect();
        assert!(fit_decay_timescale(&short, 4, None).is_err());
    }

    #[test]
    fn kappa_from_planted_series() {
        let n = 16;
        let tau = 3.0;
        let series: Vec<(f64, f64)> = (0..=20).map(|t| (t as f64, n as f64 * (-(t as f64) / tau).exp2())).collect();
        let mut fit = fit_decay_timescale(&series, n, None).unwrap();
        let beta: Vec<(f64, f64)> = (2..=8).map(|t| (t as f64, 0.1 * n as f64 * (-2.74 * t as f64 / tau).exp2())).collect();
        fit_kappa(&mut fit, &beta).unwrap();
        assert!((fit.kappa.unwrap() - 2.74).abs() < 1e-9);
    }

    #[test]
    fn pooled_fit_ignores_offsets() {
        let groups: Vec<(usize, Vec<(f64, f64)>)> = [8usize, 12, 16]
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, (0..=24).map(|t| (t as f64, (1.0 + i as f64) * n as f64 * (-(t as f64) / 3.2).exp2())).collect()))
            .collect();
        let fit = fit_decay_pooled(&groups, None).unwrap();
        assert!((fit.tau - 3.2).abs() < 1e-9);
        assert!(fit.residual < 1e-10);
    }
}

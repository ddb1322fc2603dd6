use crate::error::{Error, Result};
use crate::universal::UniversalDistribution;

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample("KS statistic needs at least one sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// `sup_ω |F_n(ω) - F(ω)|`, evaluated at the jump points of the empirical
/// distribution function. `F` is the positive-part law of the model, which
/// is its ordinary distribution function whenever the density is
/// non-negative.
pub fn ks_statistic(samples: &[f64], model: &UniversalDistribution) -> Result<f64> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = model.positive_cdf(x.max(0.0))?;
        sup = sup.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(sup.clamp(0.0, 1.0))
}

/// Direct `O(n²)` evaluation from the definition, for cross-checking.
pub fn ks_statistic_brute_force(samples: &[f64], model: &UniversalDistribution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample("KS statistic needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let mut sup: f64 = 0.0;
    for &x in samples {
        let f = model.positive_cdf(x.max(0.0))?;
        let at = samples.iter().filter(|&&y| y <= x).count() as f64 / n;
        let below = samples.iter().filter(|&&y| y < x).count() as f64 / n;
        sup = sup.max((at - f).abs()).max((below - f).abs());
    }
    Ok(sup.clamp(0.0, 1.0))
}

/// Two-sample statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (xa, xb) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

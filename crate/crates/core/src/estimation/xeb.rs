use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mle::{mle_fit, FitMode};
use super::SCHEMA_VERSION;
use crate::circuit::{born_samples, realization_seed, run_circuit, run_noisy_trajectory, CircuitSpec, MeanEstimate, NoiseModel};
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};
use crate::universal::{theoretical_moment, UniversalParams};

/// Below this many bitstrings the report carries a precision warning.
pub const MIN_BITSTRINGS: usize = 1000;

/// Ideal weights `D p_ideal(x)` at bitstrings drawn from noisy runs,
/// grouped by trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct XebSamples {
    pub trajectories: Vec<Vec<f64>>,
}

impl XebSamples {
    pub fn bitstrings(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XebReport {
    pub schema: u32,
    pub epsilon_noise: f64,
    pub n: usize,
    pub t: usize,
    /// Linear XEB `D E_noisy[p_ideal(x)] - 1`.
    pub xeb_value: f64,
    pub xeb_std_error: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `I₂` of the universal distribution at `(α, β)`, per basis state.
    pub i2_alpha_beta: f64,
    /// `XEB / (D I₂^{α,β} - 1)`.
    pub fidelity_estimate: f64,
    pub fidelity_std_error: f64,
    /// `(1-ε)^{tN/2}`.
    pub reference_fidelity: f64,
    pub trajectories: usize,
    pub n_bitstrings: usize,
    pub sampling_measure: String,
    pub warnings: Vec<String>,
}

/// Corrected fidelity estimate from noisy-run samples and universal
/// parameters describing the ideal output distribution.
pub fn xeb_fidelity(
    samples: &XebSamples,
    params: &UniversalParams,
    n: usize,
    t: usize,
    epsilon: f64,
) -> Result<XebReport> {
    let count = samples.bitstrings();
    if count == 0 {
        return Err(Error::EmptySample("no noisy bitstrings".into()));
    }
    let mut warnings = Vec::new();
    if count < MIN_BITSTRINGS {
        warnings.push(format!("only {count} bitstrings; XEB precision is poor below {MIN_BITSTRINGS}"));
    }
    let dim = 2f64.powi(n as i32);
    // trajectory means carry the correlation between bitstrings of one run
    let means: Vec<f64> = samples
        .trajectories
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let pooled = samples.trajectories.iter().flatten().sum::<f64>() / count as f64;
    let spread = if means.len() > 1 {
        MeanEstimate::from_values(&means).std_error
    } else {
        MeanEstimate::from_values(&samples.trajectories.concat()).std_error
    };
    let xeb = pooled - 1.0;
    let m2 = theoretical_moment(2, params);
    let denom = m2 - 1.0;
    if !(denom > 0.0) {
        return Err(Error::numerical(
            format!("D I₂ - 1 = {denom} is not positive at α = {}, β = {}", params.alpha, params.beta),
            None,
        ));
    }
    Ok(XebReport {
        schema: SCHEMA_VERSION,
        epsilon_noise: epsilon,
        n,
        t,
        xeb_value: xeb,
        xeb_std_error: spread,
        alpha: params.alpha,
        beta: params.beta,
        i2_alpha_beta: m2 / dim,
        fidelity_estimate: xeb / denom,
        fidelity_std_error: spread / denom,
        reference_fidelity: (1.0 - epsilon).powf(t as f64 * n as f64 / 2.0),
        trajectories: samples.trajectories.len(),
        n_bitstrings: count,
        sampling_measure: "bitstrings Born-sampled from noisy trajectories, weighted by ideal probabilities".into(),
        warnings,
    })
}

/// Settings for a brickwork XEB experiment at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XebConfig {
    pub n: usize,
    pub t: usize,
    pub ensemble: EnsembleKind,
    pub epsilon: f64,
    pub realizations: usize,
    pub trajectories: usize,
    pub bitstrings_per_trajectory: usize,
    pub seed: u64,
}

/// Runs ideal and noisy brickwork circuits, fits `(α, β)` on the pooled
/// ideal overlaps and evaluates the corrected estimator.
pub fn run_xeb(config: &XebConfig) -> Result<XebReport> {
    let noise = NoiseModel::new(config.epsilon)?;
    if config.realizations == 0 || config.trajectories == 0 || config.bitstrings_per_trajectory == 0 {
        return Err(Error::arg("realizations, trajectories and bitstrings must be positive"));
    }
    let per: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let spec = CircuitSpec::brickwork(config.n, config.t, config.ensemble, realization_seed(config.seed, r));
            let ideal = run_circuit(&spec, None)?.probabilities();
            let dim = ideal.len() as f64;
            let overlaps: Vec<f64> = ideal.iter().map(|p| dim * p).collect();
            let mut runs = Vec::with_capacity(config.trajectories);
            for j in 0..config.trajectories as u64 {
                let index = r * config.trajectories as u64 + j;
                let noisy = run_noisy_trajectory(&spec, noise, &mut stream(config.seed, Domain::Noise, index))?;
                let xs = born_samples(&noisy, config.bitstrings_per_trajectory, &mut stream(config.seed, Domain::Sampling, index));
                runs.push(xs.into_iter().map(|x| overlaps[x]).collect());
            }
            Ok((overlaps, runs))
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = per.iter().flat_map(|p| p.0.iter().copied()).collect();
    let fit = mle_fit(&pooled, config.ensemble, FitMode::AlphaBeta)?;
    let mut samples = XebSamples::default();
    for (_, runs) in per {
        samples.trajectories.extend(runs);
    }
    let mut report = xeb_fidelity(&samples, &fit.params(), config.n, config.t, config.epsilon)?;
    if !fit.converged {
        report.warnings.push(format!("(α, β) fit did not converge: {}", fit.diagnostics.join("; ")));
    }
    Ok(report)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PureState;
use crate::error::{Error, Result};

/// How bitstrings `x` are chosen when recording `ω = D|⟨x|ψ⟩|²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    FullEnumeration,
    /// `n` bitstrings drawn uniformly (not by the Born rule).
    UniformBitstrings(usize),
}

impl SamplingMode {
    pub fn label(&self) -> String {
        match self {
            SamplingMode::FullEnumeration => "full_enumeration".into(),
            SamplingMode::UniformBitstrings(n) => format!("uniform_bitstrings({n})"),
        }
    }
}

/// Provenance of an overlap sample set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub spec_digest: String,
    pub mode: String,
    pub realizations: usize,
    pub seed: u64,
}

/// Overlap samples `ω ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapSampleSet {
    pub samples: Vec<f64>,
    pub meta: SampleMeta,
}

impl OverlapSampleSet {
    pub fn new(samples: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("overlap sample {bad} is not a finite non-negative number")));
        }
        Ok(Self { samples, meta })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Concatenation, keeping the first set's digest and summing realizations.
    pub fn pooled(sets: &[OverlapSampleSet]) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::EmptySample("no sample sets to pool".into()))?;
        let samples = sets.iter().flat_map(|s| s.samples.iter().copied()).collect();
        Ok(Self {
            samples,
            meta: SampleMeta {
                realizations: sets.iter().map(|s| s.meta.realizations).sum(),
                ..first.meta.clone()
            },
        })
    }
}

/// Empirical statistics of one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapStatistics {
    pub samples: OverlapSampleSet,
    /// `I_k = Σ_x p_x^k` for `k = 1..=5`, from the full amplitude vector.
    pub ipr: Vec<f64>,
    /// `S_2 = -ln I_2`.
    pub s2: f64,
    pub half_chain_purity: f64,
}

pub fn overlap_statistics<R: Rng + ?Sized>(
    state: &PureState,
    mode: SamplingMode,
    rng: &mut R,
    meta: SampleMeta,
) -> Result<OverlapStatistics> {
    let p = state.probabilities();
    let dim = p.len() as f64;
    let samples = match mode {
        SamplingMode::FullEnumeration => p.iter().map(|x| dim * x).collect(),
        SamplingMode::UniformBitstrings(0) => {
            return Err(Error::EmptySample("requested zero bitstrings".into()));
        }
        SamplingMode::UniformBitstrings(n) => (0..n).map(|_| dim * p[rng.random_range(0..p.len())]).collect(),
    };
    let ipr: Vec<f64> = (1..=5).map(|k| p.iter().map(|x| x.powi(k)).sum()).collect();
    Ok(OverlapStatistics {
        samples: OverlapSampleSet::new(samples, SampleMeta { mode: mode.label(), ..meta })?,
        s2: -ipr[1].ln(),
        ipr,
        half_chain_purity: state.half_chain_purity(),
    })
}

/// `n` basis indices drawn from the Born distribution of `state`.
pub fn born_samples<R: Rng + ?Sized>(state: &PureState, n: usize, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(state.dim());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn meta() -> SampleMeta {
        SampleMeta { spec_digest: "test".into(), mode: String::new(), realizations: 1, seed: 0 }
    }

    #[test]
    fn localized_and_flat_states() {
        let mut rng = stream(0, Domain::Sampling, 0);
        let zero = PureState::zero(3, 2, 1 << 10).unwrap();
        let st = overlap_statistics(&zero, SamplingMode::FullEnumeration, &mut rng, meta()).unwrap();
        assert!(st.ipr.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert_eq!(st.s2, 0.0);
        assert!(st.samples.samples.iter().all(|&w| w == 0.0 || w == 8.0));
        let flat = PureState::uniform(2, 2, 1 << 10).unwrap();
        let st = overlap_statistics(&flat, SamplingMode::UniformBitstrings(50), &mut rng, meta()).unwrap();
        assert!((st.ipr[1] - 0.25).abs() < 1e-15);
        assert!(st.samples.samples.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        assert!(overlap_statistics(&flat, SamplingMode::UniformBitstrings(0), &mut rng, meta()).is_err());
    }

    #[test]
    fn born_sampling_follows_probabilities() {
        let mut rng = stream(1, Domain::Sampling, 0);
        let zero = PureState::zero(3, 2, 1 << 10).unwrap();
        assert!(born_samples(&zero, 100, &mut rng).iter().all(|&x| x == 0));
    }
}

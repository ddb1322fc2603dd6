//! Exact statevector simulation of brickwork, staircase and kicked Ising
//! circuits, overlap sampling and noisy trajectories.

mod gates;
pub mod kicked_ising;
mod noise;
mod overlap;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use gates::{isometry_defect, pauli, sample_haar_gate};
pub use kicked_ising::{expm_krylov, IsingHamiltonian, KimParams, KRYLOV_TOLERANCE};
pub use noise::{run_noisy_trajectory, NoiseModel};
pub use overlap::{
    born_samples, overlap_statistics, OverlapSampleSet, OverlapStatistics, SampleMeta, SamplingMode,
};
pub use state::{checked_dimension, PureState};

use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, Domain};

/// Default statevector capacity in amplitudes.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Brickwork,
    Staircase,
    KickedIsing,
}

/// One circuit instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub architecture: Architecture,
    pub n: usize,
    pub d: usize,
    /// Number of layers (brickwork) or Floquet periods (kicked Ising).
    #[serde(default)]
    pub depth: usize,
    /// Bond dimension of the staircase; a power of `d`.
    #[serde(default)]
    pub chi: Option<u64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: EnsembleKind,
    #[serde(default)]
    pub kim: Option<KimParams>,
    pub seed: u64,
}

fn default_ensemble() -> EnsembleKind {
    EnsembleKind::Unitary
}

impl CircuitSpec {
    pub fn brickwork(n: usize, depth: usize, ensemble: EnsembleKind, seed: u64) -> Self {
        Self {
            architecture: Architecture::Brickwork,
            n,
            d: 2,
            depth,
            chi: None,
            ensemble,
            kim: None,
            seed,
        }
    }

    pub fn staircase(n: usize, d: usize, chi: u64, ensemble: EnsembleKind, seed: u64) -> Self {
        Self {
            architecture: Architecture::Staircase,
            n,
            d,
            depth: 0,
            chi: Some(chi),
            ensemble,
            kim: None,
            seed,
        }
    }

    pub fn kicked_ising(n: usize, periods: usize, params: KimParams, seed: u64) -> Self {
        Self {
            architecture: Architecture::KickedIsing,
            n,
            d: 2,
            depth: periods,
            chi: None,
            ensemble: EnsembleKind::Orthogonal,
            kim: Some(params),
            seed,
        }
    }

    /// Same circuit family with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("circuit spec serializes");
        hex(&Sha256::digest(&json))
    }

    /// `r = log_d χ` for staircases.
    pub fn staircase_span(&self) -> Result<usize> {
        let chi = self.chi.ok_or_else(|| Error::arg("staircase needs a bond dimension chi"))?;
        let spec = crate::closed_forms::RmpsSpec {
            d: self.d as u64,
            chi,
            n: self.n,
            ensemble: self.ensemble,
        };
        spec.validate()
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        if self.n == 0 || self.d < 2 {
            return Err(Error::arg("circuits need N ≥ 1 and d ≥ 2"));
        }
        checked_dimension(self.n, self.d, cap)?;
        match self.architecture {
            Architecture::Brickwork => {}
            Architecture::Staircase => {
                self.staircase_span()?;
            }
            Architecture::KickedIsing => {
                if self.d != 2 {
                    return Err(Error::arg("the kicked Ising chain is built from qubits (d = 2)"));
                }
            }
        }
        Ok(())
    }

    /// Gate supports `(start, width)` of the unitary architectures, in
    /// application order.
    pub fn gate_sites(&self) -> Result<Vec<(usize, usize)>> {
        match self.architecture {
            Architecture::Brickwork => Ok((1..=self.depth)
                .flat_map(|layer| brickwork_layer(self.n, layer))
                .map(|s| (s, 2))
                .collect()),
            Architecture::Staircase => {
                let r = self.staircase_span()?;
                Ok((0..self.n - r).map(|s| (s, r + 1)).collect())
            }
            Architecture::KickedIsing => Err(Error::arg("the kicked Ising circuit has no random gates")),
        }
    }
}

/// First sites of the gates in brickwork layer `layer` (1-based): odd layers
/// pair `(1,2),(3,4),…`, even layers `(2,3),(4,5),…`, open boundaries.
pub fn brickwork_layer(n: usize, layer: usize) -> Vec<usize> {
    let first = if layer % 2 == 1 { 0 } else { 1 };
    (first..n.saturating_sub(1)).step_by(2).collect()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the circuit on `initial` (or its default input) with the default
/// amplitude cap.
pub fn run_circuit(spec: &CircuitSpec, initial: Option<PureState>) -> Result<PureState> {
    run_circuit_capped(spec, initial, DEFAULT_AMPLITUDE_CAP)
}

pub fn run_circuit_capped(spec: &CircuitSpec, initial: Option<PureState>, cap: usize) -> Result<PureState> {
    spec.validate(cap)?;
    let mut state = match initial {
        Some(s) => {
            if s.n != spec.n || s.d != spec.d {
                return Err(Error::arg("initial state does not match the circuit size"));
            }
            s
        }
        None => default_initial_state(spec, cap)?,
    };
    match spec.architecture {
        Architecture::KickedIsing => {
            let ham = IsingHamiltonian::new(spec.n, spec.kim.unwrap_or_default());
            for _ in 0..spec.depth {
                state.amplitudes = expm_krylov(&ham, &state.amplitudes, 1.0, KRYLOV_TOLERANCE)?;
            }
        }
        _ => {
            let mut gate_rng = stream(spec.seed, Domain::Gates, 0);
            for (start, width) in spec.gate_sites()? {
                let u = sample_haar_gate(spec.ensemble, spec.d.pow(width as u32), &mut gate_rng);
                state.apply_block(start, width, &u);
            }
        }
    }
    Ok(state)
}

/// `|0…0⟩` for random circuits; a Haar-random qubit product state for the
/// kicked Ising chain.
pub fn default_initial_state(spec: &CircuitSpec, cap: usize) -> Result<PureState> {
    match spec.architecture {
        Architecture::KickedIsing => {
            let mut rng = stream(spec.seed, Domain::InitialState, 0);
            let sites: Vec<Vec<Complex64>> = (0..spec.n).map(|_| haar_qubit(&mut rng)).collect();
            PureState::product(&sites, cap)
        }
        _ => PureState::zero(spec.n, spec.d, cap),
    }
}

fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..2)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

/// Gate matrices of the unitary architectures, drawn exactly as
/// [`run_circuit`] draws them.
pub fn circuit_gates(spec: &CircuitSpec) -> Result<Vec<((usize, usize), DMatrix<Complex64>)>> {
    let mut gate_rng = stream(spec.seed, Domain::Gates, 0);
    Ok(spec
        .gate_sites()?
        .into_iter()
        .map(|(s, w)| ((s, w), sample_haar_gate(spec.ensemble, spec.d.pow(w as u32), &mut gate_rng)))
        .collect())
}

/// Seed of disorder realization `index` of a master seed.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, Domain::Realization, index)
}

/// Sample mean and standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_values(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            count: n,
        }
    }

    /// `|mean - target| ≤ z · SE`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error
    }
}

/// Disorder averages over independent realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAverages {
    /// `E[I_k]` for `k = 1..=5`.
    pub ipr: Vec<MeanEstimate>,
    pub half_chain_purity: MeanEstimate,
    pub realizations: usize,
}

/// Runs `realizations` circuits with seeds derived from `spec.seed` and
/// averages their exact IPRs and half-chain purity. The reduction is ordered
/// by realization index, so the result does not depend on the thread count.
pub fn ensemble_averages(spec: &CircuitSpec, realizations: usize) -> Result<EnsembleAverages> {
    if realizations == 0 {
        return Err(Error::EmptySample("need at least one realization".into()));
    }
    let per: Vec<(Vec<f64>, f64)> = (0..realizations as u64)
        .into_par_iter()
        .map(|i| {
            let s = run_circuit(&spec.with_seed(realization_seed(spec.seed, i)), None)?;
            let p = s.probabilities();
            let iprs = (1..=5).map(|k| p.iter().map(|x| x.powi(k)).sum()).collect();
            Ok((iprs, s.half_chain_purity()))
        })
        .collect::<Result<_>>()?;
    let ipr = (0..5)
        .map(|k| MeanEstimate::from_values(&per.iter().map(|(v, _)| v[k]).collect::<Vec<_>>()))
        .collect();
    let purity = MeanEstimate::from_values(&per.iter().map(|(_, p)| *p).collect::<Vec<_>>());
    Ok(EnsembleAverages {
        ipr,
        half_chain_purity: purity,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{haar_ipr, rmps_ipr_exact, RmpsSpec};

    #[test]
    fn layers_alternate() {
        assert_eq!(brickwork_layer(6, 1), vec![0, 2, 4]);
        assert_eq!(brickwork_layer(6, 2), vec![1, 3]);
        assert_eq!(brickwork_layer(2, 2), Vec::<usize>::new());
        let spec = CircuitSpec::staircase(5, 2, 4, EnsembleKind::Unitary, 0);
        assert_eq!(spec.gate_sites().unwrap(), vec![(0, 3), (1, 3), (2, 3)]);
    }

    #[test]
    fn norm_and_determinism() {
        for e in EnsembleKind::ALL {
            let spec = CircuitSpec::brickwork(6, 5, e, 11);
            let a = run_circuit(&spec, None).unwrap();
            let b = run_circuit(&spec, None).unwrap();
            assert_eq!(a, b);
            assert!((a.norm_sqr() - 1.0).abs() < 1e-10);
        }
        let kim = CircuitSpec::kicked_ising(6, 3, KimParams::default(), 5);
        let s = run_circuit(&kim, None).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn depth_zero_is_identity() {
        let spec = CircuitSpec::brickwork(4, 0, EnsembleKind::Unitary, 3);
        let s = run_circuit(&spec, None).unwrap();
        assert_eq!(s, PureState::zero(4, 2, 1 << 10).unwrap());
        let u = PureState::uniform(4, 2, 1 << 10).unwrap();
        assert_eq!(run_circuit(&spec, Some(u.clone())).unwrap(), u);
    }

    #[test]
    fn single_gate_is_haar() {
        let spec = CircuitSpec::brickwork(2, 1, EnsembleKind::Unitary, 21);
        let avg = ensemble_averages(&spec, 10_000).unwrap();
        assert!(avg.ipr[1].within(0.4, 3.0), "{:?}", avg.ipr[1]);
        assert!(avg.half_chain_purity.within(0.8, 3.0), "{:?}", avg.half_chain_purity);
        assert!((avg.ipr[0].mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_staircase_matches_exact_ipr() {
        let spec = CircuitSpec::staircase(3, 2, 2, EnsembleKind::Unitary, 8);
        let avg = ensemble_averages(&spec, 10_000).unwrap();
        let exact = rmps_ipr_exact(&RmpsSpec { d: 2, chi: 2, n: 3, ensemble: EnsembleKind::Unitary }, 2).unwrap();
        assert!(avg.ipr[1].within(exact, 3.0));
        assert!(exact >= haar_ipr(EnsembleKind::Unitary, 8.0, 2).unwrap());
    }

    #[test]
    fn capacity_is_enforced() {
        let spec = CircuitSpec::brickwork(40, 1, EnsembleKind::Unitary, 0);
        assert!(matches!(run_circuit(&spec, None), Err(Error::Capacity { .. })));
    }
}

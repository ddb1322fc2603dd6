use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{pauli, sample_haar_gate, Architecture, CircuitSpec, PureState, DEFAULT_AMPLITUDE_CAP};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Per-gate depolarizing probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub epsilon: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::arg(format!("noise probability {epsilon} outside [0, 1]")));
        }
        Ok(Self { epsilon })
    }
}

/// One trajectory of the depolarized brickwork circuit: gates come from the
/// same stream as [`super::run_circuit`], and with probability `ε` each
/// gate is followed by one of the 15 non-identity two-qubit Paulis, drawn
/// from `rng`.
pub fn run_noisy_trajectory<R: Rng + ?Sized>(spec: &CircuitSpec, noise: NoiseModel, rng: &mut R) -> Result<PureState> {
    if spec.architecture != Architecture::Brickwork {
        return Err(Error::arg("noisy trajectories are defined for brickwork circuits"));
    }
    if spec.d != 2 {
        return Err(Error::arg("depolarizing noise acts on qubits (d = 2)"));
    }
    spec.validate(DEFAULT_AMPLITUDE_CAP)?;
    let mut state = PureState::zero(spec.n, spec.d, DEFAULT_AMPLITUDE_CAP)?;
    let mut gate_rng = stream(spec.seed, Domain::Gates, 0);
    for (start, width) in spec.gate_sites()? {
        let u = sample_haar_gate(spec.ensemble, 4, &mut gate_rng);
        state.apply_block(start, width, &u);
        if noise.epsilon > 0.0 && rng.random::<f64>() < noise.epsilon {
            let p = rng.random_range(1..16usize);
            let (a, b) = (p / 4, p % 4);
            if a != 0 {
                state.apply_block(start, 1, &pauli(a));
            }
            if b != 0 {
                state.apply_block(start + 1, 1, &pauli(b));
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::run_circuit;
    use crate::ensemble::EnsembleKind;

    #[test]
    fn noiseless_trajectory_is_the_ideal_state() {
        let spec = CircuitSpec::brickwork(6, 6, EnsembleKind::Unitary, 4);
        let mut rng = stream(4, Domain::Noise, 0);
        let noisy = run_noisy_trajectory(&spec, NoiseModel::new(0.0).unwrap(), &mut rng).unwrap();
        assert_eq!(noisy, run_circuit(&spec, None).unwrap());
    }

    #[test]
    fn noisy_trajectories_stay_normalized() {
        let spec = CircuitSpec::brickwork(6, 8, EnsembleKind::Unitary, 4);
        let mut rng = stream(4, Domain::Noise, 0);
        for _ in 0..10 {
            let s = run_noisy_trajectory(&spec, NoiseModel::new(1.0).unwrap(), &mut rng).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
        assert!(NoiseModel::new(1.5).is_err());
    }
}

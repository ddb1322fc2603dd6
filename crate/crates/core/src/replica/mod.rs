//! Disorder-averaged two-replica quantities of brickwork circuits from the
//! replica tensor network, contracted layer by layer in the time direction.
//!
//! Averaging two copies of a Haar gate on sites `(i, i+1)` maps a pair of
//! incoming commutant labels `(a, b)` to a single outgoing label `τ` carried by
//! both sites, with weight
//! `W[τ; a, b] = Σ_σ Wg_{τσ}(d²) G_{σa}(d) G_{σb}(d)`.
//! The state of the network after each layer is a vector of coefficients over
//! such labels, closed at the end by per-site boundary vectors.

mod exact;
mod tt;

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::haar_ipr;
use crate::commutant::{gram_matrix, weingarten_matrix, CommutantBasis};
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};

pub use exact::ExactState;
pub use tt::TensorTrainState;

/// Largest exact coefficient vector.
pub const EXACT_CAPACITY: u128 = 10_000_000;
pub const DEFAULT_TT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_TT_MAX_BOND: usize = 256;
/// Accumulated relative truncation weight above which a tensor-train
/// contraction is reported as failed.
pub const TT_MAX_TRUNCATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContractionMethod {
    Exact,
    TensorTrain { tol: f64, max_bond: usize },
}

impl ContractionMethod {
    pub fn tensor_train() -> Self {
        ContractionMethod::TensorTrain {
            tol: DEFAULT_TT_TOLERANCE,
            max_bond: DEFAULT_TT_MAX_BOND,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ContractionMethod::Exact => "exact",
            ContractionMethod::TensorTrain { .. } => "tensor_train",
        }
    }
}

/// Averaged two-replica gate in the commutant basis at `k = 2`.
#[derive(Clone, Debug)]
pub struct ReplicaGateTensor {
    pub ensemble: EnsembleKind,
    pub d: usize,
    pub basis: Arc<CommutantBasis>,
    /// Single-site Gram matrix at `q = d`.
    pub local_gram: DMatrix<f64>,
    /// `W[τ; a, b]` flattened as `(τ·c + a)·c + b`.
    weights: Vec<f64>,
    /// `∏_m (d² + f(m))`, the Weingarten row-sum normalization of one gate.
    pub gate_norm: f64,
    pub identity: usize,
    pub swap: usize,
}

impl ReplicaGateTensor {
    pub fn new(ensemble: EnsembleKind, d: usize) -> Result<Self> {
        let basis = Arc::new(CommutantBasis::enumerate(ensemble, 2)?);
        let c = basis.len();
        let g = gram_matrix(&basis, d as u64)?.entries;
        let wg = weingarten_matrix(&basis, (d * d) as u64)?.entries;
        let mut weights = vec![0.0; c * c * c];
        for tau in 0..c {
            for a in 0..c {
                for b in 0..c {
                    weights[(tau * c + a) * c + b] = (0..c).map(|s| wg[(tau, s)] * g[(s, a)] * g[(s, b)]).sum();
                }
            }
        }
        let identity = basis.identity_index();
        let swap = basis.swap_index().expect("k = 2 has a swap");
        Ok(Self {
            ensemble,
            d,
            gate_norm: ensemble.rising_product((d * d) as f64, 2),
            local_gram: g,
            weights,
            basis,
            identity,
            swap,
        })
    }

    /// Local replica dimension `|Comm₂|`.
    pub fn c(&self) -> usize {
        self.basis.len()
    }

    pub fn bulk(&self, tau: usize, a: usize, b: usize) -> f64 {
        let c = self.c();
        self.weights[(tau * c + a) * c + b]
    }

    /// Output coefficients of a first-layer gate acting on `|0 0⟩`: the
    /// uniform vector divided by [`Self::gate_norm`].
    pub fn first_layer(&self) -> Vec<f64> {
        vec![1.0 / self.gate_norm; self.c()]
    }

    /// Closure of one site against `Σ_x |x x⟩⟩`: `d` for every label.
    pub fn collision_closure(&self) -> Vec<f64> {
        vec![self.d as f64; self.c()]
    }

    /// Closure of one site against the swap (`in_subsystem`) or identity.
    pub fn purity_closure(&self, in_subsystem: bool) -> Vec<f64> {
        let row = if in_subsystem { self.swap } else { self.identity };
        self.local_gram.row(row).iter().copied().collect()
    }
}

/// Replica-network state advanced one brickwork layer at a time.
pub trait ReplicaState {
    /// Applies brickwork layer `layer ≥ 2` (the first layer is the initial
    /// condition).
    fn apply_layer(&mut self, layer: usize) -> Result<()>;
    /// Contraction with per-site closure vectors.
    fn evaluate(&self, closures: &[Vec<f64>]) -> f64;
    fn trunc_error(&self) -> f64;
}

/// Closures for `E[I₂]` and for `E[tr ρ_A²]` with `A` the first half.
fn closures(gate: &ReplicaGateTensor, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ipr = vec![gate.collision_closure(); n];
    let purity = (0..n).map(|s| gate.purity_closure(s < n / 2)).collect();
    (ipr, purity)
}

/// One point of an annealed contraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedPoint {
    pub t: usize,
    pub i2: f64,
    pub purity: f64,
    pub trunc_error: f64,
}

fn new_state(
    n: usize,
    gate: &Arc<ReplicaGateTensor>,
    method: ContractionMethod,
) -> Result<Box<dyn ReplicaState + Send>> {
    Ok(match method {
        ContractionMethod::Exact => Box::new(ExactState::new(n, Arc::clone(gate))?),
        ContractionMethod::TensorTrain { tol, max_bond } => {
            Box::new(TensorTrainState::new(n, Arc::clone(gate), tol, max_bond)?)
        }
    })
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::arg(format!("the replica network needs an even N ≥ 2 (N = {n})")));
    }
    Ok(())
}

/// `E[I₂]` and half-chain purity after every depth `0..=t_max`.
pub fn annealed_series(
    n: usize,
    t_max: usize,
    ensemble: EnsembleKind,
    method: ContractionMethod,
) -> Result<Vec<AnnealedPoint>> {
    check_size(n)?;
    let mut out = vec![AnnealedPoint {
        t: 0,
        i2: 1.0,
        purity: 1.0,
        trunc_error: 0.0,
    }];
    if t_max == 0 {
        return Ok(out);
    }
    let gate = Arc::new(ReplicaGateTensor::new(ensemble, 2)?);
    let (ipr_cl, pur_cl) = closures(&gate, n);
    let mut state = new_state(n, &gate, method)?;
    for t in 1..=t_max {
        if t >= 2 {
            state.apply_layer(t)?;
        }
        out.push(AnnealedPoint {
            t,
            i2: state.evaluate(&ipr_cl),
            purity: state.evaluate(&pur_cl),
            trunc_error: state.trunc_error(),
        });
    }
    Ok(out)
}

/// Annealed value with its truncation record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annealed {
    pub value: f64,
    pub trunc_error: f64,
}

/// `E[I₂]` of the depth-`t` brickwork circuit on `N` qubits.
pub fn contract_annealed_ipr2(n: usize, t: usize, ensemble: EnsembleKind, method: ContractionMethod) -> Result<Annealed> {
    let p = *annealed_series(n, t, ensemble, method)?.last().unwrap();
    Ok(Annealed {
        value: p.i2,
        trunc_error: p.trunc_error,
    })
}

/// `E[tr ρ²]` of the first `N/2` qubits.
pub fn annealed_half_chain_purity(
    n: usize,
    t: usize,
    ensemble: EnsembleKind,
    method: ContractionMethod,
) -> Result<Annealed> {
    let p = *annealed_series(n, t, ensemble, method)?.last().unwrap();
    Ok(Annealed {
        value: p.purity,
        trunc_error: p.trunc_error,
    })
}

/// Contraction against arbitrary per-site closures after `t ≥ 1` layers.
pub fn contract_with_closures(
    n: usize,
    t: usize,
    ensemble: EnsembleKind,
    method: ContractionMethod,
    closures: &[Vec<f64>],
) -> Result<f64> {
    check_size(n)?;
    if t == 0 || closures.len() != n {
        return Err(Error::arg("need t ≥ 1 and one closure vector per site"));
    }
    let gate = Arc::new(ReplicaGateTensor::new(ensemble, 2)?);
    let mut state = new_state(n, &gate, method)?;
    for layer in 2..=t {
        state.apply_layer(layer)?;
    }
    Ok(state.evaluate(closures))
}

/// Rows of an annealed series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedRow {
    pub ensemble: EnsembleKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: usize,
    #[serde(rename = "annealed_I2")]
    pub annealed_i2: f64,
    pub annealed_purity: f64,
    #[serde(rename = "delta_S2")]
    pub delta_s2: f64,
    pub method: String,
    pub trunc_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedSeries {
    pub ensemble: EnsembleKind,
    pub rows: Vec<AnnealedRow>,
}

impl AnnealedSeries {
    /// `(t, ΔS₂)` pairs of one system size.
    pub fn delta_s2_of(&self, n: usize) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.t as f64, r.delta_s2))
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        v.dedup();
        v
    }
}

/// `ΔS₂(t, N) = ln(E[I₂] / I₂^Haar(D))` for `t = 0..=t_max` and each `N`,
/// with the annealed entropy `S₂ = -ln E[I₂]` and the finite-`D` Haar value.
/// Sizes are evaluated in parallel; rows are ordered by `(N, t)`.
pub fn delta_s2_series(
    sizes: &[usize],
    t_max: usize,
    ensemble: EnsembleKind,
    method: ContractionMethod,
) -> Result<AnnealedSeries> {
    let per: Vec<Vec<AnnealedRow>> = sizes
        .par_iter()
        .map(|&n| {
            let haar = haar_ipr(ensemble, 2f64.powi(n as i32), 2)?;
            Ok(annealed_series(n, t_max, ensemble, method)?
                .into_iter()
                .map(|p| AnnealedRow {
                    ensemble,
                    n,
                    t: p.t,
                    annealed_i2: p.i2,
                    annealed_purity: p.purity,
                    delta_s2: (p.i2 / haar).ln(),
                    method: method.label().to_string(),
                    trunc_error: p.trunc_error,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(AnnealedSeries {
        ensemble,
        rows: per.into_iter().flatten().collect(),
    })
}

use std::sync::Arc;

use rayon::prelude::*;

use super::{ReplicaGateTensor, ReplicaState, EXACT_CAPACITY};
use crate::error::{Error, Result};

const PARALLEL_THRESHOLD: usize = 1 << 15;

/// Dense coefficient vector over the surviving labels.
///
/// After an odd layer every gate output pair `(2g, 2g+1)` carries one label
/// (`N/2` labels). After an even layer the labels are site 1, the inner
/// pairs `(2j, 2j+1)` (1-based `(2j, 2j+1)` with `j ≥ 1`) and site `N`
/// (`N/2 + 1` labels). Site `s` (0-based) belongs to label `s/2` or
/// `(s+1)/2` respectively.
#[derive(Clone, Debug)]
pub struct ExactState {
    n: usize,
    gate: Arc<ReplicaGateTensor>,
    data: Vec<f64>,
    labels: usize,
    shifted: bool,
    log_scale: f64,
}

impl ExactState {
    pub fn new(n: usize, gate: Arc<ReplicaGateTensor>) -> Result<Self> {
        let c = gate.c();
        let m = n / 2;
        let needed = (c as u128).checked_pow(m as u32 + 1).unwrap_or(u128::MAX);
        if needed > EXACT_CAPACITY {
            return Err(Error::Capacity {
                what: "exact replica coefficients (use the tensor_train method)",
                requested: needed,
                limit: EXACT_CAPACITY,
            });
        }
        Ok(Self {
            n,
            data: vec![1.0; c.pow(m as u32)],
            labels: m,
            shifted: false,
            log_scale: -(m as f64) * gate.gate_norm.ln(),
            gate,
        })
    }

    fn site_label(&self, s: usize) -> usize {
        if self.shifted {
            (s + 1) / 2
        } else {
            s / 2
        }
    }

    /// New label at position `p + 1`, set by the gate acting on labels `p`
    /// and `p + 1`.
    fn insert_between(&mut self, p: usize) {
        let c = self.gate.c();
        let inner = c.pow((self.labels - p - 2) as u32);
        let gate = &self.gate;
        let old = &self.data;
        let len = old.len() * c;
        let f = |idx: usize| {
            let lo = idx % inner;
            let rest = idx / inner;
            let b = rest % c;
            let tau = (rest / c) % c;
            let a = (rest / (c * c)) % c;
            let outer = rest / (c * c * c);
            old[((outer * c + a) * c + b) * inner + lo] * gate.bulk(tau, a, b)
        };
        self.data = collect(len, f);
        self.labels += 1;
    }

    /// Labels `(p, p+1) → (τ, p+1)`, summing over the old label `p`.
    fn fuse_keep_right(&mut self, p: usize) {
        let c = self.gate.c();
        let inner = c.pow((self.labels - p - 2) as u32);
        let gate = &self.gate;
        let old = &self.data;
        let f = |idx: usize| {
            let lo = idx % inner;
            let rest = idx / inner;
            let b = rest % c;
            let tau = (rest / c) % c;
            let outer = rest / (c * c);
            (0..c)
                .map(|a| old[((outer * c + a) * c + b) * inner + lo] * gate.bulk(tau, a, b))
                .sum()
        };
        self.data = collect(old.len(), f);
    }

    /// Labels `(p, p+1) → τ`, summing over both.
    fn fuse_sum_both(&mut self, p: usize) {
        let c = self.gate.c();
        let inner = c.pow((self.labels - p - 2) as u32);
        let gate = &self.gate;
        let old = &self.data;
        let f = |idx: usize| {
            let lo = idx % inner;
            let rest = idx / inner;
            let tau = rest % c;
            let outer = rest / c;
            let mut s = 0.0;
            for a in 0..c {
                for b in 0..c {
                    s += old[((outer * c + a) * c + b) * inner + lo] * gate.bulk(tau, a, b);
                }
            }
            s
        };
        self.data = collect(old.len() / c, f);
        self.labels -= 1;
    }

    fn renormalize(&mut self) {
        let s = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if s > 0.0 && s.is_finite() {
            self.data.iter_mut().for_each(|x| *x /= s);
            self.log_scale += s.ln();
        }
    }
}

fn collect(len: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if len >= PARALLEL_THRESHOLD {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

impl ReplicaState for ExactState {
    fn apply_layer(&mut self, layer: usize) -> Result<()> {
        let m = self.n / 2;
        if m == 1 {
            // even layers are empty on two sites; odd ones repeat the gate on
            // a pair that already shares a label, where W[τ; a, a] = δ
            return Ok(());
        }
        if layer % 2 == 0 {
            debug_assert!(!self.shifted);
            self.insert_between(0);
            for j in 2..m {
                self.fuse_keep_right(j);
            }
            self.shifted = true;
        } else {
            debug_assert!(self.shifted);
            for g in 0..m - 1 {
                self.fuse_keep_right(g);
            }
            self.fuse_sum_both(m - 1);
            self.shifted = false;
        }
        self.renormalize();
        Ok(())
    }

    fn evaluate(&self, closures: &[Vec<f64>]) -> f64 {
        let c = self.gate.c();
        let mut weights = vec![vec![1.0; c]; self.labels];
        for (s, cl) in closures.iter().enumerate() {
            let j = self.site_label(s);
            for (w, x) in weights[j].iter_mut().zip(cl) {
                *w *= x;
            }
        }
        // contract the leading label repeatedly
        let mut v = self.data.clone();
        for w in &weights {
            let rest = v.len() / c;
            v = (0..rest).map(|r| (0..c).map(|l| w[l] * v[l * rest + r]).sum()).collect();
        }
        v[0] * self.log_scale.exp()
    }

    fn trunc_error(&self) -> f64 {
        0.0
    }
}

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ReplicaGateTensor, ReplicaState, TT_MAX_TRUNCATION};
use crate::circuit::brickwork_layer;
use crate::linalg::thin_svd;
use crate::error::{Error, Result};

/// Site tensor `A[l, σ, r]`, row-major in `(l, σ, r)`.
#[derive(Clone, Debug)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<f64>,
}

impl Site {
    fn as_left_matrix(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left * c, self.right, &self.data)
    }

    fn as_right_matrix(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.left, c * self.right, &self.data)
    }

    fn from_matrix(m: &DMatrix<f64>, left: usize, right: usize) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { left, right, data }
    }
}

/// Tensor train over the `N` sites, local dimension `|Comm₂|`, with
/// singular-value truncation after every gate.
#[derive(Clone, Debug)]
pub struct TensorTrainState {
    gate: Arc<ReplicaGateTensor>,
    sites: Vec<Site>,
    tol: f64,
    max_bond: usize,
    log_scale: f64,
    truncated: f64,
    center: usize,
}

impl TensorTrainState {
    pub fn new(n: usize, gate: Arc<ReplicaGateTensor>, tol: f64, max_bond: usize) -> Result<Self> {
        if !(tol >= 0.0) || max_bond == 0 {
            return Err(Error::arg("tensor-train tolerance must be ≥ 0 and max bond ≥ 1"));
        }
        let c = gate.c();
        // first layer: each pair holds Σ_σ |σ σ⟩
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n / 2 {
            let mut a = vec![0.0; c * c];
            let mut b = vec![0.0; c * c];
            for s in 0..c {
                a[s * c + s] = 1.0;
                b[s * c + s] = 1.0;
            }
            sites.push(Site { left: 1, right: c, data: a });
            sites.push(Site { left: c, right: 1, data: b });
        }
        let mut st = Self {
            log_scale: -((n / 2) as f64) * gate.gate_norm.ln(),
            gate,
            sites,
            tol,
            max_bond,
            truncated: 0.0,
            center: n - 1,
        };
        st.right_canonicalize();
        Ok(st)
    }

    /// Sweeps right to left so that every site but the first is
    /// right-orthonormal.
    fn right_canonicalize(&mut self) {
        let c = self.gate.c();
        for i in (1..self.sites.len()).rev() {
            let m = self.sites[i].as_right_matrix(c);
            let qr = m.transpose().qr();
            let q = qr.q().transpose();
            let r = qr.r().transpose();
            let k = q.nrows();
            self.sites[i] = Site::from_matrix(&q, k, self.sites[i].right);
            let prev = &self.sites[i - 1];
            let pm = prev.as_left_matrix(c) * r;
            self.sites[i - 1] = Site::from_matrix(&pm, prev.left, k);
        }
        self.center = 0;
        self.normalize_center();
    }

    fn normalize_center(&mut self) {
        let s = &mut self.sites[self.center];
        let nrm = s.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.0 {
            s.data.iter_mut().for_each(|x| *x /= nrm);
            self.log_scale += nrm.ln();
        }
    }

    fn move_center_right(&mut self) {
        let c = self.gate.c();
        let i = self.center;
        let qr = self.sites[i].as_left_matrix(c).qr();
        let q = qr.q();
        let r = qr.r();
        let k = q.ncols();
        let left = self.sites[i].left;
        self.sites[i] = Site::from_matrix(&q, left, k);
        let next = &self.sites[i + 1];
        let nm = r * next.as_right_matrix(c);
        self.sites[i + 1] = Site::from_matrix(&nm, k, next.right);
        self.center = i + 1;
    }

    /// Applies the averaged gate to sites `(i, i+1)` with the center at `i`,
    /// leaving the center at `i + 1`.
    fn apply_gate(&mut self, i: usize) -> Result<()> {
        let c = self.gate.c();
        let a = self.sites[i].clone();
        let b = self.sites[i + 1].clone();
        let (l, r) = (a.left, b.right);
        // θ[l, p1, p2, r]
        let theta = a.as_left_matrix(c) * b.as_right_matrix(c);
        let mut out = DMatrix::<f64>::zeros(l * c, c * r);
        for li in 0..l {
            for tau in 0..c {
                for p1 in 0..c {
                    for p2 in 0..c {
                        let w = self.gate.bulk(tau, p1, p2);
                        if w == 0.0 {
                            continue;
                        }
                        for ri in 0..r {
                            out[(li * c + tau, tau * r + ri)] += w * theta[(li * c + p1, p2 * r + ri)];
                        }
                    }
                }
            }
        }
        let (u, sv, vt) = thin_svd(&out)?;
        let smax = sv[0];
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let k = sv
            .iter()
            .take_while(|&&s| smax > 0.0 && s > self.tol * smax)
            .count()
            .clamp(1, self.max_bond);
        let kept: f64 = sv[..k].iter().map(|s| s * s).sum();
        if total > 0.0 {
            self.truncated += (total - kept).max(0.0) / total;
        }
        let un = u.columns(0, k).into_owned();
        let svt = DMatrix::from_fn(k, c * r, |j, col| sv[j] * vt[(j, col)]);
        self.sites[i] = Site::from_matrix(&un, l, k);
        self.sites[i + 1] = Site::from_matrix(&svt, k, r);
        self.center = i + 1;
        self.normalize_center();
        if self.truncated > TT_MAX_TRUNCATION {
            return Err(Error::numerical(
                format!(
                    "tensor-train truncation weight {:e} exceeds {TT_MAX_TRUNCATION:e}; raise max_bond",
                    self.truncated
                ),
                Some(self.truncated),
            ));
        }
        Ok(())
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1)
    }
}

impl ReplicaState for TensorTrainState {
    fn apply_layer(&mut self, layer: usize) -> Result<()> {
        let starts = brickwork_layer(self.sites.len(), layer);
        if starts.is_empty() {
            return Ok(());
        }
        if self.center > starts[0] {
            self.right_canonicalize();
        }
        for s in starts {
            while self.center < s {
                self.move_center_right();
            }
            self.apply_gate(s)?;
        }
        Ok(())
    }

    fn evaluate(&self, closures: &[Vec<f64>]) -> f64 {
        let c = self.gate.c();
        let mut env = vec![1.0];
        for (site, cl) in self.sites.iter().zip(closures) {
            let mut next = vec![0.0; site.right];
            for (l, e) in env.iter().enumerate() {
                for (s, w) in cl.iter().enumerate().take(c) {
                    let base = (l * c + s) * site.right;
                    for (r, nx) in next.iter_mut().enumerate() {
                        *nx += e * w * site.data[base + r];
                    }
                }
            }
            env = next;
        }
        env[0] * self.log_scale.exp()
    }

    fn trunc_error(&self) -> f64 {
        self.truncated
    }
}

//! Dense SVD through faer; nalgebra's SVD loses accuracy on matrices with
//! paired singular values, which the replica tensor trains produce.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Thin SVD `m = U diag(s) Vᵀ`, singular values in non-increasing order.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::numerical(format!("SVD did not converge: {e:?}"), None))?;
    let k = rows.min(cols);
    let u = svd.U();
    let v = svd.V();
    let s = svd.S().column_vector();
    let un = DMatrix::from_fn(rows, k, |i, j| u[(i, j)]);
    let vt = DMatrix::from_fn(k, cols, |j, i| v[(i, j)]);
    Ok((un, (0..k).map(|j| s[j]).collect(), vt))
}

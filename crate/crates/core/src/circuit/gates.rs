use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::EnsembleKind;

/// Haar-random unitary or orthogonal matrix from the QR decomposition of a
/// Ginibre matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn sample_haar_gate<R: Rng + ?Sized>(ensemble: EnsembleKind, dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    assert!(dim >= 1, "gate dimension must be positive");
    match ensemble {
        EnsembleKind::Unitary => {
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let z = DMatrix::from_fn(dim, dim, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            });
            let qr = z.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..dim {
                let rjj = r[(j, j)];
                let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
                q.column_mut(j).scale_mut_complex(phase);
            }
            q
        }
        EnsembleKind::Orthogonal => {
            let z = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
            let qr = z.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..dim {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            q.map(|x| Complex64::new(x, 0.0))
        }
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: Complex64);
}

impl<S: nalgebra::storage::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, s: Complex64) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

/// Pauli matrices `I, X, Y, Z`.
pub fn pauli(index: usize) -> DMatrix<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match index {
        0 => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        1 => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        2 => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        3 => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => panic!("Pauli index {index} out of range"),
    }
}

/// Deviation `max |U†U - 1|`.
pub fn isometry_defect(u: &DMatrix<Complex64>) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (p[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn gates_are_isometries() {
        let mut rng = stream(1, Domain::Gates, 0);
        for e in EnsembleKind::ALL {
            for dim in [2, 4, 8, 16] {
                let u = sample_haar_gate(e, dim, &mut rng);
                assert!(isometry_defect(&u) < 1e-12);
                if e == EnsembleKind::Orthogonal {
                    assert!(u.iter().all(|z| z.im == 0.0));
                }
            }
        }
    }

    #[test]
    fn first_moment_of_haar_entries() {
        let mut rng = stream(2, Domain::Gates, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_haar_gate(EnsembleKind::Unitary, 4, &mut rng)[(0, 0)].norm_sqr())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * se, "{mean} ± {se}");
    }
}

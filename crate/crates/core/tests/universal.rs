use anticoncentration::closed_forms::{porter_thomas_pdf, Dimension};
use anticoncentration::estimation::{ks_statistic, ks_two_sample};
use anticoncentration::rng::{stream, Domain};
use anticoncentration::universal::{sample_overlaps, UniversalDistribution, UniversalParams};
use anticoncentration::EnsembleKind;

const ALPHAS: [f64; 3] = [0.0, 0.3, 0.8];
const BETAS: [f64; 3] = [0.0, 0.01, 0.05];

fn dist(e: EnsembleKind, a: f64, b: f64) -> UniversalDistribution {
    UniversalDistribution::new(UniversalParams::new(e, a, b).unwrap()).unwrap()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn sample_moments() {
    let p = UniversalParams::new(EnsembleKind::Unitary, 0.5, 0.0).unwrap();
    let xs = sample_overlaps(&p, 1_000_000, &mut stream(21, Domain::Sampling, 0)).unwrap();
    let (m, se) = mean_and_se(&xs);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} ± {se}");
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (m2, se2) = mean_and_se(&sq);
    let target = 2.0 * 0.5f64.exp();
    assert!((m2 - target).abs() < 3.0 * se2, "second moment {m2} ± {se2}, want {target}");
}

#[test]
fn porter_thomas_samples_pass_ks() {
    let d = dist(EnsembleKind::Unitary, 0.0, 0.0);
    let mut xs = sample_overlaps(&d.params, 100_000, &mut stream(22, Domain::Sampling, 0)).unwrap();
    let ks = ks_statistic(&xs, &d).unwrap();
    assert!(ks < 1.63 / (xs.len() as f64).sqrt(), "KS = {ks}");
    // the same statistic against the exponential law directly
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let direct = xs
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let f = 1.0 - (-w).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    assert!((direct - ks).abs() < 1e-9, "{direct} vs {ks}");
}

#[test]
fn both_samplers_agree_at_zero_beta() {
    for e in EnsembleKind::ALL {
        for a in [0.3, 0.8] {
            let d = dist(e, a, 0.0);
            let n = 20_000;
            let product = sample_overlaps(&d.params, n, &mut stream(23, Domain::Sampling, 0)).unwrap();
            let inverse = d.sample_inverse_cdf(n, &mut stream(23, Domain::Sampling, 1));
            let ks = ks_two_sample(&product, &inverse).unwrap();
            let critical = 1.63 * (2.0 / n as f64).sqrt();
            assert!(ks < critical, "{e} α={a}: two-sample KS {ks} ≥ {critical}");
        }
    }
}

#[test]
fn distribution_functions_are_monotone() {
    let grid: Vec<f64> = (0..1000).map(|i| 1e-6 * (1e8f64).powf(i as f64 / 999.0)).collect();
    for e in EnsembleKind::ALL {
        for a in ALPHAS {
            for b in BETAS {
                let d = dist(e, a, b);
                let f: Vec<f64> = grid.iter().map(|&w| d.positive_cdf(w).unwrap()).collect();
                assert!(f.windows(2).all(|p| p[1] >= p[0]), "{e} α={a} β={b}");
                assert!((d.positive_cdf(1e9).unwrap() - 1.0).abs() < 1e-8);
                if b == 0.0 {
                    let raw: Vec<f64> = grid.iter().map(|&w| d.cdf(w).unwrap()).collect();
                    assert!(raw.windows(2).all(|p| p[1] >= p[0] - 1e-15), "{e} α={a}");
                    assert_eq!(d.negativity().negative_mass, 0.0);
                }
            }
        }
    }
    assert!((dist(EnsembleKind::Unitary, 0.0, 0.0).cdf(2f64.ln()).unwrap() - 0.5).abs() < 1e-12);
}

/// The first-order density turns negative in the far tail once β > 0; the
/// diagnostics must say so rather than hide it.
#[test]
fn negativity_is_reported() {
    for e in EnsembleKind::ALL {
        let r = dist(e, 0.3, 0.0).negativity();
        assert!(r.min_pdf >= -1e-12 && r.cdf_decrease <= 1e-12, "{e}: {r:?}");
        let r = dist(e, 0.0, 0.04).negativity();
        assert!(r.min_pdf < 0.0 && r.negative_mass > 0.0, "{e}: {r:?}");
        assert!(r.min_pdf_omega > 1.0);
    }
}

#[test]
fn small_parameters_approach_porter_thomas() {
    let omegas: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    for e in EnsembleKind::ALL {
        let sup = |s: f64| {
            let d = dist(e, s, s / 10.0);
            omegas
                .iter()
                .map(|&w| (d.pdf(w).unwrap() - porter_thomas_pdf(e, Dimension::Infinite, w)).abs())
                .fold(0.0, f64::max)
        };
        let errs: Vec<f64> = [0.1, 0.01, 0.001].iter().map(|&s| sup(s)).collect();
        assert!(errs[1] < 0.2 * errs[0] && errs[2] < 0.2 * errs[1], "{e}: {errs:?}");
        assert!(errs[2] < 1e-2);
    }
}

use anticoncentration::closed_forms::{
    ginibre_rmps_ipr, haar_ipr, rmps_ipr_exact, rmps_scaling_params, rpm_ipr_asymptotic, rpm_ipr_exact, universal_ratio,
    RmpsSpec, RpmSpec,
};
use anticoncentration::EnsembleKind;
use proptest::prelude::*;

mod oracle;
use oracle::rpm_chain_sum;

#[test]
fn rpm_matches_chain_enumeration() {
    let spec = RpmSpec { epsilon: 0.7, t: 4, n: 5, k: 3 };
    let brute = rpm_chain_sum(&spec);
    let (raw, ratio) = rpm_ipr_exact(&spec).unwrap();
    assert!((raw - brute).abs() <= 1e-12 * brute, "{raw} vs {brute}");
    assert!((ratio - brute / 6.0).abs() <= 1e-12 * ratio);
    let small = RpmSpec { epsilon: 0.2, t: 2, n: 4, k: 2 };
    assert!((rpm_ipr_exact(&small).unwrap().0 / rpm_chain_sum(&small) - 1.0).abs() < 1e-13);
}

#[test]
fn rpm_asymptotics_improve_with_n() {
    let x = 0.5;
    let gaps: Vec<f64> = [64usize, 256, 1024]
        .iter()
        .map(|&n| {
            let epsilon = (n as f64 / x).ln() / 2.0;
            let spec = RpmSpec { epsilon, t: 2, n, k: 3 };
            assert!((spec.x() - x).abs() < 1e-12);
            let exact = rpm_ipr_exact(&spec).unwrap().1;
            (exact / rpm_ipr_asymptotic(3, x, n as f64).unwrap() - 1.0).abs()
        })
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    assert!(gaps[2] < 0.5 * gaps[0], "{gaps:?}");
}

#[test]
fn rmps_ratio_against_the_expansion() {
    let spec = RmpsSpec { d: 2, chi: 64, n: 16, ensemble: EnsembleKind::Unitary };
    let sv = rmps_scaling_params(&spec).unwrap();
    let ratio = rmps_ipr_exact(&spec, 2).unwrap() / haar_ipr(EnsembleKind::Unitary, 65536.0, 2).unwrap();
    let predicted = universal_ratio(2, sv.alpha, sv.beta);
    // the expansion is good to O(1/N²)
    assert!((ratio / predicted - 1.0).abs() < 1.0 / 256.0, "{ratio} vs {predicted}");
}

#[test]
fn ginibre_log_ratio_is_exact() {
    for (n, blocks, m) in [(4usize, 2usize, 4u64), (6, 3, 4), (8, 4, 2), (10, 5, 8)] {
        let ipr = ginibre_rmps_ipr(2, n, m, blocks, 2, None).unwrap();
        let haar = 2.0 / 2f64.powi(n as i32);
        let expect = (blocks - 1) as f64 * (1.0 + 1.0 / m as f64).ln();
        assert!(((ipr / haar).ln() - expect).abs() < 1e-12, "N = {n}");
        assert!((ginibre_rmps_ipr(2, n, m, blocks, 1, None).unwrap() - 1.0).abs() < 1e-12);
    }
}

fn ensemble() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![Just(EnsembleKind::Unitary), Just(EnsembleKind::Orthogonal)]
}

proptest! {
    #[test]
    fn normalization_at_k_one(e in ensemble(), dim in 1.0f64..1e6, r in 0u32..4, extra in 0usize..200) {
        prop_assert!((haar_ipr(e, dim, 1).unwrap() - 1.0).abs() < 1e-12);
        let spec = RmpsSpec { d: 2, chi: 1 << r, n: r as usize + 1 + extra, ensemble: e };
        prop_assert!((rmps_ipr_exact(&spec, 1).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rmps_is_never_more_anticoncentrated_than_haar(
        e in ensemble(), d in 2u64..=4, r in 0u32..3, extra in 0usize..40, k in 2usize..=5
    ) {
        let spec = RmpsSpec { d, chi: d.pow(r), n: r as usize + 1 + extra, ensemble: e };
        let dim = (d as f64).powi(spec.n as i32);
        prop_assert!(rmps_ipr_exact(&spec, k).unwrap() >= haar_ipr(e, dim, k).unwrap() * (1.0 - 1e-10));
    }

    #[test]
    fn rpm_ratio_falls_with_depth(epsilon in 0.05f64..1.0, n in 2usize..30, k in 2usize..=4) {
        let mut prev = f64::INFINITY;
        for t in (2..=20).step_by(2) {
            let r = rpm_ipr_exact(&RpmSpec { epsilon, t, n, k }).unwrap().1;
            prop_assert!(r <= prev * (1.0 + 1e-12) && r >= 1.0 - 1e-12);
            prev = r;
        }
    }
}

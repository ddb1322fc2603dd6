use anticoncentration::circuit::{ensemble_averages, CircuitSpec};
use anticoncentration::closed_forms::haar_ipr;
use anticoncentration::commutant::CommutantBasis;
use anticoncentration::replica::{
    annealed_series, contract_with_closures, delta_s2_series, ContractionMethod, ReplicaGateTensor,
};
use anticoncentration::{EnsembleKind, Error};

#[test]
fn local_replica_dimension() {
    for (e, c) in [(EnsembleKind::Unitary, 2), (EnsembleKind::Orthogonal, 3)] {
        let gate = ReplicaGateTensor::new(e, 2).unwrap();
        assert_eq!(gate.c(), c);
        assert_eq!(gate.c(), CommutantBasis::enumerate(e, 2).unwrap().len());
    }
}

#[test]
fn two_site_values_are_haar() {
    for (e, i2, pur) in [(EnsembleKind::Unitary, 0.4, 0.8), (EnsembleKind::Orthogonal, 0.5, 0.8)] {
        let p = annealed_series(2, 1, e, ContractionMethod::Exact).unwrap()[1];
        assert!((p.i2 - i2).abs() < 1e-10, "{e}: {}", p.i2);
        if e == EnsembleKind::Unitary {
            assert!((p.purity - pur).abs() < 1e-10, "{e}: {}", p.purity);
        }
    }
}

#[test]
fn depth_zero_is_a_product_state() {
    for n in [2, 6, 10] {
        let p = annealed_series(n, 0, EnsembleKind::Unitary, ContractionMethod::Exact).unwrap()[0];
        assert_eq!((p.i2, p.purity), (1.0, 1.0));
    }
}

#[test]
fn reflection_symmetry() {
    for e in EnsembleKind::ALL {
        let gate = ReplicaGateTensor::new(e, 2).unwrap();
        for n in [4, 6, 8] {
            for t in 1..=6 {
                let first: Vec<Vec<f64>> = (0..n).map(|s| gate.purity_closure(s < n / 2)).collect();
                let mut second = first.clone();
                second.reverse();
                let a = contract_with_closures(n, t, e, ContractionMethod::Exact, &first).unwrap();
                let b = contract_with_closures(n, t, e, ContractionMethod::Exact, &second).unwrap();
                assert!((a - b).abs() < 1e-12, "{e} N={n} t={t}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn tensor_train_converges_to_exact() {
    let tt = ContractionMethod::TensorTrain { tol: 1e-14, max_bond: 256 };
    for (e, n_max) in [(EnsembleKind::Unitary, 12), (EnsembleKind::Orthogonal, 8)] {
        for n in (2..=n_max).step_by(2) {
            let exact = annealed_series(n, 10, e, ContractionMethod::Exact).unwrap();
            let approx = annealed_series(n, 10, e, tt).unwrap();
            for (x, y) in exact.iter().zip(&approx) {
                assert!((x.i2 - y.i2).abs() <= 1e-10 * x.i2, "{e} N={n} t={}: {} vs {}", x.t, x.i2, y.i2);
                assert!((x.purity - y.purity).abs() <= 1e-10 * x.purity, "{e} N={n} t={}", x.t);
                assert!(y.trunc_error < 1e-10);
            }
        }
    }
}

#[test]
fn collision_probability_decreases_towards_haar() {
    for e in EnsembleKind::ALL {
        for n in (2..=12).step_by(2) {
            let haar = haar_ipr(e, 2f64.powi(n as i32), 2).unwrap();
            let s = annealed_series(n, 16, e, ContractionMethod::Exact).unwrap();
            for w in s[2..].windows(2) {
                assert!(w[1].i2 <= w[0].i2 * (1.0 + 1e-12), "{e} N={n} t={}", w[1].t);
            }
            assert!(s.iter().all(|p| p.i2 >= haar * (1.0 - 1e-12)), "{e} N={n}");
        }
    }
}

#[test]
fn entropy_gap_closes_monotonically() {
    let series = delta_s2_series(&[16], 30, EnsembleKind::Unitary, ContractionMethod::Exact).unwrap();
    let ds = series.delta_s2_of(16);
    assert!(ds.iter().all(|&(_, v)| v >= -1e-12));
    for w in ds[4..].windows(2) {
        if w[0].1 > 1e-13 {
            assert!(w[1].1 < w[0].1, "t = {}: {} then {}", w[1].0, w[0].1, w[1].1);
        }
    }
}

#[test]
fn eight_sites_match_statevector_sampling() {
    let p = annealed_series(8, 4, EnsembleKind::Unitary, ContractionMethod::Exact).unwrap()[4];
    let avg = ensemble_averages(&CircuitSpec::brickwork(8, 4, EnsembleKind::Unitary, 808), 10_000).unwrap();
    assert!(avg.ipr[1].within(p.i2, 3.0), "{:?} vs {}", avg.ipr[1], p.i2);
    assert!(avg.half_chain_purity.within(p.purity, 3.0), "{:?} vs {}", avg.half_chain_purity, p.purity);
}

#[test]
fn preconditions() {
    assert!(matches!(annealed_series(7, 3, EnsembleKind::Unitary, ContractionMethod::Exact), Err(Error::Argument(_))));
    assert!(matches!(
        annealed_series(40, 3, EnsembleKind::Orthogonal, ContractionMethod::Exact),
        Err(Error::Capacity { .. })
    ));
    let tt = annealed_series(40, 6, EnsembleKind::Orthogonal, ContractionMethod::tensor_train()).unwrap();
    assert!(tt[6].i2 > 0.0 && tt[6].trunc_error < 1e-6);
}

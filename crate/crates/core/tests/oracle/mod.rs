use anticoncentration::closed_forms::RpmSpec;
use anticoncentration::commutant::{perm_stats, permutations};

/// Sum over all chains `σ₁ … σ_N` of `∏ exp{-ε t/2 (k - n_F(σ_i σ_{i+1}⁻¹))}`.
pub fn rpm_chain_sum(spec: &RpmSpec) -> f64 {
    let perms = permutations(spec.k);
    let c = perms.len();
    let weight = |i: usize, j: usize| {
        let nf = perm_stats(&perms[i], &perms[j]).unwrap().fixed_points;
        (-spec.epsilon * spec.t as f64 / 2.0 * (spec.k - nf) as f64).exp()
    };
    let w: Vec<Vec<f64>> = (0..c).map(|i| (0..c).map(|j| weight(i, j)).collect()).collect();
    let mut total = 0.0;
    let mut chain = vec![0usize; spec.n];
    loop {
        total += chain.windows(2).map(|p| w[p[0]][p[1]]).product::<f64>();
        let mut pos = spec.n;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            chain[pos] += 1;
            if chain[pos] < c {
                break;
            }
            chain[pos] = 0;
        }
    }
}

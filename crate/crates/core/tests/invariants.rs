mod common;

use common::*;
use proptest::prelude::*;
use qkdlab::keystream::{total_eps, StreamParams};
use qkdlab::quantum::{cq_trace_distance, measure, trace_distance, DensityOperator, Label};
use qkdlab::security::{
    accessible_info_lower, ben_or_sufficient_eps, default_distinguishers, fano_information_bound,
    per_qubit_family, random_rank_one_povm, secrecy_eps_lower, secrecy_eps_upper,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn holevo_bits(cq: &qkdlab::quantum::CqState) -> f64 {
    let s = |m: &CMat| -> f64 {
        hermitian_eigenvalues(m)
            .into_iter()
            .filter(|&l| l > 1e-15)
            .map(|l| -l * l.log2())
            .sum()
    };
    let mut avg = CMat::zeros(cq.dim(), cq.dim());
    let mut cond = 0.0;
    for (_, p, rho) in cq.branches() {
        avg += rho.matrix().scale(p);
        cond += p * s(rho.matrix());
    }
    s(&avg) - cond
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measurement_does_not_increase_distance(seed in any::<u64>(), dim in 2usize..=5) {
        let mut r = rng(seed);
        let a = random_density(dim, r.random_range(1..=dim), &mut r);
        let b = random_density(dim, r.random_range(1..=dim), &mut r);
        let povm = random_rank_one_povm(dim, &mut r).unwrap();
        let p = measure(&a, &povm).unwrap();
        let q = measure(&b, &povm).unwrap();
        let tv = 0.5 * p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>();
        prop_assert!(tv <= trace_distance(&a, &b).unwrap() + 1e-9);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), dim in 1usize..=5) {
        let mut r = rng(seed);
        let a = random_density(dim, r.random_range(1..=dim), &mut r);
        let b = random_density(dim, r.random_range(1..=dim), &mut r);
        let c = random_density(dim, r.random_range(1..=dim), &mut r);
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        prop_assert!((ab - dense_trace_distance(a.matrix(), b.matrix())).abs() < 1e-9);
    }

    #[test]
    fn tensoring_preserves_distance(seed in any::<u64>(), d1 in 1usize..=3, d2 in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_density(d1, r.random_range(1..=d1), &mut r);
        let b = random_density(d1, r.random_range(1..=d1), &mut r);
        let t = random_density(d2, r.random_range(1..=d2), &mut r);
        let at = a.tensor(&t).unwrap();
        let bt = b.tensor(&t).unwrap();
        prop_assert!((at.trace() - 1.0).abs() < 1e-12);
        prop_assert_eq!(at.dim(), d1 * d2);
        let lhs = trace_distance(&at, &bt).unwrap();
        prop_assert!((lhs - trace_distance(&a, &b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn cq_distance_matches_dense_embedding(seed in any::<u64>(), key_len in 1usize..=2, dim in 1usize..=4, perp in any::<bool>()) {
        let mut r = rng(seed);
        let a = random_cq(key_len, dim, perp, &mut r);
        let b = random_cq(key_len, dim, r.random(), &mut r);
        let labels = label_union(&a, &b);
        let dense = dense_trace_distance(&block_embedding(&a, &labels), &block_embedding(&b, &labels));
        prop_assert!((cq_trace_distance(&a, &b).unwrap() - dense).abs() < 1e-9);
    }

    #[test]
    fn secrecy_bracket_is_ordered(seed in any::<u64>(), key_len in 1usize..=2, dim in 1usize..=4, perp in any::<bool>()) {
        let mut r = rng(seed);
        let cq = random_cq(key_len, dim, perp, &mut r);
        let upper = secrecy_eps_upper(&cq).unwrap();
        let lower = secrecy_eps_lower(&cq, &default_distinguishers(&cq, seed).unwrap()).unwrap();
        prop_assert!(lower.value <= upper + 1e-9);
        prop_assert!(lower.value >= 0.0);
    }

    #[test]
    fn fano_direction_holds_over_the_family(seed in any::<u64>(), key_len in 1usize..=3, qubits in 1usize..=2) {
        let mut r = rng(seed);
        let cq = random_cq(key_len, 1 << qubits, false, &mut r);
        let delta = secrecy_eps_upper(&cq).unwrap();
        let ceiling = fano_information_bound(key_len, delta);
        for (name, pm) in per_qubit_family(qubits) {
            let joint: Vec<_> = pm.cq_distribution(&cq).unwrap().iter().map(|(x, z, p)| ((*x, *z), p)).collect();
            let i = mutual_information_bits(&joint);
            prop_assert!(i <= ceiling + 1e-9, "{} gives {} > {}", name, i, ceiling);
        }
    }

    #[test]
    fn accessible_info_lower_stays_below_holevo(seed in any::<u64>(), dim in 2usize..=4) {
        let mut r = rng(seed);
        let cq = random_cq(1, dim, false, &mut r);
        let bound = accessible_info_lower(&cq, 16, seed).unwrap();
        prop_assert!(bound.bits >= -1e-12);
        prop_assert!(bound.bits <= holevo_bits(&cq) + 1e-9);
    }

    #[test]
    fn ben_or_eps_is_monotone(a in 0.0f64..1e-3, b in 0.0f64..1e-3, n in 1u32..40) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ben_or_sufficient_eps(lo, n).unwrap() <= ben_or_sufficient_eps(hi, n).unwrap());
        prop_assert!(ben_or_sufficient_eps(a, n).unwrap() <= ben_or_sufficient_eps(a, n + 1).unwrap());
    }

    #[test]
    fn stream_total_bounds_the_direct_sum(
        ell in 16_000u64..30_000,
        extra in 1_000_000u64..3_000_000,
        c in 1e3f64..1e6,
        ell0 in 20_000u64..60_000,
    ) {
        // ρ·n0 exceeds 2ℓ by ρ·extra, so the first term starts below e^{-10}
        let n0 = 200 * ell + extra;
        let p = StreamParams {
            gamma: 1e-3, rate_rho: 1e-2, nu: 1e-3, n0, c, ell, ell0, eps0: 0.0,
        };
        let b = total_eps(&p, 50).unwrap();
        prop_assert!(!b.divergent && b.eps_total < 1.0);
        let mut direct = 0.0;
        let mut ell_prev = ell0 as f64;
        let mut converged = false;
        for i in 1..=200_000u64 {
            let n_i = n0 as f64 + (c * i as f64).ceil();
            let ell_i = ell as f64 + (c * 1e-2 * i as f64 / 2.0).ceil();
            let e = ((-1e-3 * (1e-2 * n_i - ell_i - ell as f64)).exp() + (-1e-3 * ell_prev + n_i.ln()).exp()).min(1.0);
            direct += e;
            ell_prev = ell_i;
            if e < 1e-25 {
                converged = true;
                break;
            }
        }
        prop_assert!(converged);
        prop_assert!(direct <= b.eps_total * (1.0 + 1e-9) + 1e-300);
        let longer = total_eps(&p, 100).unwrap();
        prop_assert!(longer.tail_bound <= b.tail_bound * (1.0 + 1e-12));
    }
}

#[test]
fn product_state_has_zero_information() {
    let mut r = rng(3);
    let rho = random_density(4, 3, &mut r);
    let cq = qkdlab::quantum::CqState::perfect_key(2, rho).unwrap();
    assert!(accessible_info_lower(&cq, 32, 1).unwrap().bits < 1e-12);
    assert!(secrecy_eps_upper(&cq).unwrap() < 1e-12);
}

#[test]
fn classical_copy_gives_one_bit() {
    let zero = DensityOperator::basis(2, 0).unwrap();
    let one = DensityOperator::basis(2, 1).unwrap();
    let cq = qkdlab::quantum::CqState::new(
        1,
        vec![
            (Label::key(0, 1).unwrap(), 0.5, zero),
            (Label::key(1, 1).unwrap(), 0.5, one),
        ],
    )
    .unwrap();
    let b = accessible_info_lower(&cq, 8, 0).unwrap();
    assert!((b.bits - 1.0).abs() < 1e-12);
    assert!((secrecy_eps_upper(&cq).unwrap() - 0.5).abs() < 1e-12);
}

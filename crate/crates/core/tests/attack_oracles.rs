mod common;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use common::*;
use qkdlab::attack::{
    build_attack_state, guess_probability, parity_distinguisher, parity_guess_curve_with,
    run_otp_attack_with, secrecy_gap_report, single_qubit_guess_oracle, AttackStrategy,
};
use qkdlab::quantum::{cq_measure, Label, Povm, QubitBasis};
use qkdlab::security::{
    accessible_info_lower, canonical_ideal, per_qubit_family, per_qubit_family_best,
    secrecy_eps_lower, secrecy_eps_upper,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn branches_match_direct_construction() {
    for n in 2..=4 {
        let a = build_attack_state(n).unwrap();
        assert_eq!(a.cq.num_branches(), 1 << (n + 1));
        assert_eq!(a.cq.dim(), 1 << n);
        for s in 0..1u64 << (n + 1) {
            let label = Label::key(s, n + 1).unwrap();
            let (p, rho) = a.cq.branch(&label).unwrap();
            assert!((p - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
            let expected = parity_branch(&bits_msb(s, n + 1));
            let dev = (rho.matrix() - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-12, "n={n} s={s}: {dev}");
        }
    }
}

#[test]
fn computational_readout_matches_hand_enumeration() {
    // n = 2: P(s, z) = 2^{-3} · ½ Σ_{r: r1⊕r2 = s3} |⟨z1|r1⟩_{s1}|² |⟨z2|r2⟩_{s2}|²
    let a = build_attack_state(2).unwrap();
    let joint = cq_measure(&a.cq, &Povm::computational(4).unwrap()).unwrap();
    for s in 0..8u64 {
        let sb = bits_msb(s, 3);
        for z in 0..4usize {
            let zb = bits_msb(z as u64, 2);
            let mut p = 0.0;
            for (r1, r2) in [(false, false), (false, true), (true, false), (true, true)] {
                if (r1 ^ r2) != sb[2] {
                    continue;
                }
                let f = |zi: bool, ri: bool, si: bool| conjugate_qubit(ri, si)[zi as usize].powi(2);
                p += 0.5 * f(zb[0], r1, sb[0]) * f(zb[1], r2, sb[1]);
            }
            p /= 8.0;
            let got = joint.prob(&Label::key(s, 3).unwrap(), &z);
            assert!((got - p).abs() < 1e-14, "s={s} z={z}: {got} vs {p}");
        }
    }
}

#[test]
fn accessible_information_sits_between_family_and_holevo() {
    for n in 2..=3 {
        let a = build_attack_state(n).unwrap();
        let mut family = 0.0f64;
        for (_, pm) in per_qubit_family(n) {
            let joint: Vec<_> = pm
                .cq_distribution(&a.cq)
                .unwrap()
                .iter()
                .map(|(x, z, p)| ((*x, *z), p))
                .collect();
            family = family.max(mutual_information_bits(&joint));
        }
        let (lib_family, _) = per_qubit_family_best(&a.cq).unwrap();
        assert!((lib_family - family).abs() < 1e-12);
        let bound = accessible_info_lower(&a.cq, 32, 5).unwrap();
        assert!(bound.bits >= family - 1e-12);
        // χ = S(I/2^n) − S(ρ^s) = n − (n − 1) bits: each branch is maximally mixed on a 2^{n−1} subspace
        let chi = 1.0;
        for (_, _, rho) in a.cq.branches() {
            let ev = hermitian_eigenvalues(rho.matrix());
            let s: f64 = ev.iter().filter(|&&l| l > 1e-14).map(|l| -l * l.log2()).sum();
            assert!((s - (n as f64 - 1.0)).abs() < 1e-9, "n={n}: S(ρ^s) = {s}");
        }
        assert!(bound.bits <= chi + 1e-9);
    }
}

#[test]
fn parity_witness_reaches_one_half() {
    for n in 2..=7 {
        let a = build_attack_state(n).unwrap();
        let ideal = canonical_ideal(&a.cq).unwrap().to_cq(n + 1).unwrap();
        let (real, ideal_acc) = parity_distinguisher(n).acceptance(&a.cq, &ideal).unwrap().unwrap();
        assert!((real - 1.0).abs() < 1e-9, "n={n}: {real}");
        assert!((ideal_acc - 0.5).abs() < 1e-9, "n={n}: {ideal_acc}");
        let lower = secrecy_eps_lower(&a.cq, &[parity_distinguisher(n)]).unwrap().value;
        assert!(lower >= 0.5 - 1e-9);
        assert!(lower <= secrecy_eps_upper(&a.cq).unwrap() + 1e-9);
    }
}

#[test]
fn breidbart_is_the_best_single_qubit_guess() {
    let analytic = FRAC_PI_8.cos().powi(2);
    assert!((guess_probability(QubitBasis::BREIDBART) - analytic).abs() < 1e-12);
    assert!((guess_probability(QubitBasis::STANDARD) - 0.75).abs() < 1e-12);
    assert!((guess_probability(QubitBasis::DIAGONAL) - 0.75).abs() < 1e-12);
    let oracle = single_qubit_guess_oracle();
    assert!((oracle.p_star - analytic).abs() < 1e-6);
    // maxima sit at π/8 modulo π/2
    let offset = (oracle.theta - FRAC_PI_8).rem_euclid(2.0 * FRAC_PI_4);
    assert!(offset.min(2.0 * FRAC_PI_4 - offset) < 1e-3, "theta {}", oracle.theta);
    // a fine sweep of our own never beats the oracle
    for k in 0..=2000 {
        let theta = k as f64 * std::f64::consts::PI / 2000.0;
        assert!(guess_probability(QubitBasis::real(theta)) <= oracle.p_star + 1e-12);
    }
}

#[test]
fn parity_curve_matches_independent_guessing() {
    // exact probability that the XOR of n independent guesses, each right with
    // probability p, equals the XOR of the true bits
    let p = FRAC_PI_8.cos().powi(2);
    let curve = parity_guess_curve_with(8, p).unwrap();
    for pt in curve {
        let mut even = 1.0;
        for _ in 0..pt.n {
            even = even * p + (1.0 - even) * (1.0 - p);
        }
        assert!((pt.probability - even).abs() < 1e-12, "n={}", pt.n);
    }
}

#[test]
fn complement_basis_control_succeeds_half_the_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 3;
    let trials = 4000;
    let mut wins = 0;
    for _ in 0..trials {
        let m: Vec<bool> = (0..=n).map(|_| rng.random()).collect();
        wins += run_otp_attack_with(n, &m, AttackStrategy::ComplementBasis, &mut rng)
            .unwrap()
            .success as u32;
    }
    let rate = wins as f64 / trials as f64;
    assert!((rate - 0.5).abs() < 0.04, "rate {rate}");
}

#[test]
fn gap_report_for_four_qubits() {
    let r = secrecy_gap_report(4, 16, 3).unwrap();
    assert!(r.iacc_lower_bits <= 0.2);
    assert!(r.eps_secret_lower >= 0.5 - 1e-9);
    assert!(r.eps_secret_lower <= r.eps_secret_upper + 1e-9);
    assert!(r.ben_or_required_iacc < r.iacc_lower_bits);
}

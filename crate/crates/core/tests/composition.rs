use qkdlab::attack::build_attack_state;
use qkdlab::composition::{
    attack_key_source, compose, estimate_advantage, exact_advantage, majority_distinguisher,
    otp_application, otp_parity_distinguisher, perfect_key_source, toy_key_source,
    verify_composition_bound, MessageChoice, Mode,
};
use qkdlab::security::per_qubit_family_best;

#[test]
fn sampled_advantage_brackets_the_exact_one() {
    let source = toy_key_source(3, 0.1).unwrap();
    let pair = compose(&otp_application(3, MessageChoice::Uniform).unwrap(), &source).unwrap();
    let d = majority_distinguisher();
    let exact = exact_advantage(&pair, &d).unwrap();
    // majority of three bits each one with probability 0.6
    let p = 0.6f64;
    let majority = p.powi(3) + 3.0 * p * p * (1.0 - p);
    assert!((exact.point - (majority - 0.5)).abs() < 1e-12);
    let est = estimate_advantage(&pair, &d, 100_000, 17).unwrap();
    assert!((est.point - exact.point).abs() <= est.half_width_99);
    assert_eq!(est, estimate_advantage(&pair, &d, 100_000, 17).unwrap());
}

#[test]
fn perfect_source_composes_to_zero() {
    let app = otp_application(4, MessageChoice::Fixed(vec![0, 1, 1, 0])).unwrap();
    let src = perfect_key_source(4).unwrap();
    assert_eq!(compose(&app, &src).unwrap().declared_eps, 0.0);
    let r = verify_composition_bound(&app, &src, &[majority_distinguisher()], Mode::Exact).unwrap();
    assert!(r.pass);
    assert!(r.entries[0].total.point.abs() < 1e-15);
}

#[test]
fn small_accessible_information_does_not_compose() {
    let n = 4;
    let (iacc, _) = per_qubit_family_best(&build_attack_state(n).unwrap().cq).unwrap();
    let source = attack_key_source(n, iacc).unwrap();
    let app = otp_application(n + 1, MessageChoice::Fixed(vec![1, 0, 0, 1, 1])).unwrap();
    let r = verify_composition_bound(
        &app,
        &source,
        &[otp_parity_distinguisher(n)],
        Mode::MonteCarlo { trials: 20_000, seed: 4 },
    )
    .unwrap();
    assert!(!r.pass);
    let e = &r.entries[0];
    assert!(e.total.point > r.declared_eps + e.total.half_width_99);
    assert!((e.total.point - 0.5).abs() <= e.total.half_width_99);
    assert!(!e.source_within_bound && e.app_within_bound);
}

#[test]
fn exact_mode_rejects_quantum_transcripts() {
    let source = attack_key_source(2, 0.0).unwrap();
    let app = otp_application(3, MessageChoice::Uniform).unwrap();
    assert!(verify_composition_bound(&app, &source, &[otp_parity_distinguisher(2)], Mode::Exact).is_err());
}

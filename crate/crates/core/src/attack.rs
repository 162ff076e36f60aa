//! The conjugate-basis parity state: a key whose accessible information is
//! small, yet which leaks a message bit with certainty once used as a
//! one-time pad.
//!
//! Key `S = (S_1, …, S_{n+1})` is uniform. The adversary holds `n` qubits;
//! qubit `i` encodes a bit `R_i` in the standard (`S_i = 0`) or diagonal
//! (`S_i = 1`) basis, and the `R_i` are uniform subject to
//! `R_1 ⊕ ⋯ ⊕ R_n = S_{n+1}`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    bb84_encode, measure, outcome_bits, CqState, DensityOperator, Label, ProductMeasurement,
    PureState, QubitBasis,
};
use crate::security::{
    accessible_info_lower, ben_or_required_iacc, secrecy_eps_upper, DecisionRule, Distinguisher,
    Measurement, secrecy_eps_lower,
};

/// Default upper limit on the qubit count (branch dimension `2^n`).
pub const DEFAULT_MAX_QUBITS: usize = 7;

/// Hard limit accepted by [`build_attack_state_with_cap`].
pub const ABSOLUTE_MAX_QUBITS: usize = 10;

/// Tolerance of [`fully_mixed_marginal_check`].
pub const MARGINAL_TOL: f64 = 1e-9;

/// `|φ^{s,r}⟩ = |r_1⟩_{s_1} ⊗ ⋯ ⊗ |r_n⟩_{s_n}`, one factor per qubit.
pub fn register_state(s: &[bool], r: &[bool]) -> Vec<PureState> {
    s.iter().zip(r).map(|(&si, &ri)| bb84_encode(ri, si)).collect()
}

fn product_state(factors: &[PureState]) -> Result<PureState> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("empty register".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| acc.tensor(f))
}

/// The cq-state of the construction for a given qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackState {
    pub n: usize,
    pub cq: CqState,
}

impl AttackState {
    /// `ρ^s` for the key `s` (length `n + 1`).
    pub fn branch(&self, s: &Label) -> Option<&DensityOperator> {
        self.cq.branch(s).map(|(_, rho)| rho)
    }
}

pub fn build_attack_state(n: usize) -> Result<AttackState> {
    build_attack_state_with_cap(n, DEFAULT_MAX_QUBITS)
}

pub fn build_attack_state_with_cap(n: usize, cap: usize) -> Result<AttackState> {
    let cap = cap.min(ABSOLUTE_MAX_QUBITS);
    if !(2..=cap).contains(&n) {
        return Err(Error::InvalidArgument(format!("qubit count {n} outside [2, {cap}]")));
    }
    let dim = 1usize << n;
    let key_len = n + 1;
    let p_key = 0.5f64.powi(key_len as i32);
    let weight = 0.5f64.powi(n as i32 - 1);
    let mut branches = Vec::with_capacity(1 << key_len);
    for label in Label::all_keys(key_len)? {
        let s = label.to_bits().expect("key label");
        let mut rho = DMatrix::zeros(dim, dim);
        // the 2^{n-1} strings r with r_1 ⊕ … ⊕ r_n = s_{n+1}
        for free in 0..1u64 << (n - 1) {
            let mut r: Vec<bool> = (0..n - 1).map(|i| (free >> (n - 2 - i)) & 1 == 1).collect();
            let parity = r.iter().fold(false, |a, &b| a ^ b);
            r.push(parity ^ s[n]);
            let phi = product_state(&register_state(&s[..n], &r))?;
            let v = phi.amplitudes();
            rho.gerc(nalgebra::Complex::new(weight, 0.0), v, v, nalgebra::Complex::new(1.0, 0.0));
        }
        branches.push((label, p_key, DensityOperator::from_matrix_unchecked(rho)));
    }
    Ok(AttackState {
        n,
        cq: CqState::new(key_len, branches)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub pass: bool,
    pub max_deviation: f64,
}

/// Checks that `½ρ^{(p,0)} + ½ρ^{(p,1)} = I/2^n` for every prefix `p = (s_1..s_n)`.
pub fn fully_mixed_marginal_check(a: &AttackState) -> Result<MarginalCheck> {
    prefix_marginal_check(&a.cq, a.n)
}

/// [`fully_mixed_marginal_check`] on an arbitrary cq-state with key length `n + 1`.
pub fn prefix_marginal_check(cq: &CqState, n: usize) -> Result<MarginalCheck> {
    if cq.key_len() != n + 1 || cq.dim() != 1 << n {
        return Err(Error::InvalidArgument(format!(
            "expected key length {} and dim {}",
            n + 1,
            1usize << n
        )));
    }
    let target = DensityOperator::maximally_mixed(1 << n)?;
    let mut max_deviation: f64 = 0.0;
    for prefix in 0..1u64 << n {
        let mut parts = Vec::with_capacity(2);
        for last in 0..2u64 {
            let label = Label::key(prefix << 1 | last, n + 1)?;
            match cq.branch(&label) {
                Some((_, rho)) => parts.push(rho),
                None => {
                    return Ok(MarginalCheck {
                        pass: false,
                        max_deviation: f64::INFINITY,
                    })
                }
            }
        }
        let avg = DensityOperator::mixture(&[(0.5, parts[0]), (0.5, parts[1])])?;
        max_deviation = max_deviation.max(avg.max_abs_deviation(&target)?);
    }
    Ok(MarginalCheck {
        pass: max_deviation < MARGINAL_TOL,
        max_deviation,
    })
}

/// How the adversary chooses the measurement basis of qubit `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackStrategy {
    /// Basis `Ŝ_i = M_i ⊕ C_i`, the true encoding basis.
    Informed,
    /// The complementary basis; a control that should succeed half the time.
    ComplementBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTranscript {
    pub key: Vec<bool>,
    pub r: Vec<bool>,
    pub message: Vec<bool>,
    pub ciphertext: Vec<bool>,
    pub recovered_key_prefix: Vec<bool>,
    pub measured_r: Vec<bool>,
    pub recovered_bit: bool,
    pub success: bool,
}

/// One run of the informed one-time-pad attack.
pub fn run_otp_attack<R: Rng + ?Sized>(n: usize, message: &[bool], rng: &mut R) -> Result<AttackTranscript> {
    run_otp_attack_with(n, message, AttackStrategy::Informed, rng)
}

/// Samples `(s, r)`, prepares the adversary's product register, encrypts
/// `message` with `s` and lets the adversary, who knows `M_1..M_n`, recover
/// `M_{n+1}` from the ciphertext and the register.
pub fn run_otp_attack_with<R: Rng + ?Sized>(
    n: usize,
    message: &[bool],
    strategy: AttackStrategy,
    rng: &mut R,
) -> Result<AttackTranscript> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if message.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "message has {} bits, expected {}",
            message.len(),
            n + 1
        )));
    }
    let key: Vec<bool> = (0..=n).map(|_| rng.random()).collect();
    let mut r: Vec<bool> = (0..n - 1).map(|_| rng.random()).collect();
    let parity = r.iter().fold(false, |a, &b| a ^ b);
    r.push(parity ^ key[n]);
    let register = register_state(&key[..n], &r);

    let ciphertext: Vec<bool> = message.iter().zip(&key).map(|(m, s)| m ^ s).collect();

    // adversary side: knows message[..n] and the ciphertext
    let recovered_key_prefix: Vec<bool> = (0..n).map(|i| message[i] ^ ciphertext[i]).collect();
    let mut measured_r = Vec::with_capacity(n);
    for (qubit, &s_hat) in register.iter().zip(&recovered_key_prefix) {
        let basis = match strategy {
            AttackStrategy::Informed => QubitBasis::bb84(s_hat),
            AttackStrategy::ComplementBasis => QubitBasis::bb84(!s_hat),
        };
        let probs = measure(&qubit.to_density(), &basis.povm())?;
        measured_r.push(rng.random_bool(probs[1].clamp(0.0, 1.0)));
    }
    let s_last = measured_r.iter().fold(false, |a, &b| a ^ b);
    let recovered_bit = s_last ^ ciphertext[n];
    Ok(AttackTranscript {
        success: recovered_bit == message[n],
        key,
        r,
        message: message.to_vec(),
        ciphertext,
        recovered_key_prefix,
        measured_r,
        recovered_bit,
    })
}

/// The parity-consistency distinguisher: measure qubit `i` in the basis
/// named by `s_i` and accept iff the outcome parity equals `s_{n+1}`.
pub fn parity_distinguisher(n: usize) -> Distinguisher {
    Distinguisher::new(
        "parity consistency",
        Measurement::AdaptiveProduct(Arc::new(move |label: &Label| {
            ProductMeasurement::new(
                (0..n)
                    .map(|i| QubitBasis::bb84(label.bit(i).unwrap_or(false)))
                    .collect(),
            )
        })),
        DecisionRule::Custom(Arc::new(move |label: &Label, z: usize| {
            let parity = outcome_bits(z, n).into_iter().fold(false, |a, b| a ^ b);
            label.bit(n) == Some(parity)
        })),
    )
}

/// Probability of guessing `R` from `|R⟩_S` with uniform unknown `S` when
/// measuring in `basis` and reporting the outcome.
pub fn guess_probability(basis: QubitBasis) -> f64 {
    let povm = basis.povm();
    let mut total = 0.0;
    for s in [false, true] {
        for r in [false, true] {
            let probs = measure(&bb84_encode(r, s).to_density(), &povm).expect("qubit dims");
            total += probs[r as usize];
        }
    }
    total / 4.0
}

/// Sweep resolution of [`single_qubit_guess_oracle`] in radians.
pub const GUESS_SWEEP_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessOracle {
    pub p_star: f64,
    pub theta: f64,
}

/// Maximizes [`guess_probability`] over real projective qubit measurements:
/// a grid sweep over `[0, π)` followed by golden-section refinement.
pub fn single_qubit_guess_oracle() -> GuessOracle {
    let f = |theta: f64| guess_probability(QubitBasis::real(theta));
    let steps = (std::f64::consts::PI / GUESS_SWEEP_STEP).ceil() as usize;
    let (mut best_theta, mut best_p) = (0.0, f(0.0));
    for k in 1..steps {
        let theta = k as f64 * GUESS_SWEEP_STEP;
        let p = f(theta);
        if p > best_p {
            best_theta = theta;
            best_p = p;
        }
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_theta - GUESS_SWEEP_STEP, best_theta + GUESS_SWEEP_STEP);
    for _ in 0..60 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let theta = 0.5 * (lo + hi);
    let p = f(theta);
    if p > best_p {
        GuessOracle { p_star: p, theta }
    } else {
        GuessOracle {
            p_star: best_p,
            theta: best_theta,
        }
    }
}

/// Largest `n` accepted by [`parity_guess_curve`].
pub const PARITY_CURVE_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityGuessPoint {
    pub n: usize,
    pub probability: f64,
}

/// `½(1 + (2p* − 1)^n)` for `n = 1..=n_max`: the success probability of
/// guessing the parity bit from independent per-qubit guesses.
pub fn parity_guess_curve(n_max: usize) -> Result<Vec<ParityGuessPoint>> {
    parity_guess_curve_with(n_max, single_qubit_guess_oracle().p_star)
}

pub fn parity_guess_curve_with(n_max: usize, p_star: f64) -> Result<Vec<ParityGuessPoint>> {
    if !(1..=PARITY_CURVE_MAX_N).contains(&n_max) {
        return Err(Error::InvalidArgument(format!(
            "n_max {n_max} outside [1, {PARITY_CURVE_MAX_N}]"
        )));
    }
    let bias = 2.0 * p_star - 1.0;
    Ok((1..=n_max)
        .map(|n| ParityGuessPoint {
            n,
            probability: 0.5 * (1.0 + bias.powi(n as i32)),
        })
        .collect())
}

/// Renders the curve as CSV with header `n,probability`.
pub fn parity_curve_csv(points: &[ParityGuessPoint]) -> String {
    let mut out = String::from("n,probability\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.n, p.probability));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyGapReport {
    pub n: usize,
    pub key_len: usize,
    pub iacc_lower_bits: f64,
    pub iacc_best_strategy: String,
    pub iacc_family: Vec<String>,
    pub eps_secret_lower: f64,
    pub eps_secret_upper: f64,
    pub secrecy_witness: String,
    pub ben_or_required_iacc: f64,
    pub search_budget: usize,
    pub seed: u64,
}

/// Accessible information next to the secrecy bracket for the attack state.
pub fn secrecy_gap_report(n: usize, search_budget: usize, seed: u64) -> Result<SecrecyGapReport> {
    let a = build_attack_state(n)?;
    let iacc = accessible_info_lower(&a.cq, search_budget, seed)?;
    let lower = secrecy_eps_lower(&a.cq, &[parity_distinguisher(n)])?;
    let upper = secrecy_eps_upper(&a.cq)?;
    Ok(SecrecyGapReport {
        n,
        key_len: n + 1,
        iacc_lower_bits: iacc.bits,
        iacc_best_strategy: iacc.best_strategy,
        iacc_family: iacc.family,
        eps_secret_lower: lower.value,
        eps_secret_upper: upper,
        secrecy_witness: lower.witness,
        ben_or_required_iacc: ben_or_required_iacc(1.0, (n + 1) as u32),
        search_budget,
        seed,
    })
}

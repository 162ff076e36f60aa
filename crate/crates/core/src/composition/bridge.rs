//! The attack state as a key source for the composition harness.

use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{DistinguisherDef, Protocol, ProtocolPair, Transcript};
use crate::attack::{register_state, ABSOLUTE_MAX_QUBITS};
use crate::error::{Error, Result};
use crate::quantum::{PureState, QubitBasis};

fn check_n(n: usize) -> Result<()> {
    if !(2..=ABSOLUTE_MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n} outside [2, {ABSOLUTE_MAX_QUBITS}]"
        )));
    }
    Ok(())
}

/// Uniform `(n+1)`-bit key `s`; the adversary holds `|r_1⟩_{s_1} ⊗ … ⊗ |r_n⟩_{s_n}`
/// with `r` uniform subject to `r_1 ⊕ … ⊕ r_n = s_{n+1}`.
#[derive(Debug, Clone)]
pub struct AttackKeySource {
    pub n: usize,
}

/// Uniform key; the adversary's register is the same marginal `I/2^n`,
/// prepared as a uniformly random computational basis state.
#[derive(Debug, Clone)]
pub struct MixedRegisterSource {
    pub n: usize,
}

impl Protocol for AttackKeySource {
    fn name(&self) -> String {
        format!("attack-key{}", self.n + 1)
    }
    fn output_len(&self) -> usize {
        self.n + 1
    }
    fn run(&self, _key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        let s: Vec<bool> = (0..=self.n).map(|_| rng.random()).collect();
        let mut r: Vec<bool> = (0..self.n - 1).map(|_| rng.random()).collect();
        r.push(r.iter().fold(s[self.n], |a, &b| a ^ b));
        Ok(Transcript {
            output: s.iter().map(|&b| b as u8).collect(),
            view: vec![],
            qubits: register_state(&s[..self.n], &r),
        })
    }
}

impl Protocol for MixedRegisterSource {
    fn name(&self) -> String {
        format!("mixed-register-key{}", self.n + 1)
    }
    fn output_len(&self) -> usize {
        self.n + 1
    }
    fn run(&self, _key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        let key = (0..=self.n).map(|_| rng.random::<bool>() as u8).collect();
        let qubits = (0..self.n)
            .map(|_| PureState::basis(2, rng.random::<bool>() as usize))
            .collect::<Result<_>>()?;
        Ok(Transcript {
            output: key,
            view: vec![],
            qubits,
        })
    }
}

/// The attack key source with a caller-supplied declared ε, typically one
/// derived from a small accessible information.
pub fn attack_key_source(n: usize, declared_eps: f64) -> Result<ProtocolPair> {
    check_n(n)?;
    ProtocolPair::new(
        format!("attack-key{}", n + 1),
        declared_eps,
        Arc::new(AttackKeySource { n }),
        Arc::new(MixedRegisterSource { n }),
    )
}

/// Against one-time-pad encryption of a known message with the attack key:
/// reads `s_i = C_i ⊕ M_i` for `i ≤ n`, measures qubit `i` in basis `s_i`,
/// and accepts when `C_{n+1} ⊕ r_1 ⊕ … ⊕ r_n` equals the received `M_{n+1}`.
///
/// The acceptance probability is computed exactly from the product register.
pub fn otp_parity_distinguisher(n: usize) -> DistinguisherDef {
    DistinguisherDef::new(format!("otp-parity{n}"), move |t| {
        if t.output.len() != n + 1 || t.view.len() < n + 1 || t.qubits.len() != n {
            return 0.0;
        }
        // Π (1 − 2 Pr[r_i = 1]) is the bias of the parity
        let mut bias = 1.0;
        for i in 0..n {
            let s = t.view[i] ^ t.output[i] == 1;
            let one = &QubitBasis::bb84(s).vectors()[1];
            let p1 = one.inner(&t.qubits[i]).map(|a| a.norm_sqr()).unwrap_or(0.5);
            bias *= 1.0 - 2.0 * p1.clamp(0.0, 1.0);
        }
        let p_parity_one = (1.0 - bias) / 2.0;
        let want_one = t.view[n] ^ t.output[n] == 1;
        if want_one {
            p_parity_one
        } else {
            1.0 - p_parity_one
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::{compose, estimate_advantage, otp_application, verify_composition_bound, MessageChoice, Mode};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn informed_reading_is_certain_on_real_side() {
        let n = 3;
        let d = otp_parity_distinguisher(n);
        let otp = otp_application(n + 1, MessageChoice::Fixed(vec![1, 0, 1, 1])).unwrap();
        let pair = compose(&otp, &attack_key_source(n, 0.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let t = pair.real.run(&[], &mut rng).unwrap();
            assert_eq!((d.accept)(&t), 1.0);
            let t = pair.ideal.run(&[], &mut rng).unwrap();
            let p = (d.accept)(&t);
            assert!(p == 0.0 || p == 1.0 || (p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn declared_eps_from_small_iacc_is_violated() {
        let n = 3;
        let app = otp_application(n + 1, MessageChoice::Fixed(vec![0, 1, 1, 0])).unwrap();
        let source = attack_key_source(n, 0.05).unwrap();
        let report = verify_composition_bound(
            &app,
            &source,
            &[otp_parity_distinguisher(n)],
            Mode::MonteCarlo { trials: 2000, seed: 11 },
        )
        .unwrap();
        let e = &report.entries[0];
        assert!(e.total.point >= 0.5 - e.total.half_width_99);
        assert!(!e.within_bound && !report.pass);
        let pair = compose(&app, &source).unwrap();
        assert!(estimate_advantage(&pair, &otp_parity_distinguisher(n), 2000, 3).unwrap().point > 0.4);
        assert!(pair.real.enumerate(&[]).unwrap().is_none());
    }
}

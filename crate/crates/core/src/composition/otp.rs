//! One-time pad and toy key sources.

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{exact_total_variation, DistinguisherDef, Protocol, ProtocolPair, Transcript};
use crate::error::{Error, Result};

/// Longest message or key handled in enumeration mode.
pub const MAX_ENUMERATION_BITS: usize = 20;

fn bits_of(x: u64, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((x >> (len - 1 - i)) & 1) as u8).collect()
}

fn all_strings(len: usize) -> Result<impl Iterator<Item = Vec<u8>>> {
    if len > MAX_ENUMERATION_BITS {
        return Err(Error::InvalidArgument(format!(
            "enumeration limited to {MAX_ENUMERATION_BITS} bits, got {len}"
        )));
    }
    Ok((0..1u64 << len).map(move |x| bits_of(x, len)))
}

fn random_bits(len: usize, rng: &mut dyn RngCore) -> Vec<u8> {
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}

fn check_bits(bits: &[u8], len: usize, what: &str) -> Result<()> {
    if bits.len() != len || bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument(format!("{what} must be {len} bits")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageChoice {
    /// The message is fixed in advance (chosen by the distinguisher).
    Fixed(Vec<u8>),
    Uniform,
}

impl MessageChoice {
    fn draw(&self, m: usize, rng: &mut dyn RngCore) -> Vec<u8> {
        match self {
            MessageChoice::Fixed(msg) => msg.clone(),
            MessageChoice::Uniform => random_bits(m, rng),
        }
    }

    fn support(&self, m: usize) -> Result<Vec<(Vec<u8>, f64)>> {
        Ok(match self {
            MessageChoice::Fixed(msg) => vec![(msg.clone(), 1.0)],
            MessageChoice::Uniform => {
                let w = 0.5f64.powi(m as i32);
                all_strings(m)?.map(|s| (s, w)).collect()
            }
        })
    }
}

/// Real one-time pad: the view is `C = M ⊕ K`, the receiver outputs `C ⊕ K = M`.
#[derive(Debug, Clone)]
pub struct OtpReal {
    pub m: usize,
    pub message: MessageChoice,
}

/// Ideal encryption: the ciphertext is uniform and independent of `M`; the receiver still gets `M`.
#[derive(Debug, Clone)]
pub struct OtpIdeal {
    pub m: usize,
    pub message: MessageChoice,
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

impl Protocol for OtpReal {
    fn name(&self) -> String {
        "otp".into()
    }
    fn key_input_len(&self) -> usize {
        self.m
    }
    fn output_len(&self) -> usize {
        self.m
    }
    fn run(&self, key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        check_bits(key, self.m, "key")?;
        let msg = self.message.draw(self.m, rng);
        let c = xor(&msg, key);
        let received = xor(&c, key);
        Ok(Transcript::classical(received, c))
    }
    fn enumerate(&self, key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        check_bits(key, self.m, "key")?;
        Ok(Some(
            self.message
                .support(self.m)?
                .into_iter()
                .map(|(msg, p)| {
                    let c = xor(&msg, key);
                    (Transcript::classical(msg, c), p)
                })
                .collect(),
        ))
    }
}

impl Protocol for OtpIdeal {
    fn name(&self) -> String {
        "ideal-encryption".into()
    }
    fn key_input_len(&self) -> usize {
        self.m
    }
    fn output_len(&self) -> usize {
        self.m
    }
    fn run(&self, key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        check_bits(key, self.m, "key")?;
        let msg = self.message.draw(self.m, rng);
        Ok(Transcript::classical(msg, random_bits(self.m, rng)))
    }
    fn enumerate(&self, key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        check_bits(key, self.m, "key")?;
        let w = 0.5f64.powi(self.m as i32);
        let mut out = Vec::new();
        for (msg, p) in self.message.support(self.m)? {
            for c in all_strings(self.m)? {
                out.push((Transcript::classical(msg.clone(), c), p * w));
            }
        }
        Ok(Some(out))
    }
}

/// The one-time pad over `{0,1}^m`, declared perfectly secure.
pub fn otp_application(m: usize, message: MessageChoice) -> Result<ProtocolPair> {
    if m == 0 {
        return Err(Error::InvalidArgument("message length must be positive".into()));
    }
    if let MessageChoice::Fixed(msg) = &message {
        check_bits(msg, m, "message")?;
    }
    ProtocolPair::new(
        format!("otp{m}"),
        0.0,
        Arc::new(OtpReal {
            m,
            message: message.clone(),
        }),
        Arc::new(OtpIdeal { m, message }),
    )
}

/// Uniform key, no adversary view.
#[derive(Debug, Clone)]
pub struct UniformKeySource {
    pub len: usize,
}

/// I.i.d. key bits equal to one with probability `½ + δ`.
#[derive(Debug, Clone)]
pub struct BiasedKeySource {
    pub len: usize,
    pub delta: f64,
}

impl Protocol for UniformKeySource {
    fn name(&self) -> String {
        format!("uniform-key{}", self.len)
    }
    fn output_len(&self) -> usize {
        self.len
    }
    fn run(&self, _key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        Ok(Transcript::classical(random_bits(self.len, rng), vec![]))
    }
    fn enumerate(&self, _key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        let w = 0.5f64.powi(self.len as i32);
        Ok(Some(
            all_strings(self.len)?
                .map(|k| (Transcript::classical(k, vec![]), w))
                .collect(),
        ))
    }
}

impl Protocol for BiasedKeySource {
    fn name(&self) -> String {
        format!("biased-key{}", self.len)
    }
    fn output_len(&self) -> usize {
        self.len
    }
    fn run(&self, _key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        let p = 0.5 + self.delta;
        let key = (0..self.len).map(|_| rng.random_bool(p) as u8).collect();
        Ok(Transcript::classical(key, vec![]))
    }
    fn enumerate(&self, _key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        let p = 0.5 + self.delta;
        Ok(Some(
            all_strings(self.len)?
                .map(|k| {
                    let ones = k.iter().filter(|&&b| b == 1).count() as i32;
                    let w = p.powi(ones) * (1.0 - p).powi(self.len as i32 - ones);
                    (Transcript::classical(k, vec![]), w)
                })
                .collect(),
        ))
    }
}

/// A uniform key source, declared perfect.
pub fn perfect_key_source(len: usize) -> Result<ProtocolPair> {
    ProtocolPair::new(
        format!("perfect-key{len}"),
        0.0,
        Arc::new(UniformKeySource { len }),
        Arc::new(UniformKeySource { len }),
    )
}

/// A key source with planted bias `δ`; its declared ε is the exact total
/// variation between the biased and the uniform key, found by enumeration.
pub fn toy_key_source(len: usize, delta: f64) -> Result<ProtocolPair> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!("bias {delta} outside [0, 1/2]")));
    }
    let real: Arc<dyn Protocol> = Arc::new(BiasedKeySource { len, delta });
    let ideal: Arc<dyn Protocol> = Arc::new(UniformKeySource { len });
    let probe = ProtocolPair::new("probe", 0.0, real.clone(), ideal.clone())?;
    let eps = exact_total_variation(&probe)?;
    ProtocolPair::new(format!("biased-key{len}"), eps.min(1.0), real, ideal)
}

/// Accepts when the majority of `output ⊕ view` bits are one.
///
/// Against OTP with a received message `M` and ciphertext `C` this reads the
/// majority of the key bits.
pub fn majority_distinguisher() -> DistinguisherDef {
    DistinguisherDef::deterministic("majority", |t| {
        let n = t.output.len().min(t.view.len());
        let ones = t.output.iter().zip(&t.view).filter(|(a, b)| *a ^ *b == 1).count();
        2 * ones > n
    })
}

#[cfg(test)]
mod tests {
    use super::super::{compose, exact_advantage};
    use super::*;

    #[test]
    fn perfect_key_gives_uniform_ciphertexts() {
        for msg in all_strings(3).unwrap() {
            let otp = otp_application(3, MessageChoice::Fixed(msg.clone())).unwrap();
            let pair = compose(&otp, &perfect_key_source(3).unwrap()).unwrap();
            let real = pair.real.enumerate(&[]).unwrap().unwrap();
            assert_eq!(real.len(), 8);
            for (t, p) in &real {
                assert_eq!(t.output, msg);
                assert_eq!(*p, 0.125);
            }
            assert_eq!(exact_total_variation(&pair).unwrap(), 0.0);
        }
    }

    #[test]
    fn biased_single_bit_key() {
        let otp = otp_application(1, MessageChoice::Fixed(vec![0])).unwrap();
        let pair = compose(&otp, &toy_key_source(1, 0.1).unwrap()).unwrap();
        assert!((exact_total_variation(&pair).unwrap() - 0.1).abs() < 1e-15);
        let adv = exact_advantage(&pair, &majority_distinguisher()).unwrap();
        assert!((adv.point - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ideal_ignores_message() {
        let a = OtpIdeal {
            m: 2,
            message: MessageChoice::Fixed(vec![0, 0]),
        };
        let b = OtpIdeal {
            m: 2,
            message: MessageChoice::Fixed(vec![1, 1]),
        };
        let views = |p: &OtpIdeal| {
            p.enumerate(&[0, 1])
                .unwrap()
                .unwrap()
                .into_iter()
                .map(|(t, w)| (t.view, w))
                .collect::<Vec<_>>()
        };
        assert_eq!(views(&a), views(&b));
    }

    #[test]
    fn bad_inputs() {
        assert!(otp_application(2, MessageChoice::Fixed(vec![1])).is_err());
        assert!(otp_application(0, MessageChoice::Uniform).is_err());
        assert!(toy_key_source(2, 0.7).is_err());
        assert!(all_strings(21).is_err());
    }
}

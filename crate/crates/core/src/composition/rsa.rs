//! Textbook RSA at toy sizes and the doubled-bid auction attack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_MODULUS_BITS: u32 = 16;
pub const MAX_MODULUS_BITS: u32 = 64;

/// Public exponents tried in order.
const EXPONENTS: [u64; 5] = [65537, 257, 17, 5, 3];
/// Witnesses making Miller–Rabin deterministic below 3.3·10^24.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

/// A prime with exactly `bits` bits and its top two bits set.
fn random_prime<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> u64 {
    let top = 0b11u64 << (bits - 2);
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    loop {
        let candidate = (rng.random::<u64>() & mask) | top | 1;
        if is_prime(candidate) {
            return candidate;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsaKey {
    pub n: u64,
    pub e: u64,
    pub d: u64,
}

impl RsaKey {
    /// A key whose modulus has exactly `modulus_bits` bits.
    pub fn generate<R: Rng + ?Sized>(modulus_bits: u32, rng: &mut R) -> Result<Self> {
        if !(MIN_MODULUS_BITS..=MAX_MODULUS_BITS).contains(&modulus_bits) {
            return Err(Error::InvalidArgument(format!(
                "modulus size {modulus_bits} outside [{MIN_MODULUS_BITS}, {MAX_MODULUS_BITS}]"
            )));
        }
        let pb = modulus_bits.div_ceil(2);
        let qb = modulus_bits / 2;
        loop {
            let p = random_prime(pb, rng);
            let q = random_prime(qb, rng);
            if p == q {
                continue;
            }
            let phi = (p - 1) as u128 * (q - 1) as u128;
            let n = p as u128 * q as u128;
            // with 64-bit moduli φ can exceed u64 only if n does
            let (Ok(n), Ok(phi)) = (u64::try_from(n), u64::try_from(phi)) else {
                continue;
            };
            for &e in &EXPONENTS {
                if e < phi {
                    if let Some(d) = mod_inverse(e, phi) {
                        return Ok(Self { n, e, d });
                    }
                }
            }
        }
    }

    pub fn encrypt(&self, m: u64) -> u64 {
        pow_mod(m, self.e, self.n)
    }

    pub fn decrypt(&self, c: u64) -> u64 {
        pow_mod(c, self.d, self.n)
    }

    /// `2^e · c mod n`, an encryption of `2m`.
    pub fn double(&self, c: u64) -> u64 {
        mul_mod(pow_mod(2, self.e, self.n), c, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuctionOutcome {
    BobWins,
    /// Both bids decrypt to zero.
    Tie,
    AliceWins,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionTranscript {
    pub key: RsaKey,
    pub honest_bid: u64,
    pub ciphertext: u64,
    pub forged_ciphertext: u64,
    pub decrypted_honest: u64,
    pub decrypted_forged: u64,
    /// `decrypt(encrypt(m)) = m`.
    pub roundtrip_ok: bool,
    /// `decrypt(2^e c) = 2m`.
    pub doubling_ok: bool,
    pub outcome: AuctionOutcome,
}

/// Alice submits `c = m^e`; Bob, without learning `m`, submits `2^e c`.
///
/// Bids must stay below `n/2` so that doubling does not wrap around.
pub fn run_auction(key: &RsaKey, honest_bid: u64) -> Result<AuctionTranscript> {
    if honest_bid >= key.n.div_ceil(2) {
        return Err(Error::InvalidArgument(format!(
            "bid {honest_bid} must be below n/2 = {}",
            key.n as f64 / 2.0
        )));
    }
    let c = key.encrypt(honest_bid);
    let forged = key.double(c);
    let decrypted_honest = key.decrypt(c);
    let decrypted_forged = key.decrypt(forged);
    let outcome = match decrypted_forged.cmp(&decrypted_honest) {
        std::cmp::Ordering::Greater => AuctionOutcome::BobWins,
        std::cmp::Ordering::Equal => AuctionOutcome::Tie,
        std::cmp::Ordering::Less => AuctionOutcome::AliceWins,
    };
    Ok(AuctionTranscript {
        key: *key,
        honest_bid,
        ciphertext: c,
        forged_ciphertext: forged,
        decrypted_honest,
        decrypted_forged,
        roundtrip_ok: decrypted_honest == honest_bid,
        doubling_ok: decrypted_forged == 2 * honest_bid,
        outcome,
    })
}

/// Generates a key from `seed` and runs one auction.
pub fn rsa_malleability_demo(modulus_bits: u32, honest_bid: u64, seed: u64) -> Result<AuctionTranscript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = RsaKey::generate(modulus_bits, &mut rng)?;
    run_auction(&key, honest_bid)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionSweep {
    pub modulus_bits: u32,
    pub auctions: u64,
    pub seed: u64,
    pub bob_wins: u64,
    pub ties: u64,
    pub alice_wins: u64,
    pub identity_failures: u64,
}

/// Fresh key and uniform bid in `[1, n/2)` per auction.
pub fn rsa_auction_sweep(modulus_bits: u32, auctions: u64, seed: u64) -> Result<AuctionSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = AuctionSweep {
        modulus_bits,
        auctions,
        seed,
        bob_wins: 0,
        ties: 0,
        alice_wins: 0,
        identity_failures: 0,
    };
    for _ in 0..auctions {
        let key = RsaKey::generate(modulus_bits, &mut rng)?;
        let bid = rng.random_range(1..key.n.div_ceil(2));
        let t = run_auction(&key, bid)?;
        match t.outcome {
            AuctionOutcome::BobWins => sweep.bob_wins += 1,
            AuctionOutcome::Tie => sweep.ties += 1,
            AuctionOutcome::AliceWins => sweep.alice_wins += 1,
        }
        if !(t.roundtrip_ok && t.doubling_ok) {
            sweep.identity_failures += 1;
        }
    }
    Ok(sweep)
}

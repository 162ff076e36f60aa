//! Real/ideal protocol pairs, distinguishers and the sequential composition bound.
//!
//! A protocol run yields a [`Transcript`]: the honest output, the classical
//! view of the adversary and, for quantum key sources, the adversary's qubit
//! register. Distinguishers see the whole transcript. Composing an
//! application `A` with a key source `P` feeds the source's output into `A`
//! as its key; the composed view concatenates the application view first.

mod bridge;
mod otp;
mod rsa;

pub use bridge::{attack_key_source, otp_parity_distinguisher, AttackKeySource, MixedRegisterSource};
pub use otp::{
    majority_distinguisher, otp_application, perfect_key_source, toy_key_source, BiasedKeySource, MessageChoice,
    OtpIdeal, OtpReal, UniformKeySource, MAX_ENUMERATION_BITS,
};
pub use rsa::{
    is_prime, rsa_auction_sweep, rsa_malleability_demo, run_auction, AuctionOutcome, AuctionSweep, AuctionTranscript,
    RsaKey, MAX_MODULUS_BITS, MIN_MODULUS_BITS,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::PureState;
use crate::stats::{two_sample_half_width, CONFIDENCE};

/// Smallest Monte-Carlo sample per side.
pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    /// What the honest parties output (bits or bytes, protocol-defined).
    pub output: Vec<u8>,
    /// Classical values seen by the adversary.
    pub view: Vec<u8>,
    /// Single-qubit states held by the adversary, in register order.
    pub qubits: Vec<PureState>,
}

impl Transcript {
    pub fn classical(output: Vec<u8>, view: Vec<u8>) -> Self {
        Self {
            output,
            view,
            qubits: Vec::new(),
        }
    }
}

pub trait Protocol: Send + Sync {
    fn name(&self) -> String;

    /// Length of the key consumed; zero for key sources.
    fn key_input_len(&self) -> usize {
        0
    }

    /// Length of the honest output.
    fn output_len(&self) -> usize;

    fn run(&self, key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript>;

    /// Exact transcript distribution for the given key, when finite and small.
    fn enumerate(&self, _key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        Ok(None)
    }
}

/// `A ∘ P`: the source's output is the application's key.
pub struct Composite {
    pub app: Arc<dyn Protocol>,
    pub source: Arc<dyn Protocol>,
}

impl Composite {
    fn join(app: Transcript, source: Transcript) -> Transcript {
        let mut view = app.view;
        view.extend(source.view);
        let mut qubits = source.qubits;
        qubits.extend(app.qubits);
        Transcript {
            output: app.output,
            view,
            qubits,
        }
    }
}

impl Protocol for Composite {
    fn name(&self) -> String {
        format!("{}∘{}", self.app.name(), self.source.name())
    }

    fn key_input_len(&self) -> usize {
        self.source.key_input_len()
    }

    fn output_len(&self) -> usize {
        self.app.output_len()
    }

    fn run(&self, key: &[u8], rng: &mut dyn RngCore) -> Result<Transcript> {
        let s = self.source.run(key, rng)?;
        let a = self.app.run(&s.output, rng)?;
        Ok(Self::join(a, s))
    }

    fn enumerate(&self, key: &[u8]) -> Result<Option<Vec<(Transcript, f64)>>> {
        let Some(sources) = self.source.enumerate(key)? else {
            return Ok(None);
        };
        let mut merged = BTreeMap::new();
        for (s, p) in sources {
            let Some(apps) = self.app.enumerate(&s.output)? else {
                return Ok(None);
            };
            for (a, q) in apps {
                let t = Self::join(a, s.clone());
                if !t.qubits.is_empty() {
                    return Ok(None);
                }
                *merged.entry((t.output, t.view)).or_insert(0.0) += p * q;
            }
        }
        Ok(Some(
            merged
                .into_iter()
                .map(|((o, v), p)| (Transcript::classical(o, v), p))
                .collect(),
        ))
    }
}

#[derive(Clone)]
pub struct ProtocolPair {
    pub name: String,
    pub declared_eps: f64,
    pub real: Arc<dyn Protocol>,
    pub ideal: Arc<dyn Protocol>,
}

impl std::fmt::Debug for ProtocolPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProtocolPair")
            .field("name", &self.name)
            .field("declared_eps", &self.declared_eps)
            .field("real", &self.real.name())
            .field("ideal", &self.ideal.name())
            .finish()
    }
}

impl ProtocolPair {
    pub fn new(name: impl Into<String>, declared_eps: f64, real: Arc<dyn Protocol>, ideal: Arc<dyn Protocol>) -> Result<Self> {
        if !(0.0..=1.0).contains(&declared_eps) {
            return Err(Error::InvalidArgument(format!(
                "declared eps {declared_eps} outside [0, 1]"
            )));
        }
        if real.output_len() != ideal.output_len() || real.key_input_len() != ideal.key_input_len() {
            return Err(Error::InvalidArgument(format!(
                "real and ideal of {} disagree on input/output lengths",
                real.name()
            )));
        }
        Ok(Self {
            name: name.into(),
            declared_eps,
            real,
            ideal,
        })
    }
}

/// `(A^real ∘ P^real, A^ideal ∘ P^ideal)` with `ε = min(1, ε_A + ε_P)`.
pub fn compose(app: &ProtocolPair, source: &ProtocolPair) -> Result<ProtocolPair> {
    if app.real.key_input_len() != source.real.output_len() {
        return Err(Error::InvalidArgument(format!(
            "{} needs a {}-bit key but {} emits {} bits",
            app.name,
            app.real.key_input_len(),
            source.name,
            source.real.output_len()
        )));
    }
    ProtocolPair::new(
        format!("{}∘{}", app.name, source.name),
        (app.declared_eps + source.declared_eps).min(1.0),
        Arc::new(Composite {
            app: app.real.clone(),
            source: source.real.clone(),
        }),
        Arc::new(Composite {
            app: app.ideal.clone(),
            source: source.ideal.clone(),
        }),
    )
}

pub type AcceptFn = Arc<dyn Fn(&Transcript) -> f64 + Send + Sync>;

/// A distinguisher, given by its probability of outputting `B = 1` on a transcript.
///
/// Monte-Carlo estimation draws the bit with the side's random stream; exact
/// mode averages the probability over the enumerated transcript distribution.
#[derive(Clone)]
pub struct DistinguisherDef {
    pub name: String,
    pub accept: AcceptFn,
}

impl std::fmt::Debug for DistinguisherDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistinguisherDef").field("name", &self.name).finish()
    }
}

impl DistinguisherDef {
    pub fn new(name: impl Into<String>, accept: impl Fn(&Transcript) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            accept: Arc::new(accept),
        }
    }

    pub fn deterministic(name: impl Into<String>, decide: impl Fn(&Transcript) -> bool + Send + Sync + 'static) -> Self {
        Self::new(name, move |t| if decide(t) { 1.0 } else { 0.0 })
    }

    fn probability(&self, t: &Transcript) -> f64 {
        (self.accept)(t).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub distinguisher: String,
    /// `Pr[B=1 | real] − Pr[B=1 | ideal]`.
    pub point: f64,
    pub half_width_99: f64,
    /// Samples per side; zero in exact mode.
    pub trials: u64,
    pub seed: Option<u64>,
    pub accept_real: f64,
    pub accept_ideal: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

fn side_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn standalone(p: &dyn Protocol) -> Result<()> {
    if p.key_input_len() != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} consumes a key; compose it with a key source first",
            p.name()
        )));
    }
    Ok(())
}

fn count_accepts(p: &dyn Protocol, d: &DistinguisherDef, trials: u64, rng: &mut ChaCha8Rng) -> Result<u64> {
    standalone(p)?;
    let mut hits = 0;
    for _ in 0..trials {
        let t = p.run(&[], rng)?;
        hits += rng.random_bool(d.probability(&t)) as u64;
    }
    Ok(hits)
}

fn enumerate_standalone(p: &dyn Protocol) -> Result<Vec<(Transcript, f64)>> {
    standalone(p)?;
    p.enumerate(&[])?
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no exact distribution", p.name())))
}

fn exact_acceptance(p: &dyn Protocol, d: &DistinguisherDef) -> Result<f64> {
    Ok(enumerate_standalone(p)?
        .iter()
        .map(|(t, q)| q * d.probability(t))
        .sum())
}

/// Monte-Carlo estimate with `trials` runs per side.
///
/// The real side uses stream 0 and the ideal side stream 1 of a ChaCha8
/// generator seeded with `seed`.
pub fn estimate_advantage(pair: &ProtocolPair, d: &DistinguisherDef, trials: u64, seed: u64) -> Result<AdvantageEstimate> {
    estimate_between(pair.real.as_ref(), pair.ideal.as_ref(), d, trials, seed, 0)
}

fn estimate_between(
    a: &dyn Protocol,
    b: &dyn Protocol,
    d: &DistinguisherDef,
    trials: u64,
    seed: u64,
    stream: u64,
) -> Result<AdvantageEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_TRIALS} trials per side required, got {trials}"
        )));
    }
    let hits_a = count_accepts(a, d, trials, &mut side_rng(seed, stream))?;
    let hits_b = count_accepts(b, d, trials, &mut side_rng(seed, stream + 1))?;
    let (pa, pb) = (hits_a as f64 / trials as f64, hits_b as f64 / trials as f64);
    Ok(AdvantageEstimate {
        distinguisher: d.name.clone(),
        point: pa - pb,
        half_width_99: two_sample_half_width(hits_a, trials, hits_b, trials, CONFIDENCE),
        trials,
        seed: Some(seed),
        accept_real: pa,
        accept_ideal: pb,
        exact: false,
    })
}

/// Exact advantage from the enumerated transcript distributions of both sides.
pub fn exact_advantage(pair: &ProtocolPair, d: &DistinguisherDef) -> Result<AdvantageEstimate> {
    let pa = exact_acceptance(pair.real.as_ref(), d)?;
    let pb = exact_acceptance(pair.ideal.as_ref(), d)?;
    Ok(AdvantageEstimate {
        distinguisher: d.name.clone(),
        point: pa - pb,
        half_width_99: 0.0,
        trials: 0,
        seed: None,
        accept_real: pa,
        accept_ideal: pb,
        exact: true,
    })
}

/// `½ Σ_t |P_real(t) − P_ideal(t)|` over enumerated classical transcripts:
/// the advantage of the best distinguisher.
pub fn exact_total_variation(pair: &ProtocolPair) -> Result<f64> {
    let mut joint: BTreeMap<(Vec<u8>, Vec<u8>), (f64, f64)> = BTreeMap::new();
    for (t, p) in enumerate_standalone(pair.real.as_ref())? {
        joint.entry((t.output, t.view)).or_default().0 += p;
    }
    for (t, p) in enumerate_standalone(pair.ideal.as_ref())? {
        joint.entry((t.output, t.view)).or_default().1 += p;
    }
    Ok(0.5 * joint.values().map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Acceptance-probability gap computed transcript by transcript on the union
/// of both supports, independently of the per-side acceptance sums.
fn exact_gap(a: &dyn Protocol, b: &dyn Protocol, d: &DistinguisherDef) -> Result<f64> {
    let mut joint: BTreeMap<(Vec<u8>, Vec<u8>), (f64, f64)> = BTreeMap::new();
    for (t, p) in enumerate_standalone(a)? {
        joint.entry((t.output, t.view)).or_default().0 += p;
    }
    for (t, p) in enumerate_standalone(b)? {
        joint.entry((t.output, t.view)).or_default().1 += p;
    }
    Ok(joint
        .into_iter()
        .map(|((o, v), (pa, pb))| (pa - pb) * d.probability(&Transcript::classical(o, v)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionEntry {
    pub distinguisher: String,
    /// `A^real∘P^real` against `A^ideal∘P^ideal`.
    pub total: AdvantageEstimate,
    /// `A^real∘P^real` against the hybrid `A^real∘P^ideal`; bounded by the source's ε.
    pub source_gap: AdvantageEstimate,
    /// The hybrid against `A^ideal∘P^ideal`; bounded by the application's ε.
    pub app_gap: AdvantageEstimate,
    /// `total − source_gap − app_gap`.
    pub telescope_residual: f64,
    pub within_bound: bool,
    pub source_within_bound: bool,
    pub app_within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub app: String,
    pub source: String,
    pub eps_app: f64,
    pub eps_source: f64,
    pub declared_eps: f64,
    pub mode: Mode,
    pub entries: Vec<CompositionEntry>,
    pub pass: bool,
}

/// Checks every distinguisher's advantage against `ε_A + ε_P` and splits it
/// through the hybrid `A^real∘P^ideal`.
///
/// In Monte-Carlo mode distinguisher `k` uses streams `3k`, `3k+1`, `3k+2`
/// for the real, hybrid and ideal systems, so the three gaps share samples
/// and telescope exactly. A failed bound is reported in the entry, not raised.
pub fn verify_composition_bound(
    app: &ProtocolPair,
    source: &ProtocolPair,
    distinguishers: &[DistinguisherDef],
    mode: Mode,
) -> Result<CompositionReport> {
    if distinguishers.is_empty() {
        return Err(Error::InvalidArgument("no distinguishers".into()));
    }
    let composed = compose(app, source)?;
    let hybrid = Composite {
        app: app.real.clone(),
        source: source.ideal.clone(),
    };
    let real = composed.real.as_ref();
    let ideal = composed.ideal.as_ref();
    let mut entries = Vec::with_capacity(distinguishers.len());
    for (k, d) in distinguishers.iter().enumerate() {
        let (total, source_gap, app_gap, residual) = match mode {
            Mode::Exact => {
                let pr = exact_acceptance(real, d)?;
                let ph = exact_acceptance(&hybrid, d)?;
                let pi = exact_acceptance(ideal, d)?;
                let total = exact_gap(real, ideal, d)?;
                let g1 = exact_gap(real, &hybrid, d)?;
                let g2 = exact_gap(&hybrid, ideal, d)?;
                let est = |point, a, b| AdvantageEstimate {
                    distinguisher: d.name.clone(),
                    point,
                    half_width_99: 0.0,
                    trials: 0,
                    seed: None,
                    accept_real: a,
                    accept_ideal: b,
                    exact: true,
                };
                (est(total, pr, pi), est(g1, pr, ph), est(g2, ph, pi), total - g1 - g2)
            }
            Mode::MonteCarlo { trials, seed } => {
                if trials < MIN_TRIALS {
                    return Err(Error::InvalidArgument(format!(
                        "at least {MIN_TRIALS} trials per side required, got {trials}"
                    )));
                }
                let base = 3 * k as u64;
                let hr = count_accepts(real, d, trials, &mut side_rng(seed, base))?;
                let hh = count_accepts(&hybrid, d, trials, &mut side_rng(seed, base + 1))?;
                let hi = count_accepts(ideal, d, trials, &mut side_rng(seed, base + 2))?;
                let freq = |h: u64| h as f64 / trials as f64;
                let est = |a: u64, b: u64| AdvantageEstimate {
                    distinguisher: d.name.clone(),
                    point: freq(a) - freq(b),
                    half_width_99: two_sample_half_width(a, trials, b, trials, CONFIDENCE),
                    trials,
                    seed: Some(seed),
                    accept_real: freq(a),
                    accept_ideal: freq(b),
                    exact: false,
                };
                let (t, g1, g2) = (est(hr, hi), est(hr, hh), est(hh, hi));
                let residual = t.point - g1.point - g2.point;
                (t, g1, g2, residual)
            }
        };
        entries.push(CompositionEntry {
            distinguisher: d.name.clone(),
            within_bound: total.point <= composed.declared_eps + total.half_width_99,
            source_within_bound: source_gap.point <= source.declared_eps + source_gap.half_width_99,
            app_within_bound: app_gap.point <= app.declared_eps + app_gap.half_width_99,
            total,
            source_gap,
            app_gap,
            telescope_residual: residual,
        });
    }
    let pass = entries
        .iter()
        .all(|e| e.within_bound && e.source_within_bound && e.app_within_bound);
    Ok(CompositionReport {
        app: app.name.clone(),
        source: source.name.clone(),
        eps_app: app.declared_eps,
        eps_source: source.declared_eps,
        declared_eps: composed.declared_eps,
        mode,
        entries,
        pass,
    })
}

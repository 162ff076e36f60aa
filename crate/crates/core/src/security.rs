//! Security parameters of a key-distribution run: correctness, robustness, a
//! two-sided secrecy bracket, accessible-information lower bounds and the
//! additive combination of the three parameters.
//!
//! The true secrecy parameter is the trace distance to the *closest* ideal
//! state. It is bracketed rather than computed: the canonical ideal (average
//! conditional state, same abort mass) gives an upper bound, and explicit
//! distinguishers give a lower bound by data processing.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_8, PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    cq_measure, cq_measure_adaptive, hermitian_trace_norm, mutual_information, total_variation,
    Complex64, CqState, DensityOperator, JointDistribution, Label, Povm, ProductMeasurement,
    QubitBasis, TOL,
};
use crate::stats::{clopper_pearson_upper, CONFIDENCE};

/// Exact `Pr[S_A ≠ S_B]`.
pub fn correctness_eps(outcomes: &JointDistribution<Label, Label>) -> f64 {
    outcomes.mass_where(|a, b| a != b).clamp(0.0, 1.0)
}

/// Sample-based correctness estimate with a one-sided 99% upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessEstimate {
    pub failures: u64,
    pub trials: u64,
    pub empirical: f64,
    pub upper_99: f64,
}

pub fn correctness_eps_from_samples(samples: &[(Label, Label)]) -> Result<CorrectnessEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let trials = samples.len() as u64;
    let failures = samples.iter().filter(|(a, b)| a != b).count() as u64;
    Ok(CorrectnessEstimate {
        failures,
        trials,
        empirical: failures as f64 / trials as f64,
        upper_99: clopper_pearson_upper(failures, trials, CONFIDENCE),
    })
}

/// `Pr[S_A = ⊥]` under a passive adversary.
///
/// The caller is responsible for having produced `outcomes` with the
/// passive noise model; that cannot be checked here.
pub fn robustness_eps(outcomes: &BTreeMap<Label, f64>) -> Result<f64> {
    let total: f64 = outcomes.values().sum();
    if outcomes.values().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > TOL {
        return Err(Error::InvalidDistribution(format!("label distribution mass {total}")));
    }
    Ok(outcomes.get(&Label::Perp).copied().unwrap_or(0.0) / total)
}

/// Parameters of an ideal state
/// `(1 − p⊥) Σ_s 2^{-ℓ} |s⟩⟨s| ⊗ ρ' + p⊥ |⊥⟩⟨⊥| ⊗ ρ''`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealForm {
    pub p_perp: f64,
    pub rho_prime: DensityOperator,
    pub rho_dblprime: DensityOperator,
}

impl IdealForm {
    pub fn new(p_perp: f64, rho_prime: DensityOperator, rho_dblprime: DensityOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_perp) {
            return Err(Error::InvalidDistribution(format!("p_perp = {p_perp}")));
        }
        if rho_prime.dim() != rho_dblprime.dim() {
            return Err(Error::DimensionMismatch {
                left: rho_prime.dim(),
                right: rho_dblprime.dim(),
            });
        }
        Ok(Self {
            p_perp,
            rho_prime,
            rho_dblprime,
        })
    }

    /// Materializes the ideal cq-state (enumerates all `2^ℓ` keys).
    pub fn to_cq(&self, key_len: usize) -> Result<CqState> {
        let w = (1.0 - self.p_perp) * 0.5f64.powi(key_len as i32);
        let mut branches: Vec<_> = Label::all_keys(key_len)?
            .map(|l| (l, w, self.rho_prime.clone()))
            .collect();
        if self.p_perp > 0.0 {
            branches.push((Label::Perp, self.p_perp, self.rho_dblprime.clone()));
        }
        CqState::new(key_len, branches)
    }
}

/// The ideal state with the same abort mass and the average conditional state of `E`.
pub fn canonical_ideal(cq: &CqState) -> Result<IdealForm> {
    let p_perp = cq.p_perp();
    let keyed: Vec<(f64, &DensityOperator)> = cq
        .branches()
        .filter(|(l, _, _)| !l.is_perp())
        .map(|(_, p, rho)| (p, rho))
        .collect();
    let key_mass: f64 = keyed.iter().map(|(p, _)| p).sum();
    let rho_prime = if key_mass > 0.0 {
        let parts: Vec<_> = keyed.iter().map(|&(p, rho)| (p / key_mass, rho)).collect();
        DensityOperator::mixture(&parts)?
    } else {
        DensityOperator::maximally_mixed(cq.dim())?
    };
    let rho_dblprime = match cq.branch(&Label::Perp) {
        Some((p, rho)) if p > 0.0 => rho.clone(),
        _ => DensityOperator::maximally_mixed(cq.dim())?,
    };
    IdealForm::new(p_perp, rho_prime, rho_dblprime)
}

/// Trace distance between `cq` and the ideal state described by `ideal`,
/// without enumerating keys absent from `cq`.
pub fn distance_to_ideal(cq: &CqState, ideal: &IdealForm) -> Result<f64> {
    if ideal.rho_prime.dim() != cq.dim() {
        return Err(Error::DimensionMismatch {
            left: cq.dim(),
            right: ideal.rho_prime.dim(),
        });
    }
    let key_space = 2f64.powi(cq.key_len() as i32);
    let w = (1.0 - ideal.p_perp) / key_space;
    let mut total = 0.0;
    let mut present_keys = 0.0;
    let mut saw_perp = false;
    for (label, p, rho) in cq.branches() {
        let (q, target) = if label.is_perp() {
            saw_perp = true;
            (ideal.p_perp, &ideal.rho_dblprime)
        } else {
            present_keys += 1.0;
            (w, &ideal.rho_prime)
        };
        total += 0.5 * hermitian_trace_norm(&(rho.matrix().scale(p) - target.matrix().scale(q)));
    }
    total += 0.5 * w * (key_space - present_keys);
    if !saw_perp {
        total += 0.5 * ideal.p_perp;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Upper bound on the secrecy parameter: distance to the canonical ideal.
pub fn secrecy_eps_upper(cq: &CqState) -> Result<f64> {
    distance_to_ideal(cq, &canonical_ideal(cq)?)
}

/// Label-conditioned measurement function.
pub type AdaptivePovm = Arc<dyn Fn(&Label) -> Result<Povm> + Send + Sync>;
/// Label-conditioned product measurement.
pub type AdaptiveProduct = Arc<dyn Fn(&Label) -> ProductMeasurement + Send + Sync>;
/// Accept/reject rule on `(label, outcome)`.
pub type AcceptRule = Arc<dyn Fn(&Label, usize) -> bool + Send + Sync>;

/// How a distinguisher measures the quantum register.
#[derive(Clone)]
pub enum Measurement {
    Fixed(Povm),
    Product(ProductMeasurement),
    /// The distinguisher reads the classical label first and picks a POVM.
    Adaptive(AdaptivePovm),
    AdaptiveProduct(AdaptiveProduct),
}

impl Measurement {
    pub fn joint(&self, cq: &CqState) -> Result<JointDistribution<Label, usize>> {
        match self {
            Measurement::Fixed(m) => cq_measure(cq, m),
            Measurement::Product(pm) => pm.cq_distribution(cq),
            Measurement::Adaptive(f) => cq_measure_adaptive(cq, |l| f(l)),
            Measurement::AdaptiveProduct(f) => {
                let mut entries = Vec::new();
                for (label, p, rho) in cq.branches() {
                    for (z, q) in f(label).distribution(rho)?.into_iter().enumerate() {
                        entries.push(((*label, z), p * q));
                    }
                }
                JointDistribution::from_weights(entries)
            }
        }
    }
}

/// Classical post-processing of `(label, outcome)` into the guess bit.
#[derive(Clone)]
pub enum DecisionRule {
    /// Accept exactly where the real distribution exceeds the ideal one;
    /// the advantage is then the total variation of the two.
    Optimal,
    Custom(AcceptRule),
}

/// A measurement plus decision rule acting on the joint key/`E` system.
#[derive(Clone)]
pub struct Distinguisher {
    pub name: String,
    pub measurement: Measurement,
    pub rule: DecisionRule,
}

impl Distinguisher {
    pub fn new(name: impl Into<String>, measurement: Measurement, rule: DecisionRule) -> Self {
        Self {
            name: name.into(),
            measurement,
            rule,
        }
    }

    /// Acceptance probabilities `(real, ideal)`; `None` for the optimal rule.
    pub fn acceptance(&self, real: &CqState, ideal: &CqState) -> Result<Option<(f64, f64)>> {
        match &self.rule {
            DecisionRule::Optimal => Ok(None),
            DecisionRule::Custom(accept) => {
                let pr = self.measurement.joint(real)?.mass_where(|l, z| accept(l, *z));
                let pi = self.measurement.joint(ideal)?.mass_where(|l, z| accept(l, *z));
                Ok(Some((pr, pi)))
            }
        }
    }

    /// Exact `|Pr[B=1 | real] − Pr[B=1 | ideal]|`.
    pub fn advantage(&self, real: &CqState, ideal: &CqState) -> Result<f64> {
        match self.acceptance(real, ideal)? {
            Some((pr, pi)) => Ok((pr - pi).abs()),
            None => Ok(total_variation(
                &self.measurement.joint(real)?,
                &self.measurement.joint(ideal)?,
            )),
        }
    }
}

impl std::fmt::Debug for Distinguisher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Distinguisher").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyLowerBound {
    pub value: f64,
    pub witness: String,
    pub per_strategy: Vec<(String, f64)>,
}

/// Lower bound on the secrecy parameter: the best exact advantage of the
/// given distinguishers against the canonical ideal.
pub fn secrecy_eps_lower(cq: &CqState, strategies: &[Distinguisher]) -> Result<SecrecyLowerBound> {
    if strategies.is_empty() {
        return Err(Error::InvalidArgument("no distinguishers supplied".into()));
    }
    let ideal = canonical_ideal(cq)?.to_cq(cq.key_len())?;
    let mut per_strategy = Vec::with_capacity(strategies.len());
    for d in strategies {
        per_strategy.push((d.name.clone(), d.advantage(cq, &ideal)?));
    }
    let (witness, value) = per_strategy
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("nonempty");
    Ok(SecrecyLowerBound {
        value,
        witness,
        per_strategy,
    })
}

/// `log2(dim)` when `dim` is a power of two.
pub fn qubit_count(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

/// The single-qubit bases of the per-qubit search family.
pub const FAMILY_BASES: [(&str, QubitBasis); 3] = [
    ("Z", QubitBasis::STANDARD),
    ("X", QubitBasis::DIAGONAL),
    ("B", QubitBasis::BREIDBART),
];

/// Registers up to this many qubits get the full `3^k` per-qubit family.
pub const EXHAUSTIVE_FAMILY_MAX_QUBITS: usize = 5;

/// Cap on the register dimension for the accessible-information search.
pub const ACCESSIBLE_INFO_DIM_CAP: usize = 256;

/// Every product of `Z`/`X`/`B` bases on `k` qubits, named like `"ZXB"`.
pub fn per_qubit_family(k: usize) -> Vec<(String, ProductMeasurement)> {
    let mut out = vec![(String::new(), Vec::new())];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|(name, bases): (String, Vec<QubitBasis>)| {
                FAMILY_BASES.iter().map(move |(tag, b)| {
                    let mut bases = bases.clone();
                    bases.push(*b);
                    (format!("{name}{tag}"), bases)
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|(name, bases)| (name, ProductMeasurement::new(bases)))
        .collect()
}

fn family_member(k: usize, index: usize) -> (String, ProductMeasurement) {
    let mut idx = index;
    let mut name = String::with_capacity(k);
    let mut bases = Vec::with_capacity(k);
    for _ in 0..k {
        let (tag, b) = FAMILY_BASES[idx % 3];
        idx /= 3;
        name.push_str(tag);
        bases.push(b);
    }
    (name, ProductMeasurement::new(bases))
}

/// Best `I(S_A : Z)` over the full per-qubit `Z`/`X`/`B` family.
pub fn per_qubit_family_best(cq: &CqState) -> Result<(f64, String)> {
    let k = qubit_count(cq.dim())
        .ok_or_else(|| Error::InvalidArgument(format!("dim {} is not a qubit register", cq.dim())))?;
    let mut best = (0.0, String::new());
    for (name, pm) in per_qubit_family(k) {
        let i = mutual_information(&pm.cq_distribution(cq)?);
        if i > best.0 || best.1.is_empty() {
            best = (i, name);
        }
    }
    Ok(best)
}

/// Result of the accessible-information search; a lower bound only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibleInfoBound {
    pub bits: f64,
    pub best_strategy: String,
    pub family: Vec<String>,
    pub evaluations: usize,
    pub search_budget: usize,
    pub seed: u64,
}

/// Lower bound on `I_acc(S_A : E)`: the best `I(S_A : Z)` found over
/// (a) per-qubit products of standard/diagonal/Breidbart bases, (b) seeded
/// random rank-one POVMs and (c) local hill-climbing from the best candidate.
///
/// `search_budget` is the number of evaluations spent on (b) and (c).
pub fn accessible_info_lower(cq: &CqState, search_budget: usize, seed: u64) -> Result<AccessibleInfoBound> {
    if search_budget == 0 {
        return Err(Error::InvalidArgument("search budget must be positive".into()));
    }
    if cq.dim() > ACCESSIBLE_INFO_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: cq.dim(),
            cap: ACCESSIBLE_INFO_DIM_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::new();
    let mut evaluations = 0;
    let mut best = (0.0f64, String::from("none"));
    let consider = |i: f64, name: &dyn Fn() -> String, best: &mut (f64, String)| {
        if i > best.0 {
            *best = (i, name());
        }
    };

    let random_budget = search_budget.div_ceil(2);
    let climb_budget = search_budget - random_budget;

    if let Some(k) = qubit_count(cq.dim()).filter(|&k| k > 0) {
        let size = 3usize.pow(k as u32);
        let mut best_bases: Vec<QubitBasis> = vec![QubitBasis::STANDARD; k];
        let mut best_family = -1.0;
        let members: Vec<usize> = if k <= EXHAUSTIVE_FAMILY_MAX_QUBITS {
            family.push(format!("per-qubit Z/X/B products (all {size})"));
            (0..size).collect()
        } else {
            family.push(format!("per-qubit Z/X/B products ({random_budget} sampled of {size})"));
            (0..random_budget).map(|_| rng.random_range(0..size)).collect()
        };
        for idx in members {
            let (name, pm) = family_member(k, idx);
            let i = mutual_information(&pm.cq_distribution(cq)?);
            evaluations += 1;
            if i > best_family {
                best_family = i;
                best_bases = pm.bases.clone();
            }
            consider(i, &|| format!("product {name}"), &mut best);
        }

        family.push(format!("random rank-one POVMs ({random_budget})"));
        for _ in 0..random_budget {
            let povm = random_rank_one_povm(cq.dim(), &mut rng)?;
            let i = mutual_information(&cq_measure(cq, &povm)?);
            evaluations += 1;
            consider(i, &|| "random rank-one POVM".into(), &mut best);
        }

        if climb_budget > 0 {
            family.push(format!("hill-climb over per-qubit bases ({climb_budget} steps)"));
            let (i, bases) = climb_product(cq, best_bases, best_family.max(0.0), climb_budget, &mut rng)?;
            evaluations += climb_budget;
            consider(i, &|| format!("hill-climbed product {}", describe_bases(&bases)), &mut best);
        }
    } else {
        family.push(format!("random rank-one POVMs ({random_budget})"));
        let mut best_vectors = None;
        let mut best_random = -1.0;
        for _ in 0..random_budget {
            let vectors = random_vectors(cq.dim(), 2 * cq.dim(), &mut rng);
            let i = mutual_information(&cq_measure(cq, &Povm::rank_one(&vectors)?)?);
            evaluations += 1;
            if i > best_random {
                best_random = i;
                best_vectors = Some(vectors);
            }
            consider(i, &|| "random rank-one POVM".into(), &mut best);
        }
        if climb_budget > 0 {
            family.push(format!("hill-climb over rank-one vectors ({climb_budget} steps)"));
            let start = best_vectors.expect("random_budget >= 1");
            let i = climb_rank_one(cq, start, best_random, climb_budget, &mut rng)?;
            evaluations += climb_budget;
            consider(i, &|| "hill-climbed rank-one POVM".into(), &mut best);
        }
    }

    Ok(AccessibleInfoBound {
        bits: best.0,
        best_strategy: best.1,
        family,
        evaluations,
        search_budget,
        seed,
    })
}

fn describe_bases(bases: &[QubitBasis]) -> String {
    let parts: Vec<String> = bases
        .iter()
        .map(|b| format!("({:.4},{:.4})", b.theta, b.phi))
        .collect();
    parts.join("")
}

fn random_vectors(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<Complex64>> {
    (0..count)
        .map(|_| {
            DVector::from_fn(dim, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect()
}

/// Rank-one POVM with `2·dim` outcomes from Gaussian vectors.
pub fn random_rank_one_povm(dim: usize, rng: &mut ChaCha8Rng) -> Result<Povm> {
    Povm::rank_one(&random_vectors(dim, 2 * dim, rng))
}

fn climb_product(
    cq: &CqState,
    mut bases: Vec<QubitBasis>,
    mut value: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<QubitBasis>)> {
    let mut sigma = FRAC_PI_8;
    for _ in 0..steps {
        let q = rng.random_range(0..bases.len());
        let mut trial = bases.clone();
        let dt: f64 = rng.sample(StandardNormal);
        let dp: f64 = rng.sample(StandardNormal);
        trial[q].theta = (trial[q].theta + sigma * dt).rem_euclid(PI);
        trial[q].phi = (trial[q].phi + sigma * dp).rem_euclid(TAU);
        let i = mutual_information(&ProductMeasurement::new(trial.clone()).cq_distribution(cq)?);
        if i > value {
            value = i;
            bases = trial;
        } else {
            sigma = (sigma * 0.97).max(1e-3);
        }
    }
    Ok((value, bases))
}

fn climb_rank_one(
    cq: &CqState,
    mut vectors: Vec<DVector<Complex64>>,
    mut value: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut sigma = 0.3;
    for _ in 0..steps {
        let k = rng.random_range(0..vectors.len());
        let mut trial = vectors.clone();
        let norm = trial[k].norm();
        for x in trial[k].iter_mut() {
            *x += Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * (sigma * norm);
        }
        let Ok(povm) = Povm::rank_one(&trial) else {
            continue;
        };
        let i = mutual_information(&cq_measure(cq, &povm)?);
        if i > value {
            value = i;
            vectors = trial;
        } else {
            sigma = (sigma * 0.97).max(1e-3);
        }
    }
    Ok(value)
}

/// Smallest `ε` with `iacc ≤ 2^{-(n+2)} ε²`, i.e. `min(1, √(iacc·2^{n+2}))`.
pub fn ben_or_sufficient_eps(iacc_bits: f64, key_len: u32) -> Result<f64> {
    if !(iacc_bits >= 0.0) || !iacc_bits.is_finite() {
        return Err(Error::InvalidArgument(format!("iacc = {iacc_bits}")));
    }
    Ok((iacc_bits * 2f64.powi(key_len as i32 + 2)).sqrt().min(1.0))
}

/// The accessible-information level `2^{-(n+2)} ε²` that suffices for `ε`-security.
pub fn ben_or_required_iacc(eps: f64, key_len: u32) -> f64 {
    2f64.powi(-(key_len as i32 + 2)) * eps * eps
}

/// Accessible-information ceiling implied by a secrecy distance `δ`: `2ℓδ + 4h(δ)`.
pub fn fano_information_bound(key_len: usize, delta: f64) -> f64 {
    let d = delta.clamp(0.0, 1.0);
    2.0 * key_len as f64 * d + 4.0 * crate::quantum::binary_entropy(d)
}

/// `min(1, ε_c + ε_s + ε_r)`.
pub fn compose_report(eps_c: f64, eps_s: f64, eps_r: f64) -> f64 {
    (eps_c + eps_s + eps_r).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub secrecy_witness: String,
    pub distinguishers: Vec<String>,
    pub iacc_family: Vec<String>,
    pub iacc_best_strategy: String,
    pub search_budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub eps_correct: f64,
    pub eps_robust: f64,
    pub eps_secret_upper: f64,
    pub eps_secret_lower: f64,
    pub iacc_lower_bits: f64,
    pub eps_total: f64,
    pub provenance: Provenance,
}

impl SecurityReport {
    /// Evaluates every metric for `cq`. The combined parameter uses the
    /// secrecy upper bound, so it is itself an upper bound.
    pub fn assess(
        cq: &CqState,
        eps_correct: f64,
        eps_robust: f64,
        search_budget: usize,
        seed: u64,
    ) -> Result<Self> {
        for (name, v) in [("eps_correct", eps_correct), ("eps_robust", eps_robust)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0,1]")));
            }
        }
        let upper = secrecy_eps_upper(cq)?;
        let strategies = default_distinguishers(cq, seed)?;
        let lower = secrecy_eps_lower(cq, &strategies)?;
        let iacc = accessible_info_lower(cq, search_budget, seed)?;
        Ok(Self {
            eps_correct,
            eps_robust,
            eps_secret_upper: upper,
            // exact advantages never exceed the distance; clip rounding noise
            eps_secret_lower: lower.value.min(upper),
            iacc_lower_bits: iacc.bits.min(cq.key_len() as f64),
            eps_total: compose_report(eps_correct, upper, eps_robust),
            provenance: Provenance {
                secrecy_witness: lower.witness,
                distinguishers: strategies.iter().map(|d| d.name.clone()).collect(),
                iacc_family: iacc.family,
                iacc_best_strategy: iacc.best_strategy,
                search_budget,
                seed,
            },
        })
    }
}

/// Number of random POVM distinguishers in [`default_distinguishers`].
pub const DEFAULT_RANDOM_DISTINGUISHERS: usize = 8;

/// A generic distinguisher family, all with the optimal decision rule:
/// computational-basis readout, per-qubit `Z`/`X`/`B` products (small
/// registers), key-conditioned conjugate bases (when the key is at least as
/// long as the register) and seeded random rank-one POVMs.
pub fn default_distinguishers(cq: &CqState, seed: u64) -> Result<Vec<Distinguisher>> {
    let dim = cq.dim();
    let mut out = vec![Distinguisher::new(
        "computational basis",
        Measurement::Fixed(Povm::computational(dim)?),
        DecisionRule::Optimal,
    )];
    if let Some(k) = qubit_count(dim).filter(|&k| k > 0) {
        if k <= EXHAUSTIVE_FAMILY_MAX_QUBITS {
            for (name, pm) in per_qubit_family(k) {
                out.push(Distinguisher::new(
                    format!("product {name}"),
                    Measurement::Product(pm),
                    DecisionRule::Optimal,
                ));
            }
        }
        if cq.key_len() >= k {
            out.push(Distinguisher::new(
                "key-conditioned conjugate bases",
                Measurement::AdaptiveProduct(Arc::new(move |l: &Label| {
                    ProductMeasurement::new(
                        (0..k)
                            .map(|i| QubitBasis::bb84(l.bit(i).unwrap_or(false)))
                            .collect(),
                    )
                })),
                DecisionRule::Optimal,
            ));
        }
    }
    if dim <= ACCESSIBLE_INFO_DIM_CAP {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d157);
        for j in 0..DEFAULT_RANDOM_DISTINGUISHERS {
            out.push(Distinguisher::new(
                format!("random rank-one POVM #{j}"),
                Measurement::Fixed(random_rank_one_povm(dim, &mut rng)?),
                DecisionRule::Optimal,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bb84_encode, cq_trace_distance};
    use approx::assert_abs_diff_eq;

    fn key(s: &str) -> Label {
        s.parse().unwrap()
    }

    #[test]
    fn correctness_examples() {
        let same = JointDistribution::new([((key("0"), key("0")), 0.5), ((key("1"), key("1")), 0.5)]).unwrap();
        assert_eq!(correctness_eps(&same), 0.0);
        let indep = JointDistribution::new(
            ["0", "1"]
                .iter()
                .flat_map(|a| ["0", "1"].iter().map(move |b| ((key(a), key(b)), 0.25))),
        )
        .unwrap();
        assert_abs_diff_eq!(correctness_eps(&indep), 0.5, epsilon = 1e-15);
        let noisy = JointDistribution::new([
            ((key("0"), key("0")), 0.485),
            ((key("1"), key("1")), 0.485),
            ((key("0"), key("1")), 0.03),
        ])
        .unwrap();
        assert_abs_diff_eq!(correctness_eps(&noisy), 0.03, epsilon = 1e-15);
    }

    #[test]
    fn correctness_samples() {
        assert!(correctness_eps_from_samples(&[]).is_err());
        let mut samples = vec![(key("0"), key("0")); 97];
        samples.extend([(key("0"), key("1")); 3]);
        let est = correctness_eps_from_samples(&samples).unwrap();
        assert_eq!(est.failures, 3);
        assert_abs_diff_eq!(est.empirical, 0.03, epsilon = 1e-15);
        assert!(est.upper_99 > 0.03 && est.upper_99 < 0.15);
    }

    #[test]
    fn robustness_examples() {
        let never = BTreeMap::from([(key("0"), 0.5), (key("1"), 0.5)]);
        assert_eq!(robustness_eps(&never).unwrap(), 0.0);
        let always = BTreeMap::from([(Label::Perp, 1.0)]);
        assert_eq!(robustness_eps(&always).unwrap(), 1.0);
        let some = BTreeMap::from([(key("0"), 0.45), (key("1"), 0.45), (Label::Perp, 0.1)]);
        assert_abs_diff_eq!(robustness_eps(&some).unwrap(), 0.1, epsilon = 1e-15);
        assert!(robustness_eps(&BTreeMap::from([(key("0"), 0.4)])).is_err());
    }

    #[test]
    fn perfect_key_is_its_own_ideal() {
        let rho = bb84_encode(true, true).to_density();
        let cq = CqState::perfect_key(2, rho.clone()).unwrap();
        let ideal = canonical_ideal(&cq).unwrap();
        assert!(ideal.rho_prime.max_abs_deviation(&rho).unwrap() < 1e-15);
        assert_eq!(ideal.p_perp, 0.0);
        assert_abs_diff_eq!(secrecy_eps_upper(&cq).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn biased_classical_key() {
        let e = DensityOperator::maximally_mixed(1).unwrap();
        let cq = CqState::new(1, vec![(key("0"), 0.75, e.clone()), (key("1"), 0.25, e)]).unwrap();
        assert_abs_diff_eq!(secrecy_eps_upper(&cq).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn classical_biased_key_average_state() {
        let k0 = DensityOperator::basis(2, 0).unwrap();
        let k1 = DensityOperator::basis(2, 1).unwrap();
        let cq = CqState::new(1, vec![(key("0"), 0.8, k0), (key("1"), 0.2, k1)]).unwrap();
        let ideal = canonical_ideal(&cq).unwrap();
        assert_abs_diff_eq!(ideal.rho_prime.matrix()[(0, 0)].re, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(ideal.rho_prime.matrix()[(1, 1)].re, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn fast_distance_matches_materialized_ideal() {
        let rho = bb84_encode(false, true).to_density();
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let cq = CqState::new(
            2,
            vec![
                (key("00"), 0.5, rho.clone()),
                (key("11"), 0.3, DensityOperator::basis(2, 1).unwrap()),
                (Label::Perp, 0.2, mixed),
            ],
        )
        .unwrap();
        let ideal = canonical_ideal(&cq).unwrap();
        let fast = distance_to_ideal(&cq, &ideal).unwrap();
        let slow = cq_trace_distance(&cq, &ideal.to_cq(2).unwrap()).unwrap();
        assert_abs_diff_eq!(fast, slow, epsilon = 1e-12);
    }

    #[test]
    fn perfect_state_has_zero_advantage_for_every_strategy() {
        let cq = CqState::perfect_key(2, DensityOperator::maximally_mixed(2).unwrap()).unwrap();
        let strategies = default_distinguishers(&cq, 7).unwrap();
        let lb = secrecy_eps_lower(&cq, &strategies).unwrap();
        assert!(lb.value < 1e-12, "{lb:?}");
        assert!(secrecy_eps_lower(&cq, &[]).is_err());
    }

    #[test]
    fn accessible_information_examples() {
        let indep = CqState::perfect_key(1, bb84_encode(false, true).to_density()).unwrap();
        let b = accessible_info_lower(&indep, 16, 1).unwrap();
        assert!(b.bits < 1e-12);

        let copy = CqState::new(
            1,
            vec![
                (key("0"), 0.5, DensityOperator::basis(2, 0).unwrap()),
                (key("1"), 0.5, DensityOperator::basis(2, 1).unwrap()),
            ],
        )
        .unwrap();
        let b = accessible_info_lower(&copy, 16, 1).unwrap();
        assert_abs_diff_eq!(b.bits, 1.0, epsilon = 1e-9);
        assert!(accessible_info_lower(&copy, 0, 1).is_err());
    }

    #[test]
    fn accessible_information_on_non_qubit_register() {
        let cq = CqState::new(
            1,
            vec![
                (key("0"), 0.5, DensityOperator::basis(3, 0).unwrap()),
                (key("1"), 0.5, DensityOperator::basis(3, 2).unwrap()),
            ],
        )
        .unwrap();
        let b = accessible_info_lower(&cq, 40, 3).unwrap();
        assert!(b.bits > 0.0 && b.bits <= 1.0 + 1e-12);
    }

    #[test]
    fn ben_or_examples() {
        assert_eq!(ben_or_sufficient_eps(0.0, 5).unwrap(), 0.0);
        assert_abs_diff_eq!(ben_or_sufficient_eps(2f64.powi(-7), 5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ben_or_sufficient_eps(2f64.powi(-20), 10).unwrap(), 2f64.powi(-4), epsilon = 1e-15);
        assert!(ben_or_sufficient_eps(-1.0, 3).is_err());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_report(0.0, 0.0, 0.0), 0.0);
        assert_abs_diff_eq!(compose_report(0.01, 0.02, 0.1), 0.13, epsilon = 1e-15);
        assert_eq!(compose_report(0.5, 0.5, 0.5), 1.0);
    }

    #[test]
    fn report_serializes() {
        let cq = CqState::perfect_key(1, DensityOperator::maximally_mixed(2).unwrap()).unwrap();
        let r = SecurityReport::assess(&cq, 0.0, 0.0, 8, 11).unwrap();
        assert_eq!(r.eps_total, r.eps_secret_upper);
        let text = serde_json::to_string(&r).unwrap();
        let back: SecurityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }
}

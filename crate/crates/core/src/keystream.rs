//! Continuous key stream from sequentially composed QKD rounds.
//!
//! Round `i` exchanges `n_i = n + c·i` signals, authenticates with the
//! `ℓ_{i−1}` bits stored by the previous round and produces `ℓ + ℓ_i` fresh
//! bits with `ℓ_i = ℓ + cρi/2`. Each round is bounded by
//!
//! ```text
//! ε_i ≤ exp(−γ(ρ n_i − ℓ_i − ℓ)) + exp(−ν ℓ_{i−1} + ln n_i)
//! ```
//!
//! and the stream by `ε_0 + Σ_i ε_i`. The logarithm is natural.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAPER_GAMMA: f64 = 1e-3;
pub const PAPER_RHO: f64 = 1e-2;
pub const PAPER_NU: f64 = 1e-3;
/// Per-round output length used by the planner.
pub const DEFAULT_ELL: u64 = 256;
/// Number of rounds summed explicitly before the tail bound takes over.
pub const DEFAULT_HORIZON: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamParams {
    pub gamma: f64,
    pub rate_rho: f64,
    pub nu: f64,
    pub n0: u64,
    pub c: f64,
    pub ell: u64,
    pub ell0: u64,
    pub eps0: f64,
}

impl StreamParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("rate_rho", self.rate_rho),
            ("nu", self.nu),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("n0", self.n0), ("ell", self.ell), ("ell0", self.ell0)] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.eps0.is_finite() && (0.0..=1.0).contains(&self.eps0)) {
            return Err(Error::InvalidArgument(format!("eps0 must lie in [0, 1], got {}", self.eps0)));
        }
        Ok(())
    }

    /// `ρ·n0 > 2ℓ`: the first term starts below one before any growth.
    pub fn first_term_decays(&self) -> bool {
        self.rate_rho * self.n0 as f64 > 2.0 * self.ell as f64
    }

    pub fn n_at(&self, i: u64, rounding: Rounding) -> f64 {
        self.n0 as f64 + rounding.apply(self.c * i as f64)
    }

    pub fn ell_at(&self, i: u64, rounding: Rounding) -> f64 {
        if i == 0 {
            return self.ell0 as f64;
        }
        self.ell as f64 + rounding.apply(self.c * self.rate_rho * i as f64 / 2.0)
    }
}

/// How the real-valued schedule is turned into signal and key counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// `n_i`, `ℓ_i` are ceilings of the real-valued schedule.
    #[default]
    Ceil,
    /// Exact real values; used to check the geometric structure.
    Real,
}

impl Rounding {
    fn apply(self, x: f64) -> f64 {
        match self {
            Rounding::Ceil => x.ceil(),
            Rounding::Real => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundEps {
    pub value: f64,
    pub first_term: f64,
    pub second_term: f64,
    /// The unclamped sum exceeded one.
    pub clamped: bool,
}

/// The per-round bound, clamped to `[0, 1]`.
pub fn round_eps(p: &StreamParams, ell_prev: f64, n_i: f64, ell_i: f64) -> RoundEps {
    let first_term = (-p.gamma * (p.rate_rho * n_i - ell_i - p.ell as f64)).exp();
    let second_term = (-p.nu * ell_prev + n_i.ln()).exp();
    let raw = first_term + second_term;
    RoundEps {
        value: raw.clamp(0.0, 1.0),
        first_term,
        second_term,
        clamped: raw > 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub i: u64,
    pub n_i: f64,
    pub ell_i: f64,
    pub ell_prev: f64,
    pub first_term: f64,
    pub second_term: f64,
    pub eps_i: f64,
    pub clamped: bool,
}

pub fn schedule(p: &StreamParams, rounds: u64) -> Result<Vec<RoundRecord>> {
    schedule_with(p, rounds, Rounding::Ceil)
}

pub fn schedule_with(p: &StreamParams, rounds: u64, rounding: Rounding) -> Result<Vec<RoundRecord>> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("at least one round required".into()));
    }
    let mut records = Vec::with_capacity(rounds as usize);
    let mut ell_prev = p.ell0 as f64;
    for i in 1..=rounds {
        let n_i = p.n_at(i, rounding);
        let ell_i = p.ell_at(i, rounding);
        let e = round_eps(p, ell_prev, n_i, ell_i);
        records.push(RoundRecord {
            i,
            n_i,
            ell_i,
            ell_prev,
            first_term: e.first_term,
            second_term: e.second_term,
            eps_i: e.value,
            clamped: e.clamped,
        });
        ell_prev = ell_i;
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamBudget {
    pub horizon: u64,
    pub rounding: Rounding,
    pub rounds: Vec<RoundRecord>,
    pub partial_sum: f64,
    /// Bound on `Σ_{i>horizon} ε_i`, capped at one.
    pub tail_bound: f64,
    /// `min(1, ε_0 + partial_sum + tail_bound)`.
    pub eps_total: f64,
    /// A decay rate `γcρ/2` or `νcρ/2` is not positive.
    pub divergent: bool,
    /// Some round's unclamped bound exceeded one.
    pub any_clamped: bool,
}

pub fn total_eps(p: &StreamParams, horizon: u64) -> Result<StreamBudget> {
    total_eps_with(p, horizon, Rounding::Ceil)
}

pub fn total_eps_with(p: &StreamParams, horizon: u64, rounding: Rounding) -> Result<StreamBudget> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let rounds = schedule_with(p, horizon, rounding)?;
    let partial_sum: f64 = rounds.iter().map(|r| r.eps_i).sum();
    let any_clamped = rounds.iter().any(|r| r.clamped);

    let first_rate = p.gamma * p.c * p.rate_rho / 2.0;
    let second_rate = p.nu * p.c * p.rate_rho / 2.0;
    let divergent = !(first_rate.is_finite() && first_rate > 0.0 && second_rate.is_finite() && second_rate > 0.0);

    let tail_bound = if divergent {
        1.0
    } else {
        tail(p, horizon + 1, rounding, first_rate, second_rate).min(1.0)
    };
    let eps_total = if divergent {
        1.0
    } else {
        (p.eps0 + partial_sum + tail_bound).min(1.0)
    };
    Ok(StreamBudget {
        horizon,
        rounding,
        rounds,
        partial_sum,
        tail_bound,
        eps_total,
        divergent,
        any_clamped,
    })
}

/// Upper bound on `Σ_{i≥m} ε_i` for `m ≥ 2`, without clamping.
fn tail(p: &StreamParams, m: u64, rounding: Rounding, first_rate: f64, second_rate: f64) -> f64 {
    let ell = p.ell as f64;
    let mf = m as f64;
    // Ceilings move each first-term exponent by at most γ.
    let slack = match rounding {
        Rounding::Ceil => p.gamma.exp(),
        Rounding::Real => 1.0,
    };
    let first_m = (-p.gamma * (p.rate_rho * (p.n0 as f64 + p.c * mf) - (ell + p.c * p.rate_rho * mf / 2.0) - ell)).exp();
    let first = slack * first_m / -(-first_rate).exp_m1();

    // (a + c·i)·A·q^{i−1} with n_i ≤ a + c·i and ℓ_{i−1} ≥ ℓ + cρ(i−1)/2
    let a = match rounding {
        Rounding::Ceil => p.n0 as f64 + 1.0,
        Rounding::Real => p.n0 as f64,
    };
    let q = (-second_rate).exp();
    let one_minus_q = -(-second_rate).exp_m1();
    let amp = (-p.nu * ell).exp();
    let q_m1 = (-second_rate * (mf - 1.0)).exp();
    let geometric = q_m1 / one_minus_q;
    let weighted = mf * q_m1 / one_minus_q + q_m1 * q / (one_minus_q * one_minus_q);
    let second = amp * (a * geometric + p.c * weighted);

    let t = first + second;
    if t.is_finite() {
        t
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub ell: u64,
    pub horizon: u64,
    /// Largest growth constant tried.
    pub c_max: f64,
    /// Largest initial key tried.
    pub ell0_max: u64,
    /// Number of doublings of `n0` tried above the minimum.
    pub n0_doublings: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            ell: DEFAULT_ELL,
            horizon: DEFAULT_HORIZON,
            c_max: 1e15,
            ell0_max: 1 << 40,
            n0_doublings: 40,
        }
    }
}

/// Smallest-`n0` parameters whose total bound meets `target_eps`.
pub fn plan(target_eps: f64, gamma: f64, rate_rho: f64, nu: f64, eps0: f64) -> Result<StreamParams> {
    plan_with(target_eps, gamma, rate_rho, nu, eps0, &PlannerConfig::default())
}

/// Grid-plus-bisection search over `(n0, c, ℓ_0)` at fixed `ℓ`.
///
/// `n0` starts at the smallest value with `ρ·n0 > 2ℓ` and doubles; for each
/// `n0` the growth constant is the smallest grid value (refined by bisection)
/// whose bound without the initial-key term uses at most half of the budget
/// `target − ε_0`, and `ℓ_0` is then the smallest value meeting the target.
/// Only configurations that were evaluated and found feasible are returned.
pub fn plan_with(
    target_eps: f64,
    gamma: f64,
    rate_rho: f64,
    nu: f64,
    eps0: f64,
    cfg: &PlannerConfig,
) -> Result<StreamParams> {
    if !(target_eps.is_finite() && target_eps > eps0) {
        return Err(Error::InvalidArgument(format!(
            "target {target_eps:e} must exceed eps0 {eps0:e}"
        )));
    }
    let probe = StreamParams {
        gamma,
        rate_rho,
        nu,
        n0: 1,
        c: 1.0,
        ell: cfg.ell,
        ell0: 1,
        eps0,
    };
    probe.validate()?;
    let mut search = Search {
        base: probe,
        target: target_eps,
        cfg: *cfg,
        best: f64::INFINITY,
    };
    let n_min = (2.0 * cfg.ell as f64 / rate_rho).floor() as u64 + 1;

    let mut prev_infeasible = None;
    let mut n0 = n_min;
    let mut found = None;
    for _ in 0..=cfg.n0_doublings {
        if let Some(params) = search.for_n0(n0)? {
            found = Some(params);
            break;
        }
        prev_infeasible = Some(n0);
        n0 = n0.checked_mul(2).ok_or(Error::Unreachable { best_eps: search.best })?;
    }
    let Some(mut best) = found else {
        return Err(Error::Unreachable { best_eps: search.best });
    };
    if let Some(mut lo) = prev_infeasible {
        let mut hi = best.n0;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match search.for_n0(mid)? {
                Some(params) => {
                    hi = mid;
                    best = params;
                }
                None => lo = mid,
            }
        }
    }
    Ok(best)
}

struct Search {
    base: StreamParams,
    target: f64,
    cfg: PlannerConfig,
    best: f64,
}

impl Search {
    fn eval(&mut self, p: &StreamParams) -> Result<f64> {
        let eps = total_eps(p, self.cfg.horizon)?.eps_total;
        self.best = self.best.min(eps);
        Ok(eps)
    }

    fn rest_ok(&mut self, n0: u64, c: f64) -> Result<bool> {
        let p = StreamParams {
            n0,
            c,
            ell0: self.cfg.ell0_max,
            ..self.base
        };
        let budget = self.target - self.base.eps0;
        let rest = self.eval(&p)? - self.base.eps0;
        Ok(rest <= budget / 2.0)
    }

    fn for_n0(&mut self, n0: u64) -> Result<Option<StreamParams>> {
        let mut lo = None;
        let mut c = 1.0;
        let hi = loop {
            if c > self.cfg.c_max {
                return Ok(None);
            }
            if self.rest_ok(n0, c)? {
                break c;
            }
            lo = Some(c);
            c *= 2.0;
        };
        let mut hi = hi;
        if let Some(mut lo) = lo {
            for _ in 0..60 {
                if hi / lo - 1.0 < 1e-6 {
                    break;
                }
                let mid = (lo * hi).sqrt();
                if self.rest_ok(n0, mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let c = hi;

        let base = self.base;
        let with_ell0 = |ell0| StreamParams { n0, c, ell0, ..base };
        let top = with_ell0(self.cfg.ell0_max);
        if self.eval(&top)? > self.target {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0u64, self.cfg.ell0_max);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.eval(&with_ell0(mid))? <= self.target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(with_ell0(hi)))
    }
}

/// Mock key source: every attempt aborts with probability `abort_prob`,
/// otherwise it delivers the `ℓ` stream bits explicitly and `ℓ_i` bits to storage.
///
/// The stored bits are tracked as counts; only the emitted stream is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockKeySource {
    pub abort_prob: f64,
}

impl MockKeySource {
    pub fn new(abort_prob: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&abort_prob) {
            return Err(Error::InvalidArgument(format!(
                "abort probability must lie in [0, 1), got {abort_prob}"
            )));
        }
        Ok(Self { abort_prob })
    }

    /// `None` on abort, otherwise the `ell` bits destined for the stream.
    pub fn attempt<R: Rng + ?Sized>(&self, ell: u64, rng: &mut R) -> Option<Vec<bool>> {
        if rng.random_bool(self.abort_prob) {
            return None;
        }
        Some((0..ell).map(|_| rng.random()).collect())
    }
}

/// How authentication bits are charged when a round aborts and is repeated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortCharging {
    /// Every attempt consumes `ℓ_{i−1}` bits; retries draw on the reserve.
    #[default]
    PerAttempt,
    /// Only the successful attempt consumes key.
    PerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub i: u64,
    pub attempts: u64,
    pub consumed: u64,
    pub stored_after: u64,
    pub emitted_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamLog {
    pub charging: AbortCharging,
    pub reserve_bits: u64,
    pub rounds: Vec<RoundLog>,
    pub total_retries: u64,
    pub bits_produced: u64,
    pub bits_consumed: u64,
    pub bits_stored: u64,
    pub bits_emitted: u64,
    #[serde(with = "bitstring")]
    pub stream: Vec<bool>,
}

/// Expected retries and their standard deviation over `rounds` rounds.
pub fn retry_statistics(abort_prob: f64, rounds: u64) -> (f64, f64) {
    let q = abort_prob;
    let r = rounds as f64;
    (r * q / (1.0 - q), (r * q).sqrt() / (1.0 - q))
}

/// Reserve covering `mean + 8σ + 8` retries at the largest authentication cost.
pub fn suggested_reserve(p: &StreamParams, rounds: u64, abort_prob: f64) -> u64 {
    if abort_prob <= 0.0 || rounds == 0 {
        return 0;
    }
    let (mean, sd) = retry_statistics(abort_prob, rounds);
    let retries = (mean + 8.0 * sd + 8.0).ceil();
    let worst = p.ell_at(rounds - 1, Rounding::Ceil).max(p.ell0 as f64);
    (retries * worst).min(u64::MAX as f64) as u64
}

/// Runs `rounds` rounds against the mock source, checking bit conservation
/// `emitted + stored + consumed = produced + ℓ_0 + reserve` after every round.
pub fn simulate_stream<R: Rng + ?Sized>(
    p: &StreamParams,
    rounds: u64,
    source: &MockKeySource,
    charging: AbortCharging,
    reserve_bits: u64,
    rng: &mut R,
) -> Result<StreamLog> {
    p.validate()?;
    if rounds == 0 {
        return Err(Error::InvalidArgument("at least one round required".into()));
    }
    let overflow = || Error::InvalidArgument("bit counts overflow u64".into());
    let initial = p.ell0.checked_add(reserve_bits).ok_or_else(overflow)?;
    let mut stored = initial;
    let (mut produced, mut consumed, mut emitted) = (0u64, 0u64, 0u64);
    let mut total_retries = 0;
    let mut stream = Vec::new();
    let mut log = Vec::with_capacity(rounds as usize);
    for i in 1..=rounds {
        let auth = p.ell_at(i - 1, Rounding::Ceil) as u64;
        let keep = p.ell_at(i, Rounding::Ceil) as u64;
        let mut attempts = 0;
        let mut round_consumed = 0;
        let bits = loop {
            attempts += 1;
            let charge = charging == AbortCharging::PerAttempt || attempts == 1;
            if charge {
                if stored < auth {
                    return Err(Error::KeyUnderflow {
                        round: i,
                        needed: auth,
                        available: stored,
                    });
                }
                stored -= auth;
                round_consumed += auth;
            }
            if let Some(bits) = source.attempt(p.ell, rng) {
                break bits;
            }
        };
        total_retries += attempts - 1;
        consumed = consumed.checked_add(round_consumed).ok_or_else(overflow)?;
        produced = produced.checked_add(keep + p.ell).ok_or_else(overflow)?;
        stored = stored.checked_add(keep).ok_or_else(overflow)?;
        emitted += bits.len() as u64;
        stream.extend(bits);

        let lhs = emitted as u128 + stored as u128 + consumed as u128;
        let rhs = produced as u128 + initial as u128;
        if lhs != rhs || emitted != i * p.ell {
            return Err(Error::Invariant(format!(
                "bit conservation broken in round {i}: {lhs} != {rhs}"
            )));
        }
        log.push(RoundLog {
            i,
            attempts,
            consumed: round_consumed,
            stored_after: stored,
            emitted_total: emitted,
        });
    }
    Ok(StreamLog {
        charging,
        reserve_bits,
        rounds: log,
        total_retries,
        bits_produced: produced,
        bits_consumed: consumed,
        bits_stored: stored,
        bits_emitted: emitted,
        stream,
    })
}

mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect()
    }
}

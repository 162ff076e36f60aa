//! Classical-quantum states: labeled mixtures of density operators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::{hermitian_trace_norm, DensityOperator, DEFAULT_DIM_CAP, TOL};
use crate::error::{Error, Result};

/// Longest key a [`Label`] can carry.
pub const MAX_KEY_LEN: usize = 63;

/// Text form of the abort symbol.
pub const PERP_TEXT: &str = "PERP";

/// A key value `s ∈ {0,1}^ℓ` or the abort symbol `⊥`.
///
/// Bit 0 is the leftmost character of the bitstring form, i.e. `s_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Key { bits: u64, len: u8 },
    Perp,
}

impl Label {
    /// Builds a key label from an integer whose most significant of `len` bits is `s_1`.
    pub fn key(bits: u64, len: usize) -> Result<Self> {
        if len > MAX_KEY_LEN {
            return Err(Error::InvalidLabel(format!("key length {len} > {MAX_KEY_LEN}")));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidLabel(format!(
                "value {bits} does not fit in {len} bits"
            )));
        }
        Ok(Label::Key {
            bits,
            len: len as u8,
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let v = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::key(v, bits.len())
    }

    /// All `2^len` key labels in increasing order.
    pub fn all_keys(len: usize) -> Result<impl Iterator<Item = Label>> {
        if len > 24 {
            return Err(Error::InvalidArgument(format!(
                "refusing to enumerate 2^{len} keys"
            )));
        }
        Ok((0..1u64 << len).map(move |v| Label::Key {
            bits: v,
            len: len as u8,
        }))
    }

    pub fn is_perp(&self) -> bool {
        matches!(self, Label::Perp)
    }

    /// Key length, `None` for `⊥`.
    pub fn len(&self) -> Option<usize> {
        match self {
            Label::Key { len, .. } => Some(*len as usize),
            Label::Perp => None,
        }
    }

    /// Bit `s_{i+1}` (zero-based from the left). `None` for `⊥` or out of range.
    pub fn bit(&self, i: usize) -> Option<bool> {
        match *self {
            Label::Key { bits, len } if i < len as usize => {
                Some((bits >> (len as usize - 1 - i)) & 1 == 1)
            }
            _ => None,
        }
    }

    pub fn to_bits(&self) -> Option<Vec<bool>> {
        let len = self.len()?;
        Some((0..len).map(|i| self.bit(i).unwrap()).collect())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_bits() {
            Some(bits) => {
                for b in bits {
                    f.write_str(if b { "1" } else { "0" })?;
                }
                Ok(())
            }
            None => f.write_str(PERP_TEXT),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == PERP_TEXT {
            return Ok(Label::Perp);
        }
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidLabel(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Label::from_bits(&bits)
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `ρ_{SE} = Σ_s p_s |s⟩⟨s| ⊗ ρ_E^s` over labels in `{0,1}^ℓ ∪ {⊥}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    key_len: usize,
    dim: usize,
    branches: BTreeMap<Label, (f64, DensityOperator)>,
}

impl CqState {
    /// Validates and builds a cq-state. Probabilities are renormalized to sum
    /// to exactly one after the tolerance check.
    pub fn new(key_len: usize, branches: Vec<(Label, f64, DensityOperator)>) -> Result<Self> {
        if key_len > MAX_KEY_LEN {
            return Err(Error::InvalidArgument(format!("key length {key_len} > {MAX_KEY_LEN}")));
        }
        let Some(dim) = branches.first().map(|(_, _, rho)| rho.dim()) else {
            return Err(Error::InvalidDistribution("cq-state has no branches".into()));
        };
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for (label, p, rho) in branches {
            if let Some(len) = label.len() {
                if len != key_len {
                    return Err(Error::InvalidLabel(format!(
                        "label {label} has length {len}, expected {key_len}"
                    )));
                }
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!("p({label}) = {p}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: rho.dim(),
                });
            }
            total += p;
            if map.insert(label, (p, rho)).is_some() {
                return Err(Error::InvalidLabel(format!("duplicate label {label}")));
            }
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        for (p, _) in map.values_mut() {
            *p /= total;
        }
        Ok(Self {
            key_len,
            dim,
            branches: map,
        })
    }

    /// Uniform key of length `key_len`, independent of `rho`.
    pub fn perfect_key(key_len: usize, rho: DensityOperator) -> Result<Self> {
        let w = 0.5f64.powi(key_len as i32);
        let branches = Label::all_keys(key_len)?
            .map(|l| (l, w, rho.clone()))
            .collect();
        Self::new(key_len, branches)
    }

    pub fn key_len(&self) -> usize {
        self.key_len
    }

    /// Dimension of the quantum register `E`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branch(&self, label: &Label) -> Option<(f64, &DensityOperator)> {
        self.branches.get(label).map(|(p, rho)| (*p, rho))
    }

    pub fn branches(&self) -> impl Iterator<Item = (&Label, f64, &DensityOperator)> {
        self.branches.iter().map(|(l, (p, rho))| (l, *p, rho))
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.branches.keys()
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    /// Probability of `⊥`.
    pub fn p_perp(&self) -> f64 {
        self.branch(&Label::Perp).map_or(0.0, |(p, _)| p)
    }

    /// Marginal distribution of the classical label.
    pub fn label_distribution(&self) -> BTreeMap<Label, f64> {
        self.branches.iter().map(|(l, (p, _))| (*l, *p)).collect()
    }

    /// Block-diagonal dense matrix over `labels` (absent labels give zero blocks).
    pub fn dense_embedding(&self, labels: &[Label]) -> Result<DMatrix<Complex64>> {
        let d = self.dim;
        let total = labels.len() * d;
        if total > DEFAULT_DIM_CAP {
            return Err(Error::DimensionCap {
                dim: total,
                cap: DEFAULT_DIM_CAP,
            });
        }
        let mut m = DMatrix::zeros(total, total);
        for (k, label) in labels.iter().enumerate() {
            if let Some((p, rho)) = self.branch(label) {
                m.view_mut((k * d, k * d), (d, d))
                    .copy_from(&rho.matrix().scale(p));
            }
        }
        Ok(m)
    }
}

/// `Σ_s ½‖p_s ρ_a^s − q_s ρ_b^s‖₁`, treating absent labels as probability zero.
pub fn cq_trace_distance(a: &CqState, b: &CqState) -> Result<f64> {
    if a.key_len != b.key_len {
        return Err(Error::InvalidArgument(format!(
            "key lengths differ: {} vs {}",
            a.key_len, b.key_len
        )));
    }
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    let labels: BTreeSet<&Label> = a.labels().chain(b.labels()).collect();
    let mut total = 0.0;
    for label in labels {
        total += match (a.branch(label), b.branch(label)) {
            (Some((p, ra)), Some((q, rb))) => {
                0.5 * hermitian_trace_norm(&(ra.matrix().scale(p) - rb.matrix().scale(q)))
            }
            // a positive operator's trace norm is its trace
            (Some((p, _)), None) | (None, Some((p, _))) => 0.5 * p,
            (None, None) => unreachable!(),
        };
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn label_text_roundtrip() {
        let l: Label = "0110".parse().unwrap();
        assert_eq!(l.to_string(), "0110");
        assert_eq!(l.bit(0), Some(false));
        assert_eq!(l.bit(1), Some(true));
        assert_eq!(l.bit(4), None);
        assert_eq!("PERP".parse::<Label>().unwrap(), Label::Perp);
        assert_eq!("".parse::<Label>().unwrap().len(), Some(0));
        assert!("01x".parse::<Label>().is_err());
        assert!(Label::key(4, 2).is_err());
    }

    #[test]
    fn rejects_inconsistent_states() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let k = |s: &str| s.parse::<Label>().unwrap();
        assert!(CqState::new(1, vec![(k("0"), 0.5, rho.clone()), (k("1"), 0.4, rho.clone())]).is_err());
        assert!(CqState::new(1, vec![(k("00"), 1.0, rho.clone())]).is_err());
        let other = DensityOperator::maximally_mixed(4).unwrap();
        assert!(CqState::new(1, vec![(k("0"), 0.5, rho.clone()), (k("1"), 0.5, other)]).is_err());
        assert!(CqState::new(1, vec![(k("0"), 0.5, rho.clone()), (k("0"), 0.5, rho.clone())]).is_err());
        assert!(CqState::new(1, vec![(k("0"), 1.5, rho.clone()), (k("1"), -0.5, rho)]).is_err());
    }

    #[test]
    fn identical_states_have_zero_distance() {
        let s = CqState::perfect_key(2, DensityOperator::maximally_mixed(2).unwrap()).unwrap();
        assert_eq!(cq_trace_distance(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn absent_labels_count_as_zero_probability() {
        let rho = DensityOperator::basis(2, 0).unwrap();
        let a = CqState::new(1, vec![("0".parse().unwrap(), 1.0, rho.clone())]).unwrap();
        let b = CqState::new(1, vec![("1".parse().unwrap(), 1.0, rho)]).unwrap();
        assert_abs_diff_eq!(cq_trace_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn classical_case_is_total_variation() {
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let k = |s: &str| s.parse::<Label>().unwrap();
        let a = CqState::new(
            1,
            vec![(k("0"), 0.75, mixed.clone()), (k("1"), 0.25, mixed.clone())],
        )
        .unwrap();
        let b = CqState::new(1, vec![(k("0"), 0.5, mixed.clone()), (k("1"), 0.5, mixed)]).unwrap();
        assert_abs_diff_eq!(cq_trace_distance(&a, &b).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn perp_branch_is_carried() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let s = CqState::new(
            1,
            vec![
                ("0".parse().unwrap(), 0.45, rho.clone()),
                ("1".parse().unwrap(), 0.45, rho.clone()),
                (Label::Perp, 0.1, rho),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(s.p_perp(), 0.1, epsilon = 1e-15);
        assert_eq!(s.num_branches(), 3);
    }
}

//! JSON forms of density operators and cq-states.
//!
//! ```text
//! DensityOperator = { "dim": d, "entries": [[re, im], ...] }   // d*d pairs, row-major
//! CqState = { "key_len": l, "dim": d,
//!             "branches": [ { "label": "0101" | "PERP", "p": 0.25, "rho": DensityOperator } ] }
//! ```
//!
//! Deserialization runs the full validation of the target type.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cq::{CqState, Label};
use super::state::DensityOperator;
use crate::error::Error;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let m = self.matrix();
        let dim = self.dim();
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
            .collect();
        DensityRepr { dim, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = DensityRepr::deserialize(deserializer)?;
        density_from_repr(repr).map_err(serde::de::Error::custom)
    }
}

fn density_from_repr(repr: DensityRepr) -> Result<DensityOperator, Error> {
    if repr.entries.len() != repr.dim * repr.dim {
        return Err(Error::InvalidArgument(format!(
            "expected {} entries for dim {}, found {}",
            repr.dim * repr.dim,
            repr.dim,
            repr.entries.len()
        )));
    }
    let m = DMatrix::from_row_iterator(
        repr.dim,
        repr.dim,
        repr.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
    );
    DensityOperator::new(m)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchRepr {
    label: Label,
    p: f64,
    rho: DensityOperator,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CqRepr {
    key_len: usize,
    dim: usize,
    branches: Vec<BranchRepr>,
}

impl Serialize for CqState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CqRepr {
            key_len: self.key_len(),
            dim: self.dim(),
            branches: self
                .branches()
                .map(|(label, p, rho)| BranchRepr {
                    label: *label,
                    p,
                    rho: rho.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CqState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = CqRepr::deserialize(deserializer)?;
        if let Some(b) = repr.branches.iter().find(|b| b.rho.dim() != repr.dim) {
            return Err(serde::de::Error::custom(format!(
                "branch {} has dim {}, header says {}",
                b.label,
                b.rho.dim(),
                repr.dim
            )));
        }
        CqState::new(
            repr.key_len,
            repr.branches.into_iter().map(|b| (b.label, b.p, b.rho)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::bb84_encode;

    #[test]
    fn density_roundtrip() {
        let rho = bb84_encode(true, true).to_density();
        let s = serde_json::to_string(&rho).unwrap();
        let back: DensityOperator = serde_json::from_str(&s).unwrap();
        assert!(rho.max_abs_deviation(&back).unwrap() < 1e-15);
    }

    #[test]
    fn cq_roundtrip_with_perp() {
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let s = CqState::new(
            1,
            vec![
                ("0".parse().unwrap(), 0.4, mixed.clone()),
                ("1".parse().unwrap(), 0.4, bb84_encode(false, true).to_density()),
                (Label::Perp, 0.2, mixed),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"PERP\""));
        let back: CqState = serde_json::from_str(&text).unwrap();
        assert_eq!(back.num_branches(), 3);
        assert!(crate::quantum::cq_trace_distance(&s, &back).unwrap() < 1e-12);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let short = r#"{"dim":2,"entries":[[1,0],[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<DensityOperator>(short).is_err());
        let bad_trace = r#"{"dim":1,"entries":[[2,0]]}"#;
        assert!(serde_json::from_str::<DensityOperator>(bad_trace).is_err());
        let extra = r#"{"dim":1,"entries":[[1,0]],"x":1}"#;
        assert!(serde_json::from_str::<DensityOperator>(extra).is_err());
        let bad_label = r#"{"key_len":1,"dim":1,"branches":[{"label":"2","p":1,"rho":{"dim":1,"entries":[[1,0]]}}]}"#;
        assert!(serde_json::from_str::<CqState>(bad_label).is_err());
        let dim_lie = r#"{"key_len":1,"dim":2,"branches":[{"label":"0","p":1,"rho":{"dim":1,"entries":[[1,0]]}}]}"#;
        assert!(serde_json::from_str::<CqState>(dim_lie).is_err());
    }
}

//! Classical distributions and Shannon information quantities (bits).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`JointDistribution`].
pub const DIST_TOL: f64 = 1e-12;

/// Tolerance accepted by [`JointDistribution::from_weights`] before renormalizing.
const WEIGHT_TOL: f64 = 1e-9;

/// A joint distribution `P_{XZ}` over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<X: Ord, Z: Ord> {
    table: BTreeMap<(X, Z), f64>,
}

impl<X: Ord + Clone, Z: Ord + Clone> JointDistribution<X, Z> {
    /// Strict constructor: entries must be nonnegative and sum to one within [`DIST_TOL`].
    pub fn new(entries: impl IntoIterator<Item = ((X, Z), f64)>) -> Result<Self> {
        let table = accumulate(entries)?;
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidDistribution(format!("mass {total}")));
        }
        Ok(Self { table })
    }

    /// Accepts weights summing to one within 1e-9 (e.g. computed from
    /// validated quantum states) and renormalizes them.
    pub fn from_weights(entries: impl IntoIterator<Item = ((X, Z), f64)>) -> Result<Self> {
        let mut table = accumulate(entries)?;
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidDistribution(format!("mass {total}")));
        }
        table.values_mut().for_each(|p| *p /= total);
        Ok(Self { table })
    }

    pub fn prob(&self, x: &X, z: &Z) -> f64 {
        self.table.get(&(x.clone(), z.clone())).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&X, &Z, f64)> {
        self.table.iter().map(|((x, z), p)| (x, z, *p))
    }

    pub fn marginal_x(&self) -> BTreeMap<X, f64> {
        let mut m = BTreeMap::new();
        for ((x, _), p) in &self.table {
            *m.entry(x.clone()).or_insert(0.0) += p;
        }
        m
    }

    pub fn marginal_z(&self) -> BTreeMap<Z, f64> {
        let mut m = BTreeMap::new();
        for ((_, z), p) in &self.table {
            *m.entry(z.clone()).or_insert(0.0) += p;
        }
        m
    }

    /// Applies `f` to the first coordinate and merges colliding entries.
    pub fn map_x<Y: Ord + Clone>(&self, f: impl Fn(&X) -> Y) -> JointDistribution<Y, Z> {
        let mut table = BTreeMap::new();
        for ((x, z), p) in &self.table {
            *table.entry((f(x), z.clone())).or_insert(0.0) += p;
        }
        JointDistribution { table }
    }

    /// `Σ_{x,z} P(x,z)·[pred(x,z)]`.
    pub fn mass_where(&self, pred: impl Fn(&X, &Z) -> bool) -> f64 {
        self.table
            .iter()
            .filter(|((x, z), _)| pred(x, z))
            .map(|(_, p)| p)
            .sum()
    }

    /// Product distribution of the two marginals.
    pub fn product_of_marginals(&self) -> Self {
        let mx = self.marginal_x();
        let mz = self.marginal_z();
        let table = mx
            .iter()
            .flat_map(|(x, px)| mz.iter().map(move |(z, pz)| ((x.clone(), z.clone()), px * pz)))
            .collect();
        Self { table }
    }
}

fn accumulate<X: Ord, Z: Ord>(
    entries: impl IntoIterator<Item = ((X, Z), f64)>,
) -> Result<BTreeMap<(X, Z), f64>> {
    let mut table = BTreeMap::new();
    for (k, p) in entries {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("probability {p}")));
        }
        *table.entry(k).or_insert(0.0) += p;
    }
    Ok(table)
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn entropy<'a>(probs: impl IntoIterator<Item = &'a f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// `I(X:Z) = H(X) + H(Z) − H(X,Z)`, clipped at zero against rounding.
pub fn mutual_information<X: Ord + Clone, Z: Ord + Clone>(j: &JointDistribution<X, Z>) -> f64 {
    let hx = entropy(j.marginal_x().values());
    let hz = entropy(j.marginal_z().values());
    let hxz = entropy(j.table.values());
    (hx + hz - hxz).max(0.0)
}

/// `½ Σ |p − q|` over the union of supports.
pub fn total_variation<X: Ord + Clone, Z: Ord + Clone>(
    p: &JointDistribution<X, Z>,
    q: &JointDistribution<X, Z>,
) -> f64 {
    let keys: BTreeSet<&(X, Z)> = p.table.keys().chain(q.table.keys()).collect();
    let sum: f64 = keys
        .into_iter()
        .map(|k| {
            let a = p.table.get(k).copied().unwrap_or(0.0);
            let b = q.table.get(k).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

#[derive(Serialize, Deserialize)]
struct Entry<X, Z> {
    x: X,
    z: Z,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct Repr<X, Z> {
    entries: Vec<Entry<X, Z>>,
}

impl<X, Z> Serialize for JointDistribution<X, Z>
where
    X: Ord + Clone + Serialize,
    Z: Ord + Clone + Serialize,
{
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            entries: self
                .table
                .iter()
                .map(|((x, z), p)| Entry {
                    x: x.clone(),
                    z: z.clone(),
                    p: *p,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, X, Z> Deserialize<'de> for JointDistribution<X, Z>
where
    X: Ord + Clone + Deserialize<'de>,
    Z: Ord + Clone + Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Repr::<X, Z>::deserialize(deserializer)?;
        Self::new(repr.entries.into_iter().map(|e| ((e.x, e.z), e.p)))
            .map_err(serde::de::Error::custom)
    }
}

//! Reference computations for the integration tests, written without the
//! library's own linear algebra paths.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use qkdlab::quantum::{CqState, DensityOperator, Label};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

/// Eigenvalues of a Hermitian matrix through its real symmetric embedding
/// `[[A, -B], [B, A]]`, which lists every eigenvalue twice.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

pub fn trace_norm(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

pub fn dense_trace_distance(a: &CMat, b: &CMat) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// `Σ_x p_x |x⟩⟨x| ⊗ ρ_x` over `labels`, absent labels contributing zero blocks.
pub fn block_embedding(cq: &CqState, labels: &[Label]) -> CMat {
    let d = cq.dim();
    let mut out = CMat::zeros(labels.len() * d, labels.len() * d);
    for (k, l) in labels.iter().enumerate() {
        if let Some((p, rho)) = cq.branch(l) {
            out.view_mut((k * d, k * d), (d, d))
                .copy_from(&rho.matrix().scale(p));
        }
    }
    out
}

pub fn label_union(a: &CqState, b: &CqState) -> Vec<Label> {
    let mut labels: Vec<Label> = a.labels().chain(b.labels()).copied().collect();
    labels.sort();
    labels.dedup();
    labels
}

/// A random mixed state of rank `rank`: `GG†/tr` with Gaussian `G`.
pub fn random_density(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
    let g = CMat::from_fn(dim, rank, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.unscale(tr)).expect("Gram matrices are states")
}

pub fn random_probabilities(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A random cq-state over all keys of `key_len` bits, optionally with an abort branch.
pub fn random_cq(key_len: usize, dim: usize, with_perp: bool, rng: &mut ChaCha8Rng) -> CqState {
    let mut labels: Vec<Label> = Label::all_keys(key_len).unwrap().collect();
    if with_perp {
        labels.push(Label::Perp);
    }
    let probs = random_probabilities(labels.len(), rng);
    let branches = labels
        .into_iter()
        .zip(probs)
        .map(|(l, p)| {
            let rank = rng.random_range(1..=dim);
            (l, p, random_density(dim, rank, rng))
        })
        .collect();
    CqState::new(key_len, branches).unwrap()
}

/// `I(X:Z)` in bits from a table of joint probabilities.
pub fn mutual_information_bits<X: Ord + Clone, Z: Ord + Clone>(joint: &[((X, Z), f64)]) -> f64 {
    let mut px: BTreeMap<X, f64> = BTreeMap::new();
    let mut pz: BTreeMap<Z, f64> = BTreeMap::new();
    for ((x, z), p) in joint {
        *px.entry(x.clone()).or_default() += p;
        *pz.entry(z.clone()).or_default() += p;
    }
    joint
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|((x, z), p)| p * (p / (px[x] * pz[z])).log2())
        .sum()
}

/// Amplitudes of `|r⟩` in the standard (`s = false`) or diagonal (`s = true`) basis.
pub fn conjugate_qubit(r: bool, s: bool) -> [f64; 2] {
    let h = 0.5f64.sqrt();
    match (s, r) {
        (false, false) => [1.0, 0.0],
        (false, true) => [0.0, 1.0],
        (true, false) => [h, h],
        (true, true) => [h, -h],
    }
}

/// Kronecker product of single-qubit real amplitudes, first factor most significant.
pub fn product_amplitudes(factors: &[[f64; 2]]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| {
        acc.iter().flat_map(|a| [a * f[0], a * f[1]]).collect()
    })
}

/// `ρ^s` of the parity construction, built directly from its definition.
/// `s` has `n + 1` bits; the last one is the parity of `r`.
pub fn parity_branch(s: &[bool]) -> CMat {
    let n = s.len() - 1;
    let dim = 1 << n;
    let mut rho = CMat::zeros(dim, dim);
    let mut count = 0;
    for rbits in 0..1u32 << n {
        let r: Vec<bool> = (0..n).map(|i| rbits >> i & 1 == 1).collect();
        if r.iter().fold(false, |a, &b| a ^ b) != s[n] {
            continue;
        }
        count += 1;
        let factors: Vec<[f64; 2]> = (0..n).map(|i| conjugate_qubit(r[i], s[i])).collect();
        let v = product_amplitudes(&factors);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += Complex64::new(v[i] * v[j], 0.0);
            }
        }
    }
    rho.unscale(count as f64)
}

/// Bits of `value` as `len` booleans, most significant first.
pub fn bits_msb(value: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| value >> (len - 1 - i) & 1 == 1).collect()
}

pub fn modpow(base: u64, exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let (mut b, mut e, mut acc) = (base as u128 % m, exp, 1u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}

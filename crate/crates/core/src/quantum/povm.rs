//! POVMs and measurement of density operators and cq-states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::cq::{CqState, Label};
use super::info::JointDistribution;
use super::state::{hermitian_deviation, DensityOperator, PureState, TOL};
use crate::error::{Error, Result};

/// A finite POVM; outcome `z` is the index of its effect.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<DMatrix<Complex64>>,
    /// Columns `w_z` with `E_z = |w_z⟩⟨w_z|`, when every effect is rank one.
    rank_one: Option<DMatrix<Complex64>>,
}

impl Povm {
    /// Validates positivity of every effect and completeness `Σ E_z = I`.
    pub fn new(effects: Vec<DMatrix<Complex64>>) -> Result<Self> {
        Self::validated(effects, true)
    }

    fn validated(effects: Vec<DMatrix<Complex64>>, check_positive: bool) -> Result<Self> {
        let Some(dim) = effects.first().map(|e| e.nrows()) else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for (z, e) in effects.iter().enumerate() {
            if !check_positive {
                sum += e;
                continue;
            }
            if e.shape() != (dim, dim) {
                return Err(Error::InvalidPovm(format!(
                    "effect {z} has shape {:?}, expected {dim}x{dim}",
                    e.shape()
                )));
            }
            let dev = hermitian_deviation(e);
            if dev > TOL {
                return Err(Error::InvalidPovm(format!("effect {z} not Hermitian ({dev:e})")));
            }
            let min = e.symmetric_eigenvalues().min();
            if min < -TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {z} has eigenvalue {min:e}"
                )));
            }
            sum += e;
        }
        let id = DMatrix::<Complex64>::identity(dim, dim);
        let dev = sum
            .iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if dev > TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:e}"
            )));
        }
        Ok(Self {
            dim,
            effects,
            rank_one: None,
        })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Result<Self> {
        let basis = (0..dim)
            .map(|i| PureState::basis(dim, i))
            .collect::<Result<Vec<_>>>()?;
        Self::from_basis(&basis)
    }

    /// Projective measurement onto an orthonormal basis.
    pub fn from_basis(vectors: &[PureState]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| v.to_density().matrix().clone()).collect())
    }

    /// Rank-one POVM `{S^{-1/2}|v⟩⟨v|S^{-1/2}}` with `S = Σ|v⟩⟨v|`.
    ///
    /// The vectors must span the space.
    pub fn rank_one(vectors: &[DVector<Complex64>]) -> Result<Self> {
        let Some(dim) = vectors.first().map(|v| v.len()) else {
            return Err(Error::InvalidPovm("no vectors".into()));
        };
        let mut frame = DMatrix::<Complex64>::zeros(dim, dim);
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: v.len(),
                });
            }
            frame += v * v.adjoint();
        }
        let eig = nalgebra::SymmetricEigen::new(frame);
        let max = eig.eigenvalues.max();
        if eig.eigenvalues.min() <= max * 1e-10 {
            return Err(Error::InvalidPovm("vectors do not span the space".into()));
        }
        let inv_sqrt = eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0));
        let root = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.adjoint();
        let columns: Vec<DVector<Complex64>> = vectors.iter().map(|v| &root * v).collect();
        let effects = columns.iter().map(|w| w * w.adjoint()).collect();
        // |w⟩⟨w| is positive by construction; only completeness needs checking
        let mut povm = Self::validated(effects, false)?;
        povm.rank_one = Some(DMatrix::from_columns(&columns));
        Ok(povm)
    }

    /// Tensor product; outcome index is mixed-radix with the first factor most significant.
    pub fn product(factors: &[Povm]) -> Result<Self> {
        let Some((first, rest)) = factors.split_first() else {
            return Err(Error::InvalidPovm("empty product".into()));
        };
        let mut effects = first.effects.clone();
        for f in rest {
            if effects[0].nrows() * f.dim > super::state::DEFAULT_DIM_CAP {
                return Err(Error::DimensionCap {
                    dim: effects[0].nrows() * f.dim,
                    cap: super::state::DEFAULT_DIM_CAP,
                });
            }
            effects = effects
                .iter()
                .flat_map(|a| f.effects.iter().map(move |b| a.kronecker(b)))
                .collect();
        }
        Self::new(effects)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[DMatrix<Complex64>] {
        &self.effects
    }
}

/// `Pr[z] = tr(E_z ρ)` for every outcome.
pub fn measure(rho: &DensityOperator, m: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != m.dim {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: m.dim,
        });
    }
    if let Some(w) = &m.rank_one {
        // Pr[z] = ⟨w_z|ρ|w_z⟩, with the product done in real arithmetic
        // (the f64 kernels are much faster than the generic complex ones)
        let (rr, ri) = split(rho.matrix());
        let (wr, wi) = split(w);
        let xr = &rr * &wr - &ri * &wi;
        let xi = &rr * &wi + &ri * &wr;
        return Ok((0..w.ncols())
            .map(|z| (wr.column(z).dot(&xr.column(z)) + wi.column(z).dot(&xi.column(z))).max(0.0))
            .collect());
    }
    Ok(m.effects.iter().map(|e| trace_product(e, rho.matrix())).collect())
}

/// `Pr[s, z] = p_s tr(E_z ρ^s)`.
pub fn cq_measure(cq: &CqState, m: &Povm) -> Result<JointDistribution<Label, usize>> {
    if let Some(w) = &m.rank_one {
        return cq_measure_rank_one(cq, w);
    }
    let mut entries = Vec::new();
    for (label, p, rho) in cq.branches() {
        for (z, q) in measure(rho, m)?.into_iter().enumerate() {
            entries.push(((*label, z), p * q));
        }
    }
    JointDistribution::from_weights(entries)
}

/// All branches stacked into one tall real product `[ρ_1; …; ρ_S]·W`.
fn cq_measure_rank_one(cq: &CqState, w: &DMatrix<Complex64>) -> Result<JointDistribution<Label, usize>> {
    let dim = cq.dim();
    if w.nrows() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: w.nrows(),
        });
    }
    let branches: Vec<_> = cq.branches().collect();
    let rows = branches.len() * dim;
    let mut rr = DMatrix::<f64>::zeros(rows, dim);
    let mut ri = DMatrix::<f64>::zeros(rows, dim);
    for (b, (_, _, rho)) in branches.iter().enumerate() {
        let m = rho.matrix();
        for j in 0..dim {
            for i in 0..dim {
                rr[(b * dim + i, j)] = m[(i, j)].re;
                ri[(b * dim + i, j)] = m[(i, j)].im;
            }
        }
    }
    let (wr, wi) = split(w);
    let xr = &rr * &wr - &ri * &wi;
    let xi = &rr * &wi + &ri * &wr;
    let mut entries = Vec::with_capacity(branches.len() * w.ncols());
    for (b, (label, p, _)) in branches.iter().enumerate() {
        for z in 0..w.ncols() {
            let mut q = 0.0;
            for i in 0..dim {
                q += wr[(i, z)] * xr[(b * dim + i, z)] + wi[(i, z)] * xi[(b * dim + i, z)];
            }
            entries.push(((**label, z), p * q.max(0.0)));
        }
    }
    JointDistribution::from_weights(entries)
}

/// Like [`cq_measure`], but the POVM may depend on the classical label.
pub fn cq_measure_adaptive<F>(cq: &CqState, mut povm_for: F) -> Result<JointDistribution<Label, usize>>
where
    F: FnMut(&Label) -> Result<Povm>,
{
    let mut entries = Vec::new();
    for (label, p, rho) in cq.branches() {
        let m = povm_for(label)?;
        for (z, q) in measure(rho, &m)?.into_iter().enumerate() {
            entries.push(((*label, z), p * q));
        }
    }
    JointDistribution::from_weights(entries)
}

fn split(m: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|x| x.re), m.map(|x| x.im))
}

/// `Re tr(A B)` for Hermitian `A`, `B`, clipped at zero.
fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc.max(0.0)
}

/// A single-qubit orthonormal basis `{cos θ|0⟩ + e^{iφ} sin θ|1⟩, −sin θ|0⟩ + e^{iφ} cos θ|1⟩}`.
///
/// `θ = 0` is the standard basis, `θ = π/4` the diagonal basis and `θ = π/8`
/// the Breidbart basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBasis {
    pub theta: f64,
    pub phi: f64,
}

impl QubitBasis {
    pub const STANDARD: QubitBasis = QubitBasis { theta: 0.0, phi: 0.0 };
    pub const DIAGONAL: QubitBasis = QubitBasis {
        theta: std::f64::consts::FRAC_PI_4,
        phi: 0.0,
    };
    pub const BREIDBART: QubitBasis = QubitBasis {
        theta: std::f64::consts::FRAC_PI_8,
        phi: 0.0,
    };

    pub fn real(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }

    /// The basis in which [`bb84_encode`](super::state::bb84_encode) with basis bit `s` is diagonal.
    pub fn bb84(s: bool) -> Self {
        if s {
            Self::DIAGONAL
        } else {
            Self::STANDARD
        }
    }

    /// Columns are the two basis vectors.
    pub fn unitary(&self) -> [[Complex64; 2]; 2] {
        // exact amplitudes for the diagonal basis so that conjugate-basis
        // readouts give probabilities of exactly 0 and 1
        let (s, c) = if self.theta == std::f64::consts::FRAC_PI_4 {
            (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
        } else {
            self.theta.sin_cos()
        };
        let ph = Complex64::from_polar(1.0, self.phi);
        [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [ph * s, ph * c],
        ]
    }

    pub fn vectors(&self) -> [PureState; 2] {
        let u = self.unitary();
        [
            PureState::new(vec![u[0][0], u[1][0]]).expect("unit column"),
            PureState::new(vec![u[0][1], u[1][1]]).expect("unit column"),
        ]
    }

    pub fn povm(&self) -> Povm {
        Povm::from_basis(&self.vectors()).expect("orthonormal qubit basis")
    }
}

/// Product of single-qubit projective measurements on a register of qubits.
///
/// Evaluated without materializing the `2^k` effects: the state is rotated
/// qubit by qubit and the diagonal read off.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasurement {
    pub bases: Vec<QubitBasis>,
}

impl ProductMeasurement {
    pub fn new(bases: Vec<QubitBasis>) -> Self {
        Self { bases }
    }

    pub fn num_qubits(&self) -> usize {
        self.bases.len()
    }

    /// Outcome distribution; outcome bits are read with qubit 0 most significant.
    pub fn distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        let k = self.bases.len();
        let dim = 1usize << k;
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: dim,
            });
        }
        let mut m = rho.matrix().clone();
        for (q, basis) in self.bases.iter().enumerate() {
            let mask = 1usize << (k - 1 - q);
            let u = basis.unitary();
            // rows: M <- U† M
            for col in 0..dim {
                for a in (0..dim).filter(|a| a & mask == 0) {
                    let x0 = m[(a, col)];
                    let x1 = m[(a | mask, col)];
                    m[(a, col)] = u[0][0].conj() * x0 + u[1][0].conj() * x1;
                    m[(a | mask, col)] = u[0][1].conj() * x0 + u[1][1].conj() * x1;
                }
            }
            // columns: M <- M U
            for row in 0..dim {
                for c in (0..dim).filter(|c| c & mask == 0) {
                    let x0 = m[(row, c)];
                    let x1 = m[(row, c | mask)];
                    m[(row, c)] = x0 * u[0][0] + x1 * u[1][0];
                    m[(row, c | mask)] = x0 * u[0][1] + x1 * u[1][1];
                }
            }
        }
        Ok((0..dim).map(|i| m[(i, i)].re.max(0.0)).collect())
    }

    pub fn cq_distribution(&self, cq: &CqState) -> Result<JointDistribution<Label, usize>> {
        let mut entries = Vec::new();
        for (label, p, rho) in cq.branches() {
            for (z, q) in self.distribution(rho)?.into_iter().enumerate() {
                entries.push(((*label, z), p * q));
            }
        }
        JointDistribution::from_weights(entries)
    }

    /// The equivalent dense POVM.
    pub fn to_povm(&self) -> Result<Povm> {
        let factors: Vec<Povm> = self.bases.iter().map(QubitBasis::povm).collect();
        Povm::product(&factors)
    }
}

/// Bits of outcome `z` of a `k`-qubit product measurement, qubit 0 first.
pub fn outcome_bits(z: usize, k: usize) -> Vec<bool> {
    (0..k).map(|q| (z >> (k - 1 - q)) & 1 == 1).collect()
}

//! Pure states and density operators on small Hilbert spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for Hermiticity, trace and positivity checks.
pub const TOL: f64 = 1e-9;

/// Tolerance on the squared norm of a pure state.
pub const NORM_TOL: f64 = 1e-12;

/// Default cap on the dimension of any dense operator.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes` into a state vector. The zero vector is rejected.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroVector);
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amps: v.unscale(norm) })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩` of a `dim`-dimensional space.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dim {dim}"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Kronecker product `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let dim = self.dim() * other.dim();
        if dim > DEFAULT_DIM_CAP {
            return Err(Error::DimensionCap {
                dim,
                cap: DEFAULT_DIM_CAP,
            });
        }
        Ok(Self {
            amps: self.amps.kronecker(&other.amps),
        })
    }

    /// The projector `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            mat: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Encodes the bit `r` in the standard basis (`s = 0`) or the diagonal basis (`s = 1`).
pub fn bb84_encode(r: bool, s: bool) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match (r, s) {
        (false, false) => [1.0, 0.0],
        (true, false) => [0.0, 1.0],
        (false, true) => [h, h],
        (true, true) => [h, -h],
    };
    PureState {
        amps: DVector::from_iterator(2, amps.iter().map(|&a| Complex64::new(a, 0.0))),
    }
}

/// A positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates `mat` as a density operator.
    ///
    /// Small negative eigenvalues (down to `-TOL`) are clipped to zero and the
    /// result renormalized; larger violations are rejected. The trace is
    /// normalized to exactly one after validation.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let herm_dev = hermitian_deviation(&mat);
        if herm_dev > TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        // symmetrize so the eigen-solver sees an exactly Hermitian input
        let mut mat = (&mat + mat.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(mat.clone());
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -TOL {
            return Err(Error::NotPositive(min_eig));
        }
        if min_eig < 0.0 {
            let clipped = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0), 0.0));
            mat = &eig.eigenvectors
                * DMatrix::from_diagonal(&clipped)
                * eig.eigenvectors.adjoint();
        }
        let tr = mat.trace().re;
        Ok(Self {
            mat: mat.unscale(tr),
        })
    }

    /// Wraps a matrix known to be a density operator by construction.
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<Complex64>) -> Self {
        debug_assert!(mat.is_square());
        Self { mat }
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            mat: DMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    /// `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        Ok(PureState::basis(dim, index)?.to_density())
    }

    /// Convex combination `Σ w_k ρ_k`; weights must form a distribution.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidArgument("empty mixture".into()));
        };
        let dim = first.dim();
        let mut total = 0.0;
        let mut mat = DMatrix::zeros(dim, dim);
        for &(w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: rho.dim(),
                });
            }
            if !(0.0..=1.0 + TOL).contains(&w) {
                return Err(Error::InvalidDistribution(format!("weight {w} outside [0,1]")));
            }
            total += w;
            mat += rho.mat.scale(w);
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self {
            mat: mat.unscale(total),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.mat.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > threshold).count()
    }

    /// Kronecker product, subject to [`DEFAULT_DIM_CAP`].
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        self.tensor_with_cap(other, DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &DensityOperator, cap: usize) -> Result<DensityOperator> {
        let dim = self.dim() * other.dim();
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self {
            mat: self.mat.kronecker(&other.mat),
        })
    }

    /// `½‖self − other‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok((0.5 * hermitian_trace_norm(&(&self.mat - &other.mat))).clamp(0.0, 1.0))
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_deviation(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(max_abs_diff(&self.mat, &other.mat))
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 0.0)
            .map(|l| -l * l.log2())
            .sum()
    }
}

/// `trace_distance(a, b)` as a free function.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    a.trace_distance(b)
}

/// Largest `|m_ij − conj(m_ji)|`.
pub fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Trace norm `Σ|λ_i|` of a Hermitian matrix via its eigenvalues.
pub fn hermitian_trace_norm(m: &DMatrix<Complex64>) -> f64 {
    let sym = (m + m.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues().iter().map(|l| l.abs()).sum()
}

pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

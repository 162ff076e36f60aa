//! Dense linear algebra for small Hilbert spaces: density operators,
//! cq-states, POVM measurement, distances and Shannon information.

mod cq;
mod info;
mod json;
mod povm;
mod state;

pub use cq::{cq_trace_distance, CqState, Label, MAX_KEY_LEN, PERP_TEXT};
pub use info::{
    binary_entropy, entropy, mutual_information, total_variation, JointDistribution, DIST_TOL,
};
pub use povm::{
    cq_measure, cq_measure_adaptive, measure, outcome_bits, Povm, ProductMeasurement, QubitBasis,
};
pub use state::{
    bb84_encode, hermitian_trace_norm, trace_distance, DensityOperator, PureState,
    DEFAULT_DIM_CAP, NORM_TOL, TOL,
};

pub use num_complex::Complex64;

//! Coarse-grained homodyne nonclassicality toolkit.
//!
//! Simulates quadrature measurements of lossy, phase-diffused squeezed vacuum,
//! bins them, and runs the three-bin test and the normally-ordered-moment
//! method, with parameter estimation, entanglement potential and bootstrap
//! significance analysis.
//!
//! Numerical kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar type for common use. Quadratures are in
//! shot-noise units with [x̂, p̂] = 2i, so the vacuum variance is 1.

// `!(x > 0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference tables and fit coefficients keep all their digits.
#![allow(clippy::excessive_precision)]

pub mod coarse_grain;
pub mod data;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod hermite;
pub mod integrate;
pub mod linalg;
pub mod nonclassicality;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod stats;

pub use coarse_grain::{bin_index, BinnedHistogram};
pub use data::{
    inject_phase_noise, read_dataset, sample_dataset, sample_dataset_at, select_phase_window,
    write_dataset, Dataset, HomodyneRecord, Metadata,
};
pub use error::{Error, Result};
pub use estimation::{estimate_params, summarize, Estimate, EstimationError, MomentSummary};
pub use fock::{entanglement_potential, FockDensityMatrix, TwoModeDensityMatrix};
pub use nonclassicality::{
    analytic_three_bin_r, three_bin_r, three_bin_r_from_values, three_point_r, MomentMatrix,
    ThreeBinResult,
};
pub use quadrature::{Axis, QuadratureDistribution, StateParams};
pub use scalar::Scalar;
pub use stats::{
    bootstrap, compare_methods, BootstrapSpec, ResampleMode, Statistic, ViolationReport,
};

pub type Params = StateParams<f64>;
pub type Params32 = StateParams<f32>;
pub type Distribution = QuadratureDistribution<f64>;
pub type Distribution32 = QuadratureDistribution<f32>;
pub type Histogram = BinnedHistogram<f64>;
pub type Histogram32 = BinnedHistogram<f32>;
pub type FockMatrix = FockDensityMatrix<f64>;
pub type Summary = MomentSummary<f64>;
pub type Moments = MomentMatrix<f64>;

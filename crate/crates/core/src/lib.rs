//! Equivalence-class and preimage reconstruction for smooth feedforward
//! networks.
//!
//! A trained network 𝒩 maps points of its input space to outputs; the set of
//! inputs sharing one output value is an equivalence class. Pulling a metric
//! on the output space back through 𝒩 gives a positive-semidefinite (usually
//! degenerate) metric on the input space whose null directions are tangent to
//! those classes. This crate builds on that observation:
//!
//! - [`nn`]: smooth layer models, evaluation, exact Jacobians.
//! - [`metric`]: the pullback metric, its null/positive spectral split, and
//!   sign-consistent eigenvector selection ([`metric::MetricProvider`]
//!   abstracts over network pullbacks and analytic metric fields).
//! - [`tracer`]: SiMEC — Euler stepping along the null eigenvector to trace
//!   one class as a polygonal, with energy and pseudolength accounting.
//! - [`explorer`]: SiMExp — stepping along the positive eigenvector to move
//!   across classes — and the foliation builder that reconstructs the
//!   preimage of an output interval.
//! - [`trainer`]: deterministic dataset generation and Adam training for the
//!   shipped experiments.
//! - [`oracle`]: brute-force ground truth (finite differences, marching
//!   squares, grid scans, Hausdorff distances) kept independent of the main
//!   code paths.

pub mod error;
pub mod explorer;
pub mod linalg;
pub mod metric;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod tracer;
pub mod trainer;

pub use error::{Error, Result};
pub use explorer::{
    preimage_interval, preimage_interval_jobs, simexp_step, ExploreConfig, FoliationResult,
    SimexpOutcome, SimexpStatus, TransversalEnd,
};
pub use linalg::Matrix;
pub use metric::{
    analytic_field, pullback_metric, select_direction, spectral_decompose, EigenDirection,
    MetricProvider, MetricTensor, PullbackProvider, SpectralDecomposition,
};
pub use nn::{Activation, Layer, MlpModel};
pub use tracer::{
    apply_boundary, pseudolength_bound, segment_energy, simec_trace, BoundaryPolicy, Hypercube,
    Polygonal, TraceConfig,
};
pub use trainer::{
    generate_dataset, mse_loss, normalize, train, Arch, Dataset, DatasetKind, TrainConfig,
};

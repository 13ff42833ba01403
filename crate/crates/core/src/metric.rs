//! Pullback metrics and their spectral decomposition.
//!
//! The input space of a network inherits the singular metric g⁰ = Jᵀ·gⁿ·J
//! from a metric gⁿ on the output space. Its kernel directions span the
//! tangent of the equivalence class through a point; the positive directions
//! move across classes. This module computes the tensor, splits its spectrum
//! into null and positive parts, and picks eigenvector signs consistently
//! from step to step so that curve tracing never reverses on itself.
//!
//! All values here are immutable and the operations pure.

use crate::error::{Error, Result};
use crate::linalg::{dot, jacobi_eigen, normalized, Matrix};
use crate::nn::MlpModel;

/// Default relative threshold below which an eigenvalue counts as null.
pub const DEFAULT_TAU_REL: f64 = 1e-9;

/// How asymmetric a user-supplied output metric may be before rejection.
pub const G_OUT_ASYMMETRY_TOL: f64 = 1e-9;

/// Severely negative eigenvalues (beyond numerical noise) are rejected.
const PSD_NOISE_TOL: f64 = 1e-10;

/// A symmetric positive-semidefinite bilinear form attached to a base point.
///
/// The matrix is symmetrized on construction; positive semidefiniteness is
/// enforced (up to noise) when the tensor is decomposed.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    base_point: Vec<f64>,
    matrix: Matrix,
}

impl MetricTensor {
    pub fn new(base_point: Vec<f64>, matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch {
                context: "metric matrix",
                expected: matrix.rows(),
                actual: matrix.cols(),
            });
        }
        if matrix.rows() != base_point.len() {
            return Err(Error::ShapeMismatch {
                context: "metric base point",
                expected: matrix.rows(),
                actual: base_point.len(),
            });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("metric matrix"));
        }
        Ok(MetricTensor {
            base_point,
            matrix: matrix.symmetrized(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// The quadratic form g(v, v).
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        let gv = self.matrix.matvec(v).expect("dimension checked");
        dot(v, &gv)
    }
}

/// Sorted eigenpairs of a metric, partitioned into null and positive parts.
///
/// Eigenvalues are ascending; entries whose magnitude falls below
/// `tau_rel · λ_max` are reported as exactly zero and counted in
/// `null_count`. Eigenvector k lives in column k of `vectors`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    null_count: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    pub fn null_count(&self) -> usize {
        self.null_count
    }

    /// Numerical rank after null clamping.
    pub fn rank(&self) -> usize {
        self.dim() - self.null_count
    }
}

/// Pullback of `g_out` through the network at `x`: Jᵀ·g_out·J, symmetrized,
/// with J the network Jacobian at `x`.
pub fn pullback_metric(model: &MlpModel, x: &[f64], g_out: &Matrix) -> Result<MetricTensor> {
    if !g_out.is_square() || g_out.rows() != model.output_dim() {
        return Err(Error::ShapeMismatch {
            context: "output metric",
            expected: model.output_dim(),
            actual: g_out.rows(),
        });
    }
    if g_out.max_asymmetry() > G_OUT_ASYMMETRY_TOL {
        return Err(Error::InvalidConfig(format!(
            "output metric is not symmetric (asymmetry {:e})",
            g_out.max_asymmetry()
        )));
    }
    let j = model.jacobian(x)?;
    let g0 = j.transpose().matmul(&g_out.matmul(&j)?)?;
    MetricTensor::new(x.to_vec(), g0)
}

/// Full eigendecomposition by cyclic Jacobi rotations with null clamping.
pub fn spectral_decompose(g: &MetricTensor, tau_rel: f64) -> Result<SpectralDecomposition> {
    if tau_rel <= 0.0 {
        return Err(Error::InvalidConfig("tau_rel must be positive".into()));
    }
    let eig = jacobi_eigen(g.matrix())?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);

    let lambda_min = eig.values[0];
    if lambda_min < -PSD_NOISE_TOL * lambda_max.max(1.0) {
        return Err(Error::IndefiniteMetric {
            lambda_min,
            lambda_max,
        });
    }

    let clamp = tau_rel * lambda_max;
    let mut values = eig.values;
    let mut null_count = 0;
    for v in values.iter_mut() {
        if v.abs() < clamp || lambda_max == 0.0 {
            *v = 0.0;
            null_count += 1;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: eig.vectors,
        null_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenDirection {
    /// Smallest (null) eigenvalue: stay on the equivalence class.
    Null,
    /// Largest eigenvalue: move across classes.
    Positive,
}

/// Unit eigenvector for the requested part of the spectrum.
///
/// With `prev` supplied, the candidate is flipped whenever its dot product
/// with `prev` is negative, so a chain of calls always proceeds in the same
/// direction along the curve (equivalent to the ±90° angle test). An exact
/// zero dot keeps the candidate unflipped. Without `prev` the sign is
/// canonical: the component of largest magnitude is made positive.
pub fn select_direction(
    decomp: &SpectralDecomposition,
    which: EigenDirection,
    prev: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let k = match which {
        EigenDirection::Null => {
            if decomp.null_count == 0 {
                return Err(Error::NoNullDirection { step: 0 });
            }
            0
        }
        EigenDirection::Positive => {
            if decomp.null_count == decomp.dim() {
                return Err(Error::NoPositiveDirection { step: 0 });
            }
            decomp.dim() - 1
        }
    };
    let candidate = decomp.eigenvector(k);
    let mut v = normalized(&candidate).ok_or(Error::NonFinite("eigenvector"))?;
    match prev {
        Some(p) => {
            if dot(&v, p) < 0.0 {
                for c in v.iter_mut() {
                    *c = -*c;
                }
            }
        }
        None => {
            let mut idx = 0;
            let mut best = 0.0f64;
            for (i, c) in v.iter().enumerate() {
                if c.abs() > best {
                    best = c.abs();
                    idx = i;
                }
            }
            if v[idx] < 0.0 {
                for c in v.iter_mut() {
                    *c = -*c;
                }
            }
        }
    }
    Ok(v)
}

/// A source of metric tensors at query points.
///
/// Tracing algorithms depend only on this trait, so the same machinery runs
/// against network pullbacks and hand-written analytic metric fields alike.
pub trait MetricProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn metric_at(&self, x: &[f64]) -> Result<MetricTensor>;
}

/// Pullback of a constant output metric through a network.
pub struct PullbackProvider {
    model: MlpModel,
    g_out: Matrix,
}

impl PullbackProvider {
    pub fn new(model: MlpModel, g_out: Matrix) -> Result<Self> {
        if g_out.rows() != model.output_dim() || !g_out.is_square() {
            return Err(Error::ShapeMismatch {
                context: "output metric",
                expected: model.output_dim(),
                actual: g_out.rows(),
            });
        }
        if g_out.max_asymmetry() > G_OUT_ASYMMETRY_TOL {
            return Err(Error::InvalidConfig("output metric is not symmetric".into()));
        }
        Ok(PullbackProvider { model, g_out })
    }

    /// Pullback of the standard Euclidean output metric.
    pub fn euclidean(model: MlpModel) -> Self {
        let g_out = Matrix::identity(model.output_dim());
        PullbackProvider { model, g_out }
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }
}

impl MetricProvider for PullbackProvider {
    fn dim(&self) -> usize {
        self.model.input_dim()
    }

    fn metric_at(&self, x: &[f64]) -> Result<MetricTensor> {
        pullback_metric(&self.model, x, &self.g_out)
    }
}

/// An analytic metric field given by a plain function of the point.
pub struct AnalyticField {
    name: &'static str,
    dim: usize,
    field: fn(&[f64]) -> Matrix,
}

impl AnalyticField {
    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl MetricProvider for AnalyticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_at(&self, x: &[f64]) -> Result<MetricTensor> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch {
                context: "analytic metric point",
                expected: self.dim,
                actual: x.len(),
            });
        }
        MetricTensor::new(x.to_vec(), (self.field)(x))
    }
}

/// Rank-one field [[x², x], [x, 1]] on the positive quadrant. Its kernel is
/// spanned by (1, −x), so null curves are the parabolas y = y₀ − (x² − x₀²)/2.
fn example2_matrix(p: &[f64]) -> Matrix {
    let x = p[0];
    Matrix::from_rows(&[vec![x * x, x], vec![x, 1.0]]).expect("static shape")
}

const ANALYTIC_FIELDS: &[(&str, usize, fn(&[f64]) -> Matrix)] =
    &[("example2", 2, example2_matrix)];

/// Look up a built-in analytic metric field by name.
pub fn analytic_field(name: &str) -> Result<AnalyticField> {
    for &(n, dim, field) in ANALYTIC_FIELDS {
        if n == name {
            return Ok(AnalyticField { name: n, dim, field });
        }
    }
    Err(Error::UnknownName {
        what: "analytic metric field",
        name: name.into(),
        known: analytic_field_names().join(", "),
    })
}

pub fn analytic_field_names() -> Vec<&'static str> {
    ANALYTIC_FIELDS.iter().map(|&(n, _, _)| n).collect()
}

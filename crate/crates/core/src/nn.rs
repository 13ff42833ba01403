//! Smooth feedforward networks: evaluation and exact Jacobians.
//!
//! A model is an ordered list of affine-plus-activation layers. Activations
//! are restricted to componentwise diffeomorphisms (sigmoid, tanh, softplus,
//! identity) so that every layer map is smooth and its Jacobian is
//! `diag(F′(Ax+b))·A`. ReLU is rejected at load time; softplus is the smooth
//! stand-in for it.
//!
//! Models are immutable after construction and all operations here are pure,
//! so they are safe to share across threads.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Softplus,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            // max(x,0) + ln(1+e^{−|x|}) avoids overflow for large x.
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Activation::Identity => x,
        }
    }

    /// First derivative; strictly positive for every finite input.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Softplus => sigmoid(x),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "softplus" => Ok(Activation::Softplus),
            "identity" => Ok(Activation::Identity),
            "relu" => Err(Error::InvalidModel(
                "relu is not smooth; use softplus as its smooth approximation".into(),
            )),
            other => Err(Error::UnknownName {
                what: "activation",
                name: other.into(),
                known: "sigmoid, tanh, softplus, identity".into(),
            }),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One affine-plus-activation layer: `x ↦ F(Ax + b)`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub(crate) weights: Matrix,
    pub(crate) bias: Vec<f64>,
    pub(crate) activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::ShapeMismatch {
                context: "layer bias",
                expected: weights.rows(),
                actual: bias.len(),
            });
        }
        if !weights.is_finite() || !bias.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Pre-activation `z = Ax + b`.
    pub fn pre_activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weights.matvec(x)?;
        for (zi, bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        Ok(z)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.pre_activation(x)?;
        Ok(z.iter().map(|&v| self.activation.apply(v)).collect())
    }

    /// Exact Jacobian `diag(F′(Ax+b))·A` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        let z = self.pre_activation(x)?;
        let mut j = self.weights.clone();
        for r in 0..j.rows() {
            let d = self.activation.derivative(z[r]);
            for c in 0..j.cols() {
                j[(r, c)] *= d;
            }
        }
        Ok(j)
    }
}

/// A smooth feedforward network: the composition of its layers.
#[derive(Debug, Clone)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl MlpModel {
    /// Validates that adjacent layer dimensions chain.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        for k in 1..layers.len() {
            if layers[k].in_dim() != layers[k - 1].out_dim() {
                return Err(Error::InvalidModel(format!(
                    "layer {} takes {} inputs but layer {} produces {} outputs",
                    k,
                    layers[k].in_dim(),
                    k - 1,
                    layers[k - 1].out_dim()
                )));
            }
        }
        Ok(MlpModel { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Smallest layer width, input included; bounds the metric rank.
    pub fn min_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim())
            .chain(std::iter::once(self.input_dim()))
            .min()
            .expect("non-empty")
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "forward input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.forward(&a)?;
        }
        Ok(a)
    }

    /// Whole-network Jacobian at `x`: the product of layer Jacobians, each
    /// evaluated at the correct intermediate point. Accumulated forward
    /// (right-to-left product alongside the forward pass) since the input
    /// dimension is the small one everywhere in this toolkit.
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "jacobian input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut a = x.to_vec();
        let mut jac: Option<Matrix> = None;
        for layer in &self.layers {
            let jl = layer.jacobian(&a)?;
            jac = Some(match jac {
                None => jl,
                Some(j) => jl.matmul(&j)?,
            });
            a = layer.forward(&a)?;
        }
        Ok(jac.expect("non-empty"))
    }

    /// Per-layer singular-value report for the full-rank hypothesis.
    ///
    /// Degenerate layers are reported, not rejected: downstream consumers
    /// decide whether to proceed.
    pub fn check_full_rank(&self, tol_ratio: f64) -> Result<RankReport> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let sv = crate::linalg::singular_values(&layer.weights)?;
            let sigma_max = sv[0];
            let sigma_min = sv[sv.len() - 1];
            let full_rank = sigma_max > 0.0 && sigma_min / sigma_max > tol_ratio;
            layers.push(LayerRank {
                sigma_min,
                sigma_max,
                full_rank,
            });
        }
        let pass = layers.iter().all(|l| l.full_rank);
        Ok(RankReport { layers, pass })
    }
}

pub const DEFAULT_RANK_TOL_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct LayerRank {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub full_rank: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub layers: Vec<LayerRank>,
    pub pass: bool,
}

// --- model file format -------------------------------------------------
//
// {"layers":[{"weights":[[...],[...]],"bias":[...],"activation":"sigmoid"}]}
// Weights row r gives output unit r. Numbers are 64-bit floats.

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    layers: Vec<LayerFile>,
}

impl MlpModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let mut layers = Vec::with_capacity(file.layers.len());
        for lf in &file.layers {
            let weights = Matrix::from_rows(&lf.weights)?;
            let activation = Activation::parse(&lf.activation)?;
            layers.push(Layer::new(weights, lf.bias.clone(), activation)?);
        }
        MlpModel::new(layers)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: l.weights.to_rows(),
                    bias: l.bias.clone(),
                    activation: l.activation.name().into(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        MlpModel::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

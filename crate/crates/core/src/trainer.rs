//! Dataset generation and deterministic training of small sigmoid networks.
//!
//! Four generators cover the shipped experiments (two exponential surfaces,
//! an ideal-gas regression and a sine-boundary classifier), and `train` runs
//! plain minibatch Adam with backpropagation through the layer family of
//! [`crate::nn`]. Everything is driven by the seeded [`SplitMix64`] stream in
//! a fixed order — weight init first, then one shuffle per epoch — so a
//! (config, seed) pair reproduces the exact same model bit for bit.
//!
//! Training is intentionally single-threaded; summation order is part of the
//! reproducibility contract.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{Activation, Layer, MlpModel};
use crate::rng::SplitMix64;
use crate::tracer::fmt_f64;

pub const IDEAL_GAS_R: f64 = 8.314462;
pub const IDEAL_GAS_V_RANGE: (f64, f64) = (2.5e-2, 7.5e-2);
pub const IDEAL_GAS_P_RANGE: (f64, f64) = (1e5, 2e5);

/// Per-dimension (min, max) pairs used to map data into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub inputs: Vec<(f64, f64)>,
    pub targets: Vec<(f64, f64)>,
}

impl Normalization {
    pub fn normalize_value(range: (f64, f64), v: f64) -> f64 {
        (v - range.0) / (range.1 - range.0)
    }

    pub fn denormalize_value(range: (f64, f64), v: f64) -> f64 {
        range.0 + v * (range.1 - range.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Ranges used if the data were min-max normalized.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, |v| v.len())
    }

    pub fn target_dim(&self) -> usize {
        self.targets.first().map_or(0, |v| v.len())
    }

    /// (train, validation) split: the first `floor(n·frac)` samples train,
    /// the rest validate, in generation order.
    pub fn split(&self, frac: f64) -> (DatasetSlice<'_>, DatasetSlice<'_>) {
        let k = (self.len() as f64 * frac).floor() as usize;
        (
            DatasetSlice {
                inputs: &self.inputs[..k],
                targets: &self.targets[..k],
            },
            DatasetSlice {
                inputs: &self.inputs[k..],
                targets: &self.targets[k..],
            },
        )
    }

    /// One row per sample, inputs then targets, header included.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let (di, dt) = (self.input_dim(), self.target_dim());
        let mut header = Vec::new();
        for i in 0..di {
            header.push(format!("input_{i}"));
        }
        for i in 0..dt {
            header.push(format!("target_{i}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (x, t) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(t).map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Parse the CSV written by [`Dataset::write_csv`].
    pub fn read_csv(text: &str) -> Result<Dataset> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let di = cols.iter().take_while(|c| c.starts_with("input_")).count();
        let dt = cols.len() - di;
        if di == 0 || dt == 0 || !cols[di..].iter().all(|c| c.starts_with("target_")) {
            return Err(Error::Parse(
                "dataset CSV header must list input_* then target_* columns".into(),
            ));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "dataset CSV row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad number `{s}` in dataset CSV")))
            };
            inputs.push(fields[..di].iter().map(|s| parse(s)).collect::<Result<_>>()?);
            targets.push(fields[di..].iter().map(|s| parse(s)).collect::<Result<_>>()?);
        }
        Ok(Dataset {
            inputs,
            targets,
            normalization: None,
        })
    }
}

/// Borrowed view of a contiguous run of samples.
#[derive(Debug, Clone, Copy)]
pub struct DatasetSlice<'a> {
    pub inputs: &'a [Vec<f64>],
    pub targets: &'a [Vec<f64>],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// z = e^(x²+y²−2) on (−1,1)²: compact (circular) level sets.
    CircleExp,
    /// z = e^(x²+y−2) on (0,1)²: non-compact (parabolic) level sets.
    ParabolaExp,
    /// T = PV/(nR) with n = 1, V and P uniform; all three dimensions
    /// min-max normalized over the generation intervals.
    IdealGas,
    /// Binary labels: 1 where y ≥ sin(x) on (−π,π)×(−1,1).
    SineClassifier,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "circle_exp" => Ok(DatasetKind::CircleExp),
            "parabola_exp" => Ok(DatasetKind::ParabolaExp),
            "ideal_gas" => Ok(DatasetKind::IdealGas),
            "sine_classifier" => Ok(DatasetKind::SineClassifier),
            other => Err(Error::UnknownName {
                what: "dataset kind",
                name: other.into(),
                known: "circle_exp, parabola_exp, ideal_gas, sine_classifier".into(),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::CircleExp => "circle_exp",
            DatasetKind::ParabolaExp => "parabola_exp",
            DatasetKind::IdealGas => "ideal_gas",
            DatasetKind::SineClassifier => "sine_classifier",
        }
    }
}

pub fn generate_dataset(kind: DatasetKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset size must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut normalization = None;

    match kind {
        DatasetKind::CircleExp => {
            for _ in 0..n {
                let x = rng.uniform(-1.0, 1.0);
                let y = rng.uniform(-1.0, 1.0);
                inputs.push(vec![x, y]);
                targets.push(vec![(x * x + y * y - 2.0).exp()]);
            }
        }
        DatasetKind::ParabolaExp => {
            for _ in 0..n {
                let x = rng.uniform(0.0, 1.0);
                let y = rng.uniform(0.0, 1.0);
                inputs.push(vec![x, y]);
                targets.push(vec![(x * x + y - 2.0).exp()]);
            }
        }
        DatasetKind::IdealGas => {
            let (v_lo, v_hi) = IDEAL_GAS_V_RANGE;
            let (p_lo, p_hi) = IDEAL_GAS_P_RANGE;
            // Temperature bounds follow from the generation intervals, so the
            // recorded ranges are exact rather than sample-dependent.
            let t_range = (p_lo * v_lo / IDEAL_GAS_R, p_hi * v_hi / IDEAL_GAS_R);
            for _ in 0..n {
                let v = rng.uniform(v_lo, v_hi);
                let p = rng.uniform(p_lo, p_hi);
                let t = p * v / IDEAL_GAS_R;
                inputs.push(vec![
                    Normalization::normalize_value((v_lo, v_hi), v),
                    Normalization::normalize_value((p_lo, p_hi), p),
                ]);
                targets.push(vec![Normalization::normalize_value(t_range, t)]);
            }
            normalization = Some(Normalization {
                inputs: vec![(v_lo, v_hi), (p_lo, p_hi)],
                targets: vec![t_range],
            });
        }
        DatasetKind::SineClassifier => {
            for _ in 0..n {
                let x = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                let y = rng.uniform(-1.0, 1.0);
                inputs.push(vec![x, y]);
                targets.push(vec![if y >= x.sin() { 1.0 } else { 0.0 }]);
            }
        }
    }
    Ok(Dataset {
        inputs,
        targets,
        normalization,
    })
}

/// Min-max normalize every input and target dimension to [0, 1], recording
/// the ranges for round-trip denormalization. Constant dimensions are
/// rejected. Already-normalized data (exact min 0, max 1) pass through
/// unchanged.
pub fn normalize(data: &Dataset) -> Result<Dataset> {
    fn ranges(rows: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut out = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in rows {
                lo = lo.min(r[d]);
                hi = hi.max(r[d]);
            }
            if !(hi > lo) {
                return Err(Error::ConstantDimension { dim: d });
            }
            out.push((lo, hi));
        }
        Ok(out)
    }
    fn apply(rows: &[Vec<f64>], ranges: &[(f64, f64)]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(ranges)
                    .map(|(v, range)| Normalization::normalize_value(*range, *v))
                    .collect()
            })
            .collect()
    }

    let input_ranges = ranges(&data.inputs)?;
    let target_ranges = ranges(&data.targets)?;
    Ok(Dataset {
        inputs: apply(&data.inputs, &input_ranges),
        targets: apply(&data.targets, &target_ranges),
        normalization: Some(Normalization {
            inputs: input_ranges,
            targets: target_ranges,
        }),
    })
}

/// Invert [`normalize`] using the recorded ranges.
pub fn denormalize(data: &Dataset) -> Result<Dataset> {
    let norm = data
        .normalization
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("dataset carries no normalization".into()))?;
    let undo = |rows: &[Vec<f64>], ranges: &[(f64, f64)]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(ranges)
                    .map(|(v, range)| Normalization::denormalize_value(*range, *v))
                    .collect()
            })
            .collect()
    };
    Ok(Dataset {
        inputs: undo(&data.inputs, &norm.inputs),
        targets: undo(&data.targets, &norm.targets),
        normalization: None,
    })
}

/// Mean over the batch of the squared Euclidean error.
pub fn mse_loss(model: &MlpModel, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidConfig("loss batch must be non-empty and paired".into()));
    }
    let mut total = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = model.forward(x)?;
        if y.len() != t.len() {
            return Err(Error::ShapeMismatch {
                context: "loss target",
                expected: y.len(),
                actual: t.len(),
            });
        }
        total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / inputs.len() as f64)
}

/// Architecture: layer widths (input first) plus one activation per layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arch {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Arch {
    /// All layers share one activation.
    pub fn uniform(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig(
                "architecture needs an input and an output width".into(),
            ));
        }
        let n = widths.len() - 1;
        Ok(Arch {
            widths,
            activations: vec![activation; n],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.activations.len() != self.widths.len() - 1 {
            return Err(Error::InvalidConfig(
                "architecture needs n+1 widths for n layers".into(),
            ));
        }
        if self.widths.iter().any(|w| *w == 0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Fraction of samples used for training; the rest validate.
    pub split: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5000,
            batch_size: 512,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 7,
            split: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidConfig("split must lie strictly in (0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LossHistory {
    pub entries: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn final_train_mse(&self) -> Option<f64> {
        self.entries.last().map(|e| e.train_mse)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_mse,val_mse")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{}",
                e.epoch,
                fmt_f64(e.train_mse),
                fmt_f64(e.val_mse)
            )?;
        }
        Ok(())
    }
}

/// Parameter gradients of [`mse_loss`] over a batch, laid out like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Gradients {
        Gradients {
            weights: model
                .layers()
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: model.layers().iter().map(|l| vec![0.0; l.out_dim()]).collect(),
        }
    }
}

/// Backpropagated gradient of the batch-mean squared error with respect to
/// every weight and bias. Exposed so tests can cross-check it against
/// central finite differences.
pub fn loss_gradients(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<Gradients> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidConfig("gradient batch must be non-empty and paired".into()));
    }
    let n_layers = model.layers().len();
    let mut grads = Gradients::zeros_like(model);
    let inv_m = 1.0 / inputs.len() as f64;

    for (x, t) in inputs.iter().zip(targets) {
        // Forward pass, keeping pre-activations and activations per layer.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        acts.push(x.clone());
        for layer in model.layers() {
            let z = layer.pre_activation(acts.last().expect("non-empty"))?;
            let a = z.iter().map(|&v| layer.activation().apply(v)).collect();
            zs.push(z);
            acts.push(a);
        }
        let y = acts.last().expect("non-empty");
        if y.len() != t.len() {
            return Err(Error::ShapeMismatch {
                context: "gradient target",
                expected: y.len(),
                actual: t.len(),
            });
        }

        // d(mean ‖y − t‖²)/dy for this sample.
        let mut grad_a: Vec<f64> = y.iter().zip(t).map(|(a, b)| 2.0 * (a - b) * inv_m).collect();
        for l in (0..n_layers).rev() {
            let layer = &model.layers()[l];
            let delta: Vec<f64> = grad_a
                .iter()
                .zip(&zs[l])
                .map(|(g, z)| g * layer.activation().derivative(*z))
                .collect();
            let a_prev = &acts[l];
            for (r, d) in delta.iter().enumerate() {
                grads.biases[l][r] += d;
                for (c, a) in a_prev.iter().enumerate() {
                    grads.weights[l][(r, c)] += d * a;
                }
            }
            if l > 0 {
                let w = layer.weights();
                let mut next = vec![0.0; layer.in_dim()];
                for (r, d) in delta.iter().enumerate() {
                    for c in 0..layer.in_dim() {
                        next[c] += w[(r, c)] * d;
                    }
                }
                grad_a = next;
            }
        }
    }
    Ok(grads)
}

struct AdamState {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    fn new(model: &MlpModel) -> AdamState {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &Gradients, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for (l, layer) in model.layers_mut().iter_mut().enumerate() {
            for r in 0..layer.weights.rows() {
                for c in 0..layer.weights.cols() {
                    let g = grads.weights[l][(r, c)];
                    let m = &mut self.m.weights[l][(r, c)];
                    let v = &mut self.v.weights[l][(r, c)];
                    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                    let step = cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.adam_eps);
                    layer.weights[(r, c)] -= step;
                }
                let g = grads.biases[l][r];
                let m = &mut self.m.biases[l][r];
                let v = &mut self.v.biases[l][r];
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let step = cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.adam_eps);
                layer.bias[r] -= step;
            }
        }
    }
}

/// Train a fresh network on `data` with shuffled-minibatch Adam.
///
/// Weight init is Glorot-uniform (biases zero) from the seeded stream; each
/// epoch reshuffles the training half and sweeps it in batches of
/// `cfg.batch_size` (final partial batch included). Losses are recorded after
/// each epoch and checked for divergence.
pub fn train(arch: &Arch, data: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, LossHistory)> {
    arch.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("training data is empty".into()));
    }
    if arch.widths[0] != data.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "architecture input width",
            expected: data.input_dim(),
            actual: arch.widths[0],
        });
    }
    if *arch.widths.last().expect("non-empty") != data.target_dim() {
        return Err(Error::ShapeMismatch {
            context: "architecture output width",
            expected: data.target_dim(),
            actual: *arch.widths.last().expect("non-empty"),
        });
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let mut layers = Vec::with_capacity(arch.activations.len());
    for l in 0..arch.activations.len() {
        let (fan_in, fan_out) = (arch.widths[l], arch.widths[l + 1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut w = Matrix::zeros(fan_out, fan_in);
        for r in 0..fan_out {
            for c in 0..fan_in {
                w[(r, c)] = rng.uniform(-limit, limit);
            }
        }
        layers.push(Layer::new(w, vec![0.0; fan_out], arch.activations[l])?);
    }
    let mut model = MlpModel::new(layers)?;

    let (train_set, val_set) = data.split(cfg.split);
    if train_set.inputs.is_empty() || val_set.inputs.is_empty() {
        return Err(Error::InvalidConfig(
            "split leaves an empty training or validation set".into(),
        ));
    }

    let mut adam = AdamState::new(&model);
    let mut history = LossHistory::default();
    let mut order: Vec<usize> = (0..train_set.inputs.len()).collect();
    let mut batch_x: Vec<Vec<f64>> = Vec::with_capacity(cfg.batch_size);
    let mut batch_t: Vec<Vec<f64>> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch_x.clear();
            batch_t.clear();
            for &i in chunk {
                batch_x.push(train_set.inputs[i].clone());
                batch_t.push(train_set.targets[i].clone());
            }
            let grads = loss_gradients(&model, &batch_x, &batch_t)?;
            adam.update(&mut model, &grads, cfg);
        }
        let train_mse = mse_loss(&model, train_set.inputs, train_set.targets)?;
        let val_mse = mse_loss(&model, val_set.inputs, val_set.targets)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.entries.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
    }
    Ok((model, history))
}

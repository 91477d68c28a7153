//! Per-topology MLP regressors and topology selection.
//!
//! Each (topology, metric) pair gets its own `14 -> 15 -> 15 -> 1` network
//! with ReLU hidden layers and a linear output, trained with Adam on mean
//! absolute error. Features and targets are z-scored with statistics fitted
//! on the training split; predictions are mapped back to label units.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, NormStats, FEATURE_NAMES};
use crate::rng::{seeded, split};
use crate::scalar::{clearly_less, Scalar};
use crate::topology::LatticeKind;

pub const HIDDEN: usize = 15;
pub const BANK_FORMAT_VERSION: u32 = 1;
pub const MIN_TRAIN_SAMPLES: usize = 10;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("label {index} is not finite")]
    NonFiniteLabel { index: usize },
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("bank has no {metric} model for {topology}")]
    MissingModel { topology: LatticeKind, metric: Metric },
    #[error("bank format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corrupt bank: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<FeatureError> for PredictError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Dimension { expected, got } => PredictError::Dimension { expected, got },
            other => PredictError::InvalidConfig(other.to_string()),
        }
    }
}

/// Quantity a model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Critical,
    Total,
    Fidelity,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Critical, Metric::Total, Metric::Fidelity];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Critical => "critical",
            Metric::Total => "total",
            Metric::Fidelity => "fidelity",
        }
    }

    /// Larger is better for fidelity, smaller for pulse counts.
    pub fn maximize(self) -> bool {
        self == Metric::Fidelity
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "critical" => Ok(Metric::Critical),
            "total" => Ok(Metric::Total),
            "fidelity" => Ok(Metric::Fidelity),
            _ => Err(PredictError::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

/// Dense layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            biases: vec![T::zero(); outputs],
        }
    }

    pub fn weight(&self, out: usize, inp: usize) -> T {
        self.weights[out * self.inputs + inp]
    }

    pub fn set_weight(&mut self, out: usize, inp: usize, v: T) {
        self.weights[out * self.inputs + inp] = v;
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).fold(self.biases[o], |acc, (&w, &v)| acc + w * v)
            })
            .collect()
    }
}

/// Pre- and post-activation values of every layer for one input.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub pre: Vec<Vec<T>>,
    pub post: Vec<Vec<T>>,
}

/// Multilayer perceptron with ReLU hidden layers and a linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// All-zero network with the given layer widths (input first).
    pub fn zeros(sizes: &[usize]) -> Result<Self, PredictError> {
        Self::check_sizes(sizes)?;
        Ok(Mlp {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// Uniform fan-in initialisation: weights in `±sqrt(6 / fan_in)`,
    /// biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self, PredictError> {
        let mut mlp = Self::zeros(sizes)?;
        let mut rng = seeded(seed);
        for layer in &mut mlp.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::of(rng.gen_range(-limit..limit));
            }
        }
        Ok(mlp)
    }

    /// The `14 -> 15 -> 15 -> 1` network.
    pub fn standard(inputs: usize, seed: u64) -> Result<Self, PredictError> {
        Self::new(&[inputs, HIDDEN, HIDDEN, 1], seed)
    }

    /// Builds a network from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self, PredictError> {
        let mlp = Mlp { layers };
        mlp.check()?;
        Ok(mlp)
    }

    fn check_sizes(sizes: &[usize]) -> Result<(), PredictError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(PredictError::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        if sizes[sizes.len() - 1] != 1 {
            return Err(PredictError::InvalidConfig("output layer must have width 1".into()));
        }
        Ok(())
    }

    fn check(&self) -> Result<(), PredictError> {
        let mut sizes = vec![self.layers.first().map_or(0, |l| l.inputs)];
        for (i, l) in self.layers.iter().enumerate() {
            if l.inputs != sizes[i] || l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(PredictError::Corrupt(format!("layer {i} has inconsistent shape")));
            }
            sizes.push(l.outputs);
        }
        Self::check_sizes(&sizes)?;
        let finite = self
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()));
        if !finite {
            return Err(PredictError::Corrupt("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flattened parameters: each layer's weights then its biases.
    pub fn parameters(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[T]) -> Result<(), PredictError> {
        if params.len() != self.num_parameters() {
            return Err(PredictError::Dimension {
                expected: self.num_parameters(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            let (b, r) = r.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn check_input(&self, x: &[T]) -> Result<(), PredictError> {
        if x.len() != self.input_dim() {
            return Err(PredictError::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(PredictError::NonFiniteInput);
        }
        Ok(())
    }

    pub fn trace(&self, x: &[T]) -> Result<Trace<T>, PredictError> {
        self.check_input(x)?;
        Ok(self.trace_unchecked(x))
    }

    fn trace_unchecked(&self, x: &[T]) -> Trace<T> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &post[i - 1] };
            let z = layer.apply(input);
            let a = if i == last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(T::zero())).collect()
            };
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }

    pub fn forward(&self, x: &[T]) -> Result<T, PredictError> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[T]) -> T {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            a = layer.apply(&a);
            if i != last {
                a.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
        }
        a[0]
    }

    /// Adds `upstream * d(output)/d(params)` at `x` into `grad`.
    fn accumulate(&self, x: &[T], upstream: T, grad: &mut [T]) {
        let trace = self.trace_unchecked(x);
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.biases.len();
        }
        let mut delta = vec![upstream];
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input: &[T] = if i == 0 { x } else { &trace.post[i - 1] };
            let base = offsets[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                let row = &mut grad[base + o * layer.inputs..base + (o + 1) * layer.inputs];
                for (g, &v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
                grad[base + layer.weights.len() + o] += d;
            }
            if i > 0 {
                let prev_pre = &trace.pre[i - 1];
                delta = (0..layer.inputs)
                    .map(|j| {
                        if prev_pre[j] > T::zero() {
                            delta
                                .iter()
                                .enumerate()
                                .fold(T::zero(), |acc, (o, &d)| acc + d * layer.weight(o, j))
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
            }
        }
    }

    /// Mean absolute error over a batch.
    pub fn mae<X: AsRef<[T]>>(&self, xs: &[X], ys: &[T]) -> Result<T, PredictError> {
        self.check_batch(xs, ys)?;
        let total: T = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| (self.forward_unchecked(x.as_ref()) - y).abs())
            .sum();
        Ok(total / T::of_usize(xs.len()))
    }

    /// Mean absolute error and its gradient with respect to
    /// [`parameters`](Self::parameters). The derivative of `|r|` at `r = 0`
    /// is taken as zero.
    pub fn mae_gradient<X: AsRef<[T]>>(&self, xs: &[X], ys: &[T]) -> Result<(T, Vec<T>), PredictError> {
        self.check_batch(xs, ys)?;
        let n = T::of_usize(xs.len());
        let mut grad = vec![T::zero(); self.num_parameters()];
        let mut loss = T::zero();
        for (x, &y) in xs.iter().zip(ys) {
            let r = self.forward_unchecked(x.as_ref()) - y;
            loss += r.abs();
            let s = if r > T::zero() {
                T::one()
            } else if r < T::zero() {
                -T::one()
            } else {
                T::zero()
            };
            if s != T::zero() {
                self.accumulate(x.as_ref(), s / n, &mut grad);
            }
        }
        Ok((loss / n, grad))
    }

    fn check_batch<X: AsRef<[T]>>(&self, xs: &[X], ys: &[T]) -> Result<(), PredictError> {
        if xs.is_empty() {
            return Err(PredictError::EmptyDataset);
        }
        if xs.len() != ys.len() {
            return Err(PredictError::Dimension {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        for x in xs {
            self.check_input(x.as_ref())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamConfig<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub epochs: usize,
    /// Minibatch size; `None` trains on the full batch.
    pub batch_size: Option<usize>,
}

impl<T: Scalar> Default for AdamConfig<T> {
    fn default() -> Self {
        AdamConfig {
            learning_rate: T::of(1e-3),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-7),
            epochs: 400,
            batch_size: Some(32),
        }
    }
}

impl<T: Scalar> AdamConfig<T> {
    pub fn validate(&self) -> Result<(), PredictError> {
        let positive = [self.learning_rate, self.beta1, self.beta2, self.epsilon]
            .iter()
            .all(|&v| v > T::zero() && v.is_finite());
        if !positive || self.beta1 >= T::one() || self.beta2 >= T::one() {
            return Err(PredictError::InvalidConfig(
                "Adam rates must be positive and betas below 1".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == Some(0) {
            return Err(PredictError::InvalidConfig("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Adam optimiser state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig<T>,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig<T>, num_params: usize) -> Self {
        Adam {
            config,
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        self.t += 1;
        let c = &self.config;
        let one = T::one();
        let bias1 = one - c.beta1.powi(self.t);
        let bias2 = one - c.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = c.beta1 * self.m[i] + (one - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (one - c.beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

/// One training example: raw feature values and a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: T,
}

/// Network plus the feature and target statistics it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedModel<T> {
    pub mlp: Mlp<T>,
    pub features: NormStats<T>,
    pub target: NormStats<T>,
}

impl<T: Scalar> TrainedModel<T> {
    /// Prediction in label units from raw features.
    pub fn predict(&self, raw: &[T]) -> Result<T, PredictError> {
        let z = self.features.normalize(raw)?;
        let out = self.mlp.forward(&z)?;
        Ok(self.target.denormalize(&[out])?[0])
    }

    pub fn mae(&self, data: &[Sample<T>]) -> Result<T, PredictError> {
        if data.is_empty() {
            return Err(PredictError::EmptyDataset);
        }
        let mut total = T::zero();
        for s in data {
            total += (self.predict(&s.features)? - s.label).abs();
        }
        Ok(total / T::of_usize(data.len()))
    }
}

fn check_dataset<T: Scalar>(data: &[Sample<T>], min: usize) -> Result<usize, PredictError> {
    if data.is_empty() {
        return Err(PredictError::EmptyDataset);
    }
    if data.len() < min {
        return Err(PredictError::TooFewSamples {
            needed: min,
            got: data.len(),
        });
    }
    let dim = data[0].features.len();
    for (i, s) in data.iter().enumerate() {
        if s.features.len() != dim {
            return Err(PredictError::Dimension {
                expected: dim,
                got: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(PredictError::NonFiniteInput);
        }
        if !s.label.is_finite() {
            return Err(PredictError::NonFiniteLabel { index: i });
        }
    }
    Ok(dim)
}

/// Trains a `dim -> 15 -> 15 -> 1` network on `data`. Stream 0 of `seed`
/// initialises weights; stream 1 shuffles minibatches each epoch.
pub fn train<T: Scalar>(
    data: &[Sample<T>],
    config: &AdamConfig<T>,
    seed: u64,
) -> Result<TrainedModel<T>, PredictError> {
    config.validate()?;
    let dim = check_dataset(data, MIN_TRAIN_SAMPLES)?;
    let rows: Vec<&[T]> = data.iter().map(|s| s.features.as_slice()).collect();
    let features = NormStats::fit(&rows)?;
    let labels: Vec<[T; 1]> = data.iter().map(|s| [s.label]).collect();
    let target = NormStats::fit(&labels)?;

    let xs: Vec<Vec<T>> = rows.iter().map(|r| features.normalize(r)).collect::<Result<_, _>>()?;
    let ys: Vec<T> = labels.iter().map(|l| target.normalize(l).map(|v| v[0])).collect::<Result<_, _>>()?;

    let init_seed = split(seed, 0).gen::<u64>();
    let mut mlp = Mlp::standard(dim, init_seed)?;
    let mut params = mlp.parameters();
    let mut adam = Adam::new(config.clone(), params.len());
    let mut shuffle = split(seed, 1);
    let batch = config.batch_size.unwrap_or(data.len()).min(data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(batch) {
            let bx: Vec<&[T]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<T> = chunk.iter().map(|&i| ys[i]).collect();
            let (_, grad) = mlp.mae_gradient(&bx, &by)?;
            adam.step(&mut params, &grad);
            mlp.set_parameters(&params)?;
        }
    }
    Ok(TrainedModel { mlp, features, target })
}

/// Validation folds for `k`-fold cross validation: a seeded permutation cut
/// into `k` contiguous blocks whose sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, PredictError> {
    if k < 2 || k > n {
        return Err(PredictError::InvalidConfig(format!("cannot split {n} samples into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub mae: f64,
}

/// Trains one model per fold (fold `f` uses seed stream `f + 2`) and
/// reports validation MAE in label units.
pub fn cross_validate<T: Scalar>(
    data: &[Sample<T>],
    config: &AdamConfig<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldResult>, PredictError> {
    check_dataset(data, MIN_TRAIN_SAMPLES)?;
    let folds = kfold_indices(data.len(), k, seed)?;
    let mut out = Vec::with_capacity(k);
    for (f, val) in folds.iter().enumerate() {
        let mut in_val = vec![false; data.len()];
        val.iter().for_each(|&i| in_val[i] = true);
        let train_set: Vec<Sample<T>> = (0..data.len()).filter(|&i| !in_val[i]).map(|i| data[i].clone()).collect();
        let val_set: Vec<Sample<T>> = val.iter().map(|&i| data[i].clone()).collect();
        let fold_seed = split(seed, f as u64 + 2).gen::<u64>();
        let model = train(&train_set, config, fold_seed)?;
        out.push(FoldResult {
            fold: f,
            train_size: train_set.len(),
            validation_size: val_set.len(),
            mae: model.mae(&val_set)?.as_f64(),
        });
    }
    Ok(out)
}

/// Trained models keyed by topology and metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelBank<T> {
    entries: BTreeMap<(LatticeKind, Metric), TrainedModel<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct BankEntry<T> {
    topology: LatticeKind,
    metric: Metric,
    model: TrainedModel<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct BankFile<T> {
    format_version: u32,
    entries: Vec<BankEntry<T>>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl<T: Scalar> ModelBank<T> {
    pub fn new() -> Self {
        ModelBank {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, topology: LatticeKind, metric: Metric, model: TrainedModel<T>) {
        self.entries.insert((topology, metric), model);
    }

    pub fn get(&self, topology: LatticeKind, metric: Metric) -> Result<&TrainedModel<T>, PredictError> {
        self.entries
            .get(&(topology, metric))
            .ok_or(PredictError::MissingModel { topology, metric })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = (LatticeKind, Metric)> + '_ {
        self.entries.keys().copied()
    }

    pub fn to_json(&self) -> Result<String, PredictError> {
        let file = BankFile {
            format_version: BANK_FORMAT_VERSION,
            entries: self
                .entries
                .iter()
                .map(|(&(topology, metric), model)| BankEntry {
                    topology,
                    metric,
                    model: model.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, PredictError> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version != BANK_FORMAT_VERSION {
            return Err(PredictError::Version {
                found: probe.format_version,
                expected: BANK_FORMAT_VERSION,
            });
        }
        let file: BankFile<T> = serde_json::from_str(text)?;
        let mut bank = ModelBank::new();
        for e in file.entries {
            e.model.mlp.check()?;
            let dim = e.model.mlp.input_dim();
            if e.model.features.dim() != dim || e.model.target.dim() != 1 {
                return Err(PredictError::Corrupt(format!(
                    "{} {} statistics do not match the network",
                    e.topology.name(),
                    e.metric
                )));
            }
            if bank.entries.insert((e.topology, e.metric), e.model).is_some() {
                return Err(PredictError::Corrupt("duplicate bank entry".into()));
            }
        }
        Ok(bank)
    }
}

pub fn save_bank<T: Scalar>(bank: &ModelBank<T>, path: &Path) -> Result<(), PredictError> {
    std::fs::write(path, bank.to_json()?)?;
    Ok(())
}

pub fn load_bank<T: Scalar>(path: &Path) -> Result<ModelBank<T>, PredictError> {
    ModelBank::from_json(&std::fs::read_to_string(path)?)
}

/// Outcome of [`select_topology`]: the chosen lattice and the prediction for
/// each standard lattice, in `Square, STriangle, TTriangle` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Selection<T> {
    pub topology: LatticeKind,
    pub predictions: Vec<(LatticeKind, T)>,
}

/// Index of the best prediction; the earlier entry wins unless a later one
/// is better beyond the tie tolerance.
pub fn best_index<T: Scalar>(metric: Metric, predictions: &[T]) -> usize {
    let mut best = 0;
    for (i, &p) in predictions.iter().enumerate().skip(1) {
        let better = if metric.maximize() {
            clearly_less(predictions[best], p)
        } else {
            clearly_less(p, predictions[best])
        };
        if better {
            best = i;
        }
    }
    best
}

pub fn select_topology<T: Scalar>(
    bank: &ModelBank<T>,
    metric: Metric,
    features: &[T],
) -> Result<Selection<T>, PredictError> {
    let mut predictions = Vec::with_capacity(3);
    for kind in LatticeKind::STANDARD {
        predictions.push((kind, bank.get(kind, metric)?.predict(features)?));
    }
    let values: Vec<T> = predictions.iter().map(|p| p.1).collect();
    Ok(Selection {
        topology: LatticeKind::STANDARD[best_index(metric, &values)],
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub rank: usize,
    pub feature: usize,
    pub name: String,
    pub delta: f64,
}

/// Ranks features by how much the MAE grows when the feature is replaced by
/// its dataset mean. Ties keep feature order.
pub fn feature_importance<T: Scalar>(
    model: &TrainedModel<T>,
    data: &[Sample<T>],
) -> Result<Vec<Importance>, PredictError> {
    let dim = check_dataset(data, 1)?;
    if dim != model.mlp.input_dim() {
        return Err(PredictError::Dimension {
            expected: model.mlp.input_dim(),
            got: dim,
        });
    }
    let base = model.mae(data)?;
    let n = T::of_usize(data.len());
    let mut deltas = Vec::with_capacity(dim);
    for j in 0..dim {
        let mean = data.iter().map(|s| s.features[j]).sum::<T>() / n;
        let masked: Vec<Sample<T>> = data
            .iter()
            .map(|s| {
                let mut f = s.features.clone();
                f[j] = mean;
                Sample { features: f, label: s.label }
            })
            .collect();
        deltas.push((j, (model.mae(&masked)? - base).as_f64()));
    }
    deltas.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(deltas
        .into_iter()
        .enumerate()
        .map(|(rank, (feature, delta))| Importance {
            rank: rank + 1,
            feature,
            name: if dim == FEATURE_NAMES.len() {
                FEATURE_NAMES[feature].to_string()
            } else {
                format!("x{feature}")
            },
            delta,
        })
        .collect())
}

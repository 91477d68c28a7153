//! End-to-end helpers: compile on a topology, label circuits with per-topology
//! metrics, train a model bank and benchmark selection strategies.
//!
//! Corpus-level work runs on rayon and collects by circuit index, so results
//! do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{generate_random_circuit, interaction_graph, Circuit, CircuitError, GenParams};
use crate::features::{compute_features, FeatureError, FeatureVector};
use crate::mapper::{map_circuit, route_swaps, MapError, Mapping, RoutedCircuit};
use crate::noise_sim::{bitwise_error, ideal_distribution_routed, noisy_sample_routed, NoiseModel, SimError};
use crate::predictor::{
    best_index, cross_validate, select_topology, train, AdamConfig, FoldResult, Metric, ModelBank, PredictError,
    Sample,
};
use crate::rng::{derive_seed, seeded};
use crate::scheduler::{
    build_dag, metrics, schedule_with, validate_with, Dag, ExecutionMetrics, FrequencyPlan, GateDurations, Schedule,
};
use crate::topology::{build_lattice, min_lattice_for, Lattice, LatticeKind, RadiusConfig, TopologyError};

/// Widest circuit that gets a fidelity label.
pub const FIDELITY_MAX_WIDTH: usize = 12;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("circuit: {0}")]
    Circuit(#[from] CircuitError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("mapper: {0}")]
    Map(#[from] MapError),
    #[error("features: {0}")]
    Feature(#[from] FeatureError),
    #[error("predictor: {0}")]
    Predict(#[from] PredictError),
    #[error("simulator: {0}")]
    Sim(#[from] SimError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no simulable circuits (fidelity needs width <= {FIDELITY_MAX_WIDTH})")]
    NoSimulable,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Hardware parameters shared by every compile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct CompileConfig {
    /// Interaction and blockade radii; `None` uses the lattice defaults.
    pub radii: Option<RadiusConfig<f64>>,
    pub durations: GateDurations,
    pub frequencies: FrequencyPlan,
}


/// Every artifact of one map-route-schedule run.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub lattice: Lattice<f64>,
    pub radii: RadiusConfig<f64>,
    pub routed: RoutedCircuit,
    pub dag: Dag,
    pub schedule: Schedule,
    pub metrics: ExecutionMetrics,
}

/// Compiles on the smallest standard lattice of `kind` that fits the
/// circuit's declared width.
pub fn compile(circuit: &Circuit, kind: LatticeKind, config: &CompileConfig) -> Result<Compiled, PipelineError> {
    let lattice = build_lattice(&min_lattice_for(circuit.num_qubits(), kind))?;
    compile_on(circuit, &lattice, config)
}

pub fn compile_on(circuit: &Circuit, lattice: &Lattice<f64>, config: &CompileConfig) -> Result<Compiled, PipelineError> {
    let mapping = map_circuit(circuit, lattice, &interaction_graph(circuit))?;
    compile_with_mapping(circuit, lattice, &mapping, config)
}

/// Routes and schedules from a given placement, then re-checks routing and
/// schedule legality.
pub fn compile_with_mapping(
    circuit: &Circuit,
    lattice: &Lattice<f64>,
    mapping: &Mapping,
    config: &CompileConfig,
) -> Result<Compiled, PipelineError> {
    let radii = config.radii.unwrap_or_else(|| RadiusConfig::default_for(lattice.spec()));
    radii.validate()?;
    config.durations.validate().map_err(PipelineError::Config)?;
    let routed = route_swaps(circuit, mapping, lattice, &radii)?;
    routed.verify(lattice, &radii).map_err(PipelineError::Invariant)?;
    let dag = build_dag(&routed);
    let schedule = schedule_with(&dag, &routed, lattice, &radii, &config.durations, &config.frequencies);
    let violations = validate_with(&schedule, &dag, &routed, lattice, &radii, &config.frequencies);
    if let Some(v) = violations.first() {
        return Err(PipelineError::Invariant(format!("{} schedule violations, first: {v}", violations.len())));
    }
    let metrics = metrics(&schedule, &routed);
    Ok(Compiled {
        lattice: lattice.clone(),
        radii,
        routed,
        dag,
        schedule,
        metrics,
    })
}

/// Noise settings for fidelity labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub noise: NoiseModel,
    pub shots: u64,
    pub seed: u64,
}

/// Ground-truth metrics of one circuit on the three standard lattices, in
/// `Square, STriangle, TTriangle` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub critical: [f64; 3],
    pub total: [f64; 3],
    pub fidelity: Option<[f64; 3]>,
}

impl Labels {
    pub fn values(&self, metric: Metric) -> Option<[f64; 3]> {
        match metric {
            Metric::Critical => Some(self.critical),
            Metric::Total => Some(self.total),
            Metric::Fidelity => self.fidelity,
        }
    }
}

/// Fidelity of a compiled circuit: one minus the bitwise error of routed
/// execution under `fid`.
pub fn routed_fidelity(routed: &RoutedCircuit, fid: &FidelityConfig) -> Result<f64, PipelineError> {
    let ideal = ideal_distribution_routed(routed)?;
    let counts = noisy_sample_routed(routed, &fid.noise, fid.shots, fid.seed)?;
    Ok(bitwise_error(&ideal, &counts)?.fidelity)
}

/// Labels one circuit. Fidelity is computed only when `fidelity` is given
/// and the width is at most [`FIDELITY_MAX_WIDTH`]; topology `k` samples with
/// stream `k` of the fidelity seed.
pub fn label_circuit(
    circuit: &Circuit,
    config: &CompileConfig,
    fidelity: Option<&FidelityConfig>,
) -> Result<Labels, PipelineError> {
    let mut critical = [0.0; 3];
    let mut total = [0.0; 3];
    let mut fid = [0.0; 3];
    let simulate = fidelity.filter(|_| circuit.num_qubits() <= FIDELITY_MAX_WIDTH);
    for (k, kind) in LatticeKind::STANDARD.into_iter().enumerate() {
        let compiled = compile(circuit, kind, config)?;
        critical[k] = compiled.metrics.critical_pulse_count as f64;
        total[k] = compiled.metrics.total_pulse_count as f64;
        if let Some(f) = simulate {
            let cfg = FidelityConfig {
                seed: derive_seed(f.seed, k as u64),
                ..*f
            };
            fid[k] = routed_fidelity(&compiled.routed, &cfg)?;
        }
    }
    Ok(Labels {
        critical,
        total,
        fidelity: simulate.map(|_| fid),
    })
}

/// Labels every circuit in parallel; circuit `i` uses stream `i` of the
/// fidelity seed.
pub fn label_corpus(
    circuits: &[Circuit],
    config: &CompileConfig,
    fidelity: Option<&FidelityConfig>,
) -> Result<Vec<Labels>, PipelineError> {
    circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let f = fidelity.map(|f| FidelityConfig {
                seed: derive_seed(f.seed, i as u64),
                ..*f
            });
            label_circuit(c, config, f.as_ref())
        })
        .collect()
}

pub fn corpus_features(circuits: &[Circuit]) -> Result<Vec<FeatureVector<f64>>, PipelineError> {
    circuits
        .par_iter()
        .map(|c| compute_features(c).map_err(PipelineError::from))
        .collect()
}

/// Training samples for one (topology, metric) model. Circuits without a
/// label for `metric` are skipped.
pub fn dataset(features: &[FeatureVector<f64>], labels: &[Labels], kind: LatticeKind, metric: Metric) -> Vec<Sample<f64>> {
    let k = kind.standard_index().expect("standard topology");
    features
        .iter()
        .zip(labels)
        .filter_map(|(f, l)| {
            l.values(metric).map(|v| Sample {
                features: f.to_array().to_vec(),
                label: v[k],
            })
        })
        .collect()
}

/// One cross-validation fold of one bank entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub topology: LatticeKind,
    pub metric: Metric,
    #[serde(flatten)]
    pub fold: FoldResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig<f64>,
    /// Folds for the validation report; `None` skips cross validation.
    pub folds: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            folds: Some(5),
            seed: 0,
        }
    }
}

/// Trains one model per standard topology for each metric, in parallel.
/// Entry `(k, m)` uses seed stream `3 k + m` where `m` indexes
/// [`Metric::ALL`].
pub fn train_bank(
    features: &[FeatureVector<f64>],
    labels: &[Labels],
    metrics: &[Metric],
    config: &TrainConfig,
) -> Result<(ModelBank<f64>, Vec<CvRow>), PipelineError> {
    let jobs: Vec<(LatticeKind, Metric)> = metrics
        .iter()
        .flat_map(|&m| LatticeKind::STANDARD.into_iter().map(move |k| (k, m)))
        .collect();
    for &m in metrics {
        if m == Metric::Fidelity && labels.iter().all(|l| l.fidelity.is_none()) {
            return Err(PipelineError::NoSimulable);
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(kind, metric)| {
            let data = dataset(features, labels, kind, metric);
            let m_idx = Metric::ALL.iter().position(|&m| m == metric).unwrap_or(0);
            let stream = 3 * kind.standard_index().unwrap_or(0) + m_idx;
            let seed = derive_seed(config.seed, stream as u64);
            let model = train(&data, &config.adam, seed)?;
            let folds = match config.folds {
                Some(k) => cross_validate(&data, &config.adam, k, seed)?,
                None => Vec::new(),
            };
            Ok::<_, PipelineError>((kind, metric, model, folds))
        })
        .collect();
    let mut bank = ModelBank::new();
    let mut report = Vec::new();
    for r in results {
        let (kind, metric, model, folds) = r?;
        bank.insert(kind, metric, model);
        report.extend(folds.into_iter().map(|fold| CvRow {
            topology: kind,
            metric,
            fold,
        }));
    }
    Ok((bank, report))
}

/// Per-circuit comparison of selection strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub circuit: usize,
    pub width: usize,
    /// Ground truth per standard topology.
    pub values: [f64; 3],
    pub oracle: f64,
    pub worst: f64,
    pub predictor: f64,
    /// Seeded uniform random pick.
    pub random: f64,
    /// Expected value of a uniform random pick.
    pub random_mean: f64,
    pub predicted: LatticeKind,
    pub random_pick: LatticeKind,
}

impl BenchRow {
    pub fn new(
        circuit: usize,
        width: usize,
        metric: Metric,
        values: [f64; 3],
        predicted: usize,
        random_pick: usize,
    ) -> Self {
        let best = best_index(metric, &values);
        let worst = if metric.maximize() {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        BenchRow {
            circuit,
            width,
            values,
            oracle: values[best],
            worst,
            predictor: values[predicted],
            random: values[random_pick],
            random_mean: values.iter().sum::<f64>() / 3.0,
            predicted: LatticeKind::STANDARD[predicted],
            random_pick: LatticeKind::STANDARD[random_pick],
        }
    }

    /// Checks `oracle <= strategy <= worst` (reversed for fidelity) for every
    /// strategy in the row.
    pub fn check_envelope(&self, metric: Metric) -> Result<(), PipelineError> {
        let (lo, hi) = if metric.maximize() {
            (self.worst, self.oracle)
        } else {
            (self.oracle, self.worst)
        };
        let strategies = self
            .values
            .iter()
            .chain([&self.predictor, &self.random, &self.random_mean]);
        for &v in strategies {
            if v < lo || v > hi {
                return Err(PipelineError::Invariant(format!(
                    "circuit {}: value {v} outside [{lo}, {hi}]",
                    self.circuit
                )));
            }
        }
        Ok(())
    }
}

/// Ground truth, predictor choice and a seeded random choice per circuit.
/// Circuit `i` draws its random topology from stream `i` of `seed`.
pub fn bench(
    circuits: &[Circuit],
    labels: &[Labels],
    bank: &ModelBank<f64>,
    metric: Metric,
    seed: u64,
) -> Result<Vec<BenchRow>, PipelineError> {
    if circuits.len() != labels.len() {
        return Err(PipelineError::Config("one label row per circuit required".into()));
    }
    let rows: Vec<Result<Option<BenchRow>, PipelineError>> = circuits
        .par_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (c, l))| {
            let Some(values) = l.values(metric) else {
                return Ok(None);
            };
            let features = compute_features::<f64>(c)?.to_array();
            let sel = select_topology(bank, metric, &features)?;
            let predicted = sel.topology.standard_index().expect("standard topology");
            let pick = (derive_seed(seed, i as u64) % 3) as usize;
            let row = BenchRow::new(i, c.num_qubits(), metric, values, predicted, pick);
            row.check_envelope(metric)?;
            Ok(Some(row))
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Sampling ranges (inclusive) for random circuit corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRanges {
    pub width: (usize, usize),
    pub instructions: (usize, usize),
    pub inter_connectivity: (f64, f64),
    pub one_qubit_rate: (f64, f64),
    pub three_qubit_rate: (f64, f64),
}

impl Default for CorpusRanges {
    fn default() -> Self {
        CorpusRanges {
            width: (5, 70),
            instructions: (20, 100),
            inter_connectivity: (0.1, 0.9),
            one_qubit_rate: (0.0, 0.5),
            three_qubit_rate: (0.0, 0.3),
        }
    }
}

impl CorpusRanges {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let ok = self.width.0 <= self.width.1
            && self.width.0 >= 3
            && self.instructions.0 <= self.instructions.1
            && [self.inter_connectivity, self.one_qubit_rate, self.three_qubit_rate]
                .iter()
                .all(|&(a, b)| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a <= b)
            && self.one_qubit_rate.1 + self.three_qubit_rate.1 <= 1.0;
        if !ok {
            return Err(PipelineError::Config(format!("invalid corpus ranges {self:?}")));
        }
        Ok(())
    }
}

/// `count` generator parameter sets drawn from `ranges`.
pub fn sample_params(ranges: &CorpusRanges, count: usize, seed: u64) -> Result<Vec<GenParams>, PipelineError> {
    use rand::Rng;
    ranges.validate()?;
    let mut rng = seeded(seed);
    let unit = |rng: &mut crate::rng::Rng, (a, b): (f64, f64)| if a == b { a } else { rng.gen_range(a..=b) };
    Ok((0..count)
        .map(|_| GenParams {
            width: rng.gen_range(ranges.width.0..=ranges.width.1),
            min_instructions: rng.gen_range(ranges.instructions.0..=ranges.instructions.1),
            inter_connectivity: unit(&mut rng, ranges.inter_connectivity),
            one_qubit_rate: unit(&mut rng, ranges.one_qubit_rate),
            three_qubit_rate: unit(&mut rng, ranges.three_qubit_rate),
            seed: rng.gen(),
        })
        .collect())
}

pub fn generate_corpus(ranges: &CorpusRanges, count: usize, seed: u64) -> Result<Vec<(GenParams, Circuit)>, PipelineError> {
    sample_params(ranges, count, seed)?
        .into_par_iter()
        .map(|p| {
            let c = generate_random_circuit(&p)?;
            Ok((p, c))
        })
        .collect()
}

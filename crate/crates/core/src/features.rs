//! Static circuit descriptors fed to the topology predictor.
//!
//! The fourteen values, in their fixed order, are:
//!
//! | # | name | definition |
//! |---|------|------------|
//! | 0 | `num_instructions` | instruction count |
//! | 1 | `width` | qubits touched by at least one instruction (W) |
//! | 2 | `depth` | longest qubit-sharing chain, unit cost (D) |
//! | 3 | `gate_density` | (G1 + 2 G2 + 3 G3) / (W D) |
//! | 4 | `entanglement_variance` | ln(1 + sum_i (c_i - mean c)^2) / W, c_i = two-qubit gates on qubit i |
//! | 5 | `program_communication` | sum of interaction-graph degrees / (W (W - 1)) |
//! | 6 | `critical_depth` | two-qubit gates on one longest chain / all two-qubit gates |
//! | 7 | `entanglement_ratio` | two-qubit gates / all gates |
//! | 8..10 | `pr_mean`, `pr_std`, `pr_max` | statistics of the interaction-graph PageRank |
//! | 11..13 | `prop_1q`, `prop_2q`, `prop_3q` | gate-arity proportions |
//!
//! The entanglement variance uses squared deviations: the plain sum of
//! deviations from the mean is identically zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{critical_path, interaction_graph, logical_depth, Circuit, InteractionGraph};
use crate::scalar::Scalar;

pub const NUM_FEATURES: usize = 14;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "num_instructions",
    "width",
    "depth",
    "gate_density",
    "entanglement_variance",
    "program_communication",
    "critical_depth",
    "entanglement_ratio",
    "pr_mean",
    "pr_std",
    "pr_max",
    "prop_1q",
    "prop_2q",
    "prop_3q",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot describe an empty circuit")]
    EmptyCircuit,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PageRankConfig<T> {
    /// Stop once the L1 change between sweeps drops below this.
    pub eps: T,
    pub max_iters: usize,
    /// Optional damping factor; `None` runs the undamped update.
    pub damping: Option<T>,
}

impl<T: Scalar> Default for PageRankConfig<T> {
    fn default() -> Self {
        PageRankConfig {
            eps: T::of(1e-8),
            max_iters: 1000,
            damping: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank<T> {
    pub scores: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted PageRank over the interaction graph.
///
/// One sweep moves each qubit's score to its neighbours in proportion to edge
/// weight; qubits without interactions spread their score uniformly. The
/// applied step averages that sweep with the current vector (a lazy walk),
/// which has the same fixed points but also converges on bipartite graphs,
/// where the plain sweep oscillates forever. With `damping = Some(d)` the
/// sweep becomes `(1 - d) / W + d * sweep`.
pub fn pagerank<T: Scalar>(graph: &InteractionGraph, config: &PageRankConfig<T>) -> PageRank<T> {
    let n = graph.num_qubits();
    if n == 0 {
        return PageRank {
            scores: Vec::new(),
            iterations: 0,
            converged: true,
        };
    }
    let adjacency = graph.adjacency();
    let out_mass: Vec<T> = adjacency
        .iter()
        .map(|list| list.iter().map(|&(_, w)| T::of(w as f64)).sum())
        .collect();
    let inv_n = T::one() / T::of_usize(n);
    let half = T::of(0.5);

    let mut scores = vec![inv_n; n];
    let mut next = vec![T::zero(); n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        iterations += 1;
        let dangling: T = (0..n)
            .filter(|&v| adjacency[v].is_empty())
            .map(|v| scores[v])
            .sum();
        let base = dangling * inv_n;
        next.iter_mut().for_each(|x| *x = base);
        for (v, list) in adjacency.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let share = scores[v] / out_mass[v];
            for &(u, w) in list {
                next[u] += share * T::of(w as f64);
            }
        }
        if let Some(d) = config.damping {
            for x in next.iter_mut() {
                *x = (T::one() - d) * inv_n + d * *x;
            }
        }
        let mut change = T::zero();
        for (cur, new) in scores.iter_mut().zip(&next) {
            let lazy = half * (*cur + *new);
            change += (lazy - *cur).abs();
            *cur = lazy;
        }
        if change < config.eps {
            converged = true;
            break;
        }
    }
    let total: T = scores.iter().copied().sum();
    for x in scores.iter_mut() {
        *x /= total;
    }
    PageRank {
        scores,
        iterations,
        converged,
    }
}

/// The fourteen descriptors of one circuit, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureVector<T> {
    pub num_instructions: T,
    pub width: T,
    pub depth: T,
    pub gate_density: T,
    pub entanglement_variance: T,
    pub program_communication: T,
    pub critical_depth: T,
    pub entanglement_ratio: T,
    pub pr_mean: T,
    pub pr_std: T,
    pub pr_max: T,
    pub prop_1q: T,
    pub prop_2q: T,
    pub prop_3q: T,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn to_array(&self) -> [T; NUM_FEATURES] {
        [
            self.num_instructions,
            self.width,
            self.depth,
            self.gate_density,
            self.entanglement_variance,
            self.program_communication,
            self.critical_depth,
            self.entanglement_ratio,
            self.pr_mean,
            self.pr_std,
            self.pr_max,
            self.prop_1q,
            self.prop_2q,
            self.prop_3q,
        ]
    }

    pub fn from_slice(values: &[T]) -> Result<Self, FeatureError> {
        if values.len() != NUM_FEATURES {
            return Err(FeatureError::Dimension {
                expected: NUM_FEATURES,
                got: values.len(),
            });
        }
        Ok(FeatureVector {
            num_instructions: values[0],
            width: values[1],
            depth: values[2],
            gate_density: values[3],
            entanglement_variance: values[4],
            program_communication: values[5],
            critical_depth: values[6],
            entanglement_ratio: values[7],
            pr_mean: values[8],
            pr_std: values[9],
            pr_max: values[10],
            prop_1q: values[11],
            prop_2q: values[12],
            prop_3q: values[13],
        })
    }
}

pub fn compute_features<T: Scalar>(circuit: &Circuit) -> Result<FeatureVector<T>, FeatureError> {
    compute_features_with(circuit, &PageRankConfig::default())
}

pub fn compute_features_with<T: Scalar>(
    circuit: &Circuit,
    pr_config: &PageRankConfig<T>,
) -> Result<FeatureVector<T>, FeatureError> {
    if circuit.is_empty() {
        return Err(FeatureError::EmptyCircuit);
    }
    let f = |v: usize| T::of_usize(v);
    let n = circuit.len();
    let active = circuit.active_qubits();
    let w = active.len();
    let depth = logical_depth(circuit);
    let [g1, g2, g3] = circuit.arity_counts();

    let gate_density = f(g1 + 2 * g2 + 3 * g3) / (f(w) * f(depth));

    let mut two_qubit_load = vec![0usize; circuit.num_qubits()];
    for instr in circuit.instructions().iter().filter(|i| i.arity() == 2) {
        for &q in &instr.qubits {
            two_qubit_load[q] += 1;
        }
    }
    let loads: Vec<T> = active.iter().map(|&q| f(two_qubit_load[q])).collect();
    let mean_load = loads.iter().copied().sum::<T>() / f(w);
    let dispersion: T = loads.iter().map(|&c| (c - mean_load) * (c - mean_load)).sum();
    let entanglement_variance = (T::one() + dispersion).ln() / f(w);

    let graph = interaction_graph(circuit).induced(&active);
    let degree_sum: usize = (0..w).map(|q| graph.degree(q)).sum();
    let program_communication = if w > 1 {
        f(degree_sum) / (f(w) * f(w - 1))
    } else {
        T::zero()
    };

    let on_path = critical_path(circuit)
        .into_iter()
        .filter(|&id| circuit.instructions()[id].arity() == 2)
        .count();
    let critical_depth = if g2 > 0 { f(on_path) / f(g2) } else { T::zero() };
    let entanglement_ratio = f(g2) / f(n);

    let pr = pagerank(&graph, pr_config).scores;
    let pr_mean = pr.iter().copied().sum::<T>() / f(w);
    let pr_std = (pr.iter().map(|&p| (p - pr_mean) * (p - pr_mean)).sum::<T>() / f(w)).sqrt();
    let pr_max = pr.iter().copied().fold(T::neg_infinity(), T::max);

    Ok(FeatureVector {
        num_instructions: f(n),
        width: f(w),
        depth: f(depth),
        gate_density,
        entanglement_variance,
        program_communication,
        critical_depth,
        entanglement_ratio,
        pr_mean,
        pr_std,
        pr_max,
        prop_1q: f(g1) / f(n),
        prop_2q: f(g2) / f(n),
        prop_3q: f(g3) / f(n),
    })
}

/// Per-feature z-score statistics fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    /// Standard deviations with zeros replaced by one.
    pub std: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    /// Fits population statistics column-wise. Rows must share one length.
    pub fn fit<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, FeatureError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let count = T::of_usize(rows.len().max(1));
        let mut mean = vec![T::zero(); dim];
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(FeatureError::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![T::zero(); dim];
        for row in rows {
            for ((v, &x), &m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / count).sqrt();
                if s > T::zero() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &[T]) -> Result<Vec<T>, FeatureError> {
        self.check(x)?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, z: &[T]) -> Result<Vec<T>, FeatureError> {
        self.check(z)?;
        Ok(z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect())
    }

    fn check(&self, x: &[T]) -> Result<(), FeatureError> {
        if x.len() != self.dim() {
            return Err(FeatureError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

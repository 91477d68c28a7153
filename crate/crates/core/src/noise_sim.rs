//! Dense state-vector simulation with depolarizing gate noise.
//!
//! Basis index bit `q` holds qubit `q`; bitstrings are printed with qubit 0
//! leftmost. Noise is sampled per trajectory: after each gate every operand
//! independently, with probability `p1`, receives a Pauli drawn uniformly
//! from `{I, X, Y, Z}`. A `k`-qubit gate therefore sees the `k`-fold tensor
//! power of the one-qubit depolarizing channel.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, GateTag};
use crate::mapper::RoutedCircuit;
use crate::rng::{split, Rng};
use crate::scalar::Scalar;

pub const MAX_QUBITS: usize = 14;
pub const DEFAULT_SHOTS: u64 = 5000;
/// Shots per independently seeded batch.
pub const SHOT_BATCH: u64 = 250;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{n} qubits exceeds the simulator limit of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("gate {0} is not supported by the simulator")]
    UnsupportedGate(String),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("malformed operation: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// Amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self, SimError> {
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits { n, max: MAX_QUBITS });
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[0] = Complex::new(T::one(), T::zero());
        Ok(StateVector { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), SimError> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n || qubits[..i].contains(&q) {
                return Err(SimError::Malformed(format!("operands {qubits:?} on {} qubits", self.n)));
            }
        }
        Ok(())
    }

    /// Applies `kind` to `qubits`.
    pub fn apply(&mut self, kind: &GateKind, qubits: &[usize]) -> Result<(), SimError> {
        self.check_qubits(qubits)?;
        if qubits.len() != kind.tag.arity() || kind.params.len() != kind.tag.num_params() {
            return Err(SimError::Malformed(format!("{} on {qubits:?}", kind.tag)));
        }
        let c = |re: f64, im: f64| Complex::new(T::of(re), T::of(im));
        let half = |theta: f64| (theta / 2.0).sin_cos();
        match kind.tag {
            GateTag::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(qubits[0], [[h, h], [h, -h]]);
            }
            GateTag::X => self.apply_pauli(qubits[0], Pauli::X),
            GateTag::Y => self.apply_pauli(qubits[0], Pauli::Y),
            GateTag::Z => self.apply_pauli(qubits[0], Pauli::Z),
            GateTag::S => self.apply_phase(qubits[0], c(0.0, 1.0)),
            GateTag::T => self.apply_phase(qubits[0], c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            GateTag::Rx => {
                let (s, co) = half(kind.params[0]);
                self.apply_1q(qubits[0], [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]);
            }
            GateTag::Ry => {
                let (s, co) = half(kind.params[0]);
                self.apply_1q(qubits[0], [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]);
            }
            GateTag::Rz => {
                let (s, co) = half(kind.params[0]);
                self.apply_1q(qubits[0], [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]);
            }
            GateTag::Cx => self.apply_controlled_x(&qubits[..1], qubits[1]),
            GateTag::Ccx => self.apply_controlled_x(&qubits[..2], qubits[2]),
            GateTag::Cz => {
                let mask = (1 << qubits[0]) | (1 << qubits[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            GateTag::Swap => {
                let (a, b) = (1usize << qubits[0], 1usize << qubits[1]);
                for i in 0..self.amps.len() {
                    if i & a != 0 && i & b == 0 {
                        self.amps.swap(i, i ^ a ^ b);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex<T>; 2]; 2]) {
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_phase(&mut self, q: usize, phase: Complex<T>) {
        let bit = 1 << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = *a * phase;
            }
        }
    }

    fn apply_controlled_x(&mut self, controls: &[usize], target: usize) {
        let mask = controls.iter().fold(0usize, |m, &q| m | (1 << q));
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & mask == mask && i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let bit = 1 << q;
        match p {
            Pauli::I => {}
            Pauli::X => {
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            Pauli::Z => self.apply_phase(q, Complex::new(-T::one(), T::zero())),
            Pauli::Y => {
                // Y = [[0, -i], [i, 0]]
                let i_unit = Complex::new(T::zero(), T::one());
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                        self.amps[i] = -i_unit * a1;
                        self.amps[i | bit] = i_unit * a0;
                    }
                }
            }
        }
    }
}

/// Formats basis index `index` with qubit 0 leftmost.
pub fn bitstring(index: usize, n: usize) -> String {
    (0..n).map(|q| if index >> q & 1 == 1 { '1' } else { '0' }).collect()
}

/// Inverse of [`bitstring`].
pub fn parse_bitstring(s: &str) -> Option<usize> {
    s.chars().enumerate().try_fold(0usize, |acc, (q, ch)| match ch {
        '0' => Some(acc),
        '1' => Some(acc | 1 << q),
        _ => None,
    })
}

/// Exact outcome probabilities over all `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub num_qubits: usize,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, bits: &str) -> f64 {
        parse_bitstring(bits)
            .filter(|_| bits.len() == self.num_qubits)
            .map_or(0.0, |i| self.probabilities[i])
    }

    /// Nonzero entries keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (bitstring(i, self.num_qubits), p))
            .collect()
    }

    /// Basis indices whose probability is within `1e-9` of the maximum.
    pub fn modal_outcomes(&self) -> Vec<usize> {
        let max = self.probabilities.iter().copied().fold(0.0, f64::max);
        (0..self.probabilities.len())
            .filter(|&i| self.probabilities[i] >= max - 1e-9)
            .collect()
    }
}

/// One gate of a noisy program: an optional unitary plus the qubits that
/// receive depolarizing noise afterwards.
#[derive(Debug, Clone, PartialEq)]
struct Op {
    kind: Option<GateKind>,
    qubits: Vec<usize>,
    noisy: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Program {
    num_qubits: usize,
    ops: Vec<Op>,
}

impl Program {
    fn from_circuit(circuit: &Circuit) -> Result<Self, SimError> {
        check_width(circuit.num_qubits())?;
        Ok(Program {
            num_qubits: circuit.num_qubits(),
            ops: circuit
                .instructions()
                .iter()
                .map(|ins| Op {
                    kind: Some(ins.kind.clone()),
                    qubits: ins.qubits.clone(),
                    noisy: ins.qubits.clone(),
                })
                .collect(),
        })
    }

    /// Logical-frame view of a routed circuit: gates act on their logical
    /// operands, SWAPs act as identity but still depolarize the logical
    /// qubits they move.
    fn from_routed(routed: &RoutedCircuit) -> Result<Self, SimError> {
        check_width(routed.num_qubits)?;
        let mut ops = Vec::with_capacity(routed.instructions.len());
        for ins in &routed.instructions {
            let logical: Vec<usize> = ins.qubits.iter().flatten().copied().collect();
            if ins.is_swap() {
                ops.push(Op {
                    kind: None,
                    qubits: Vec::new(),
                    noisy: logical,
                });
            } else {
                if logical.len() != ins.qubits.len() {
                    return Err(SimError::Malformed(format!("gate {} acts on a spectator", ins.id)));
                }
                ops.push(Op {
                    kind: Some(ins.kind.clone()),
                    qubits: logical.clone(),
                    noisy: logical,
                });
            }
        }
        Ok(Program {
            num_qubits: routed.num_qubits,
            ops,
        })
    }

    fn ideal_state<T: Scalar>(&self) -> Result<StateVector<T>, SimError> {
        let mut sv = StateVector::zero(self.num_qubits)?;
        for op in &self.ops {
            if let Some(kind) = &op.kind {
                sv.apply(kind, &op.qubits)?;
            }
        }
        Ok(sv)
    }
}

fn check_width(n: usize) -> Result<(), SimError> {
    if n > MAX_QUBITS {
        return Err(SimError::TooManyQubits { n, max: MAX_QUBITS });
    }
    Ok(())
}

fn distribution_of<T: Scalar>(sv: &StateVector<T>) -> Distribution {
    Distribution {
        num_qubits: sv.num_qubits(),
        probabilities: sv.probabilities().into_iter().map(Scalar::as_f64).collect(),
    }
}

pub fn ideal_distribution(circuit: &Circuit) -> Result<Distribution, SimError> {
    ideal_distribution_in::<f64>(circuit)
}

/// [`ideal_distribution`] computed in scalar type `T`.
pub fn ideal_distribution_in<T: Scalar>(circuit: &Circuit) -> Result<Distribution, SimError> {
    Ok(distribution_of(&Program::from_circuit(circuit)?.ideal_state::<T>()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability per qubit per gate.
    pub p1: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p1: 0.01 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.p1) {
            return Err(SimError::InvalidNoise(format!("p1 = {} is not in [0, 1]", self.p1)));
        }
        Ok(())
    }

    /// Probability that a gate of `arity` draws a Pauli on at least one
    /// operand.
    pub fn event_probability(&self, arity: usize) -> f64 {
        1.0 - (1.0 - self.p1).powi(arity as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub num_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl ShotCounts {
    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }
}

pub fn noisy_sample(circuit: &Circuit, noise: &NoiseModel, shots: u64, seed: u64) -> Result<ShotCounts, SimError> {
    sample_program(&Program::from_circuit(circuit)?, noise, shots, seed)
}

/// Samples a routed circuit in the logical frame; see [`Program::from_routed`].
pub fn noisy_sample_routed(
    routed: &RoutedCircuit,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<ShotCounts, SimError> {
    sample_program(&Program::from_routed(routed)?, noise, shots, seed)
}

/// Ideal distribution of a routed circuit's logical content.
pub fn ideal_distribution_routed(routed: &RoutedCircuit) -> Result<Distribution, SimError> {
    Ok(distribution_of(&Program::from_routed(routed)?.ideal_state::<f64>()?))
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut Rng) -> usize {
    let r = rng.gen::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= r).min(cdf.len() - 1)
}

/// Shots are split into batches of [`SHOT_BATCH`]; batch `b` draws from
/// stream `b` of `seed`, so results do not depend on thread count.
fn sample_program(program: &Program, noise: &NoiseModel, shots: u64, seed: u64) -> Result<ShotCounts, SimError> {
    noise.validate()?;
    let ideal = program.ideal_state::<f64>()?;
    let ideal_cdf = cumulative(&ideal.probabilities());
    let n = program.num_qubits;
    let batches = shots.div_ceil(SHOT_BATCH);
    let per_batch: Vec<Result<Vec<usize>, SimError>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = split(seed, b);
            let count = SHOT_BATCH.min(shots - b * SHOT_BATCH);
            (0..count)
                .map(|_| sample_trajectory(program, noise, &ideal_cdf, &mut rng))
                .collect()
        })
        .collect();
    let mut counts = BTreeMap::new();
    for batch in per_batch {
        for outcome in batch? {
            *counts.entry(bitstring(outcome, n)).or_insert(0) += 1;
        }
    }
    Ok(ShotCounts {
        num_qubits: n,
        shots,
        counts,
    })
}

fn sample_trajectory(program: &Program, noise: &NoiseModel, ideal_cdf: &[f64], rng: &mut Rng) -> Result<usize, SimError> {
    let mut errors: Vec<(usize, usize, Pauli)> = Vec::new();
    if noise.p1 > 0.0 {
        for (i, op) in program.ops.iter().enumerate() {
            for &q in &op.noisy {
                if rng.gen::<f64>() < noise.p1 {
                    let p = Pauli::ALL[rng.gen_range(0..4)];
                    if p != Pauli::I {
                        errors.push((i, q, p));
                    }
                }
            }
        }
    }
    if errors.is_empty() {
        return Ok(draw(ideal_cdf, rng));
    }
    let mut sv = StateVector::<f64>::zero(program.num_qubits)?;
    let mut next = errors.iter().peekable();
    for (i, op) in program.ops.iter().enumerate() {
        if let Some(kind) = &op.kind {
            sv.apply(kind, &op.qubits)?;
        }
        while let Some(&&(at, q, p)) = next.peek() {
            if at != i {
                break;
            }
            sv.apply_pauli(q, p);
            next.next();
        }
    }
    Ok(draw(&cumulative(&sv.probabilities()), rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean normalized Hamming distance to the nearest modal ideal outcome.
    pub bitwise_error: f64,
    pub tvd: f64,
    /// `1 - bitwise_error`.
    pub fidelity: f64,
}

pub fn bitwise_error(ideal: &Distribution, counts: &ShotCounts) -> Result<ErrorReport, SimError> {
    if ideal.num_qubits != counts.num_qubits {
        return Err(SimError::WidthMismatch {
            expected: ideal.num_qubits,
            got: counts.num_qubits,
        });
    }
    let n = ideal.num_qubits;
    let total: u64 = counts.counts.values().sum();
    if total == 0 || total != counts.shots {
        return Err(SimError::Malformed(format!("counts sum to {total}, shots = {}", counts.shots)));
    }
    let modal = ideal.modal_outcomes();
    let mut observed = vec![0.0; ideal.probabilities.len()];
    let mut hamming = 0.0;
    for (bits, &c) in &counts.counts {
        let idx = parse_bitstring(bits)
            .filter(|_| bits.len() == n)
            .ok_or(SimError::WidthMismatch {
                expected: n,
                got: bits.len(),
            })?;
        observed[idx] += c as f64 / total as f64;
        let d = modal.iter().map(|&m| (m ^ idx).count_ones()).min().unwrap_or(0);
        hamming += c as f64 * d as f64;
    }
    let bitwise = if n == 0 { 0.0 } else { hamming / (total as f64 * n as f64) };
    let tvd = 0.5
        * ideal
            .probabilities
            .iter()
            .zip(&observed)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>();
    Ok(ErrorReport {
        bitwise_error: bitwise,
        tvd,
        fidelity: 1.0 - bitwise,
    })
}

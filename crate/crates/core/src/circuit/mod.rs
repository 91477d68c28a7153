//! Logical circuit representation and the analyses every later stage uses.

mod generate;
mod json;
mod qasm;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_random_circuit, GenParams};
pub use json::{parse_json, to_json};
pub use qasm::{parse_qasm_subset, QasmCircuit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("malformed circuit JSON: {0}")]
    Json(String),
    #[error("instruction {instr}: qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange {
        instr: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("instruction {instr}: duplicate qubit {qubit}")]
    DuplicateQubit { instr: usize, qubit: usize },
    #[error("instruction {instr}: unknown gate tag `{tag}`")]
    UnknownGate { instr: usize, tag: String },
    #[error("instruction {instr}: gate {tag} expects {expected} qubit(s), got {got}")]
    Arity {
        instr: usize,
        tag: GateTag,
        expected: usize,
        got: usize,
    },
    #[error("instruction {instr}: gate {tag} expects {expected} parameter(s), got {got}")]
    Params {
        instr: usize,
        tag: GateTag,
        expected: usize,
        got: usize,
    },
    #[error("instruction {instr}: SWAP is not accepted in logical input")]
    SwapInLogicalInput { instr: usize },
    #[error("circuit must declare at least one qubit")]
    NoQubits,
    #[error("line {line}: multiple quantum registers are not supported")]
    MultipleQregs { line: usize },
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, name: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

/// Gate tags understood by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateTag {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Swap,
    Ccx,
}

impl GateTag {
    pub const ALL: [GateTag; 13] = [
        GateTag::H,
        GateTag::X,
        GateTag::Y,
        GateTag::Z,
        GateTag::S,
        GateTag::T,
        GateTag::Rx,
        GateTag::Ry,
        GateTag::Rz,
        GateTag::Cx,
        GateTag::Cz,
        GateTag::Swap,
        GateTag::Ccx,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateTag::H
            | GateTag::X
            | GateTag::Y
            | GateTag::Z
            | GateTag::S
            | GateTag::T
            | GateTag::Rx
            | GateTag::Ry
            | GateTag::Rz => 1,
            GateTag::Cx | GateTag::Cz | GateTag::Swap => 2,
            GateTag::Ccx => 3,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateTag::Rx | GateTag::Ry | GateTag::Rz => 1,
            _ => 0,
        }
    }

    /// Lower-case mnemonic used by both the JSON and QASM formats.
    pub fn name(self) -> &'static str {
        match self {
            GateTag::H => "h",
            GateTag::X => "x",
            GateTag::Y => "y",
            GateTag::Z => "z",
            GateTag::S => "s",
            GateTag::T => "t",
            GateTag::Rx => "rx",
            GateTag::Ry => "ry",
            GateTag::Rz => "rz",
            GateTag::Cx => "cx",
            GateTag::Cz => "cz",
            GateTag::Swap => "swap",
            GateTag::Ccx => "ccx",
        }
    }
}

impl fmt::Display for GateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        GateTag::ALL
            .iter()
            .copied()
            .find(|t| t.name() == lower)
            .ok_or_else(|| s.to_string())
    }
}

/// A gate tag together with its rotation angles (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateKind {
    pub tag: GateTag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
}

impl GateKind {
    pub fn new(tag: GateTag) -> Self {
        GateKind {
            tag,
            params: Vec::new(),
        }
    }

    pub fn with_params(tag: GateTag, params: Vec<f64>) -> Self {
        GateKind { tag, params }
    }

    pub fn arity(&self) -> usize {
        self.tag.arity()
    }
}

impl From<GateTag> for GateKind {
    fn from(tag: GateTag) -> Self {
        GateKind::new(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub id: usize,
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Instruction {
    pub fn arity(&self) -> usize {
        self.qubits.len()
    }
}

/// An ordered instruction list over `num_qubits` logical qubits.
///
/// Instruction ids are always `0..n` in program order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    /// Builds a logical circuit, assigning ids in order and checking operands.
    /// SWAP is rejected: it only appears after routing.
    pub fn new<I, K>(num_qubits: usize, gates: I) -> Result<Self, CircuitError>
    where
        I: IntoIterator<Item = (K, Vec<usize>)>,
        K: Into<GateKind>,
    {
        if num_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        let mut instructions = Vec::new();
        for (id, (kind, qubits)) in gates.into_iter().enumerate() {
            let kind = kind.into();
            check_instruction(id, &kind, &qubits, num_qubits)?;
            if kind.tag == GateTag::Swap {
                return Err(CircuitError::SwapInLogicalInput { instr: id });
            }
            instructions.push(Instruction { id, kind, qubits });
        }
        Ok(Circuit {
            num_qubits,
            instructions,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Qubits touched by at least one instruction, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_qubits];
        for instr in &self.instructions {
            for &q in &instr.qubits {
                seen[q] = true;
            }
        }
        (0..self.num_qubits).filter(|&q| seen[q]).collect()
    }

    /// Number of instructions of each arity, indexed `[1q, 2q, 3q]`.
    pub fn arity_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for instr in &self.instructions {
            counts[instr.arity() - 1] += 1;
        }
        counts
    }
}

pub(crate) fn check_instruction(
    id: usize,
    kind: &GateKind,
    qubits: &[usize],
    num_qubits: usize,
) -> Result<(), CircuitError> {
    let tag = kind.tag;
    if qubits.len() != tag.arity() {
        return Err(CircuitError::Arity {
            instr: id,
            tag,
            expected: tag.arity(),
            got: qubits.len(),
        });
    }
    if kind.params.len() != tag.num_params() {
        return Err(CircuitError::Params {
            instr: id,
            tag,
            expected: tag.num_params(),
            got: kind.params.len(),
        });
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= num_qubits {
            return Err(CircuitError::QubitOutOfRange {
                instr: id,
                qubit: q,
                num_qubits,
            });
        }
        if qubits[..i].contains(&q) {
            return Err(CircuitError::DuplicateQubit { instr: id, qubit: q });
        }
    }
    Ok(())
}

/// Symmetric pair-count graph: `w(u, v)` is the number of instructions that
/// contain both `u` and `v`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    num_qubits: usize,
    weights: BTreeMap<(usize, usize), u64>,
}

impl InteractionGraph {
    pub fn new(num_qubits: usize) -> Self {
        InteractionGraph {
            num_qubits,
            weights: BTreeMap::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn add(&mut self, u: usize, v: usize, count: u64) {
        assert!(u != v, "self-interaction is undefined");
        assert!(u < self.num_qubits && v < self.num_qubits);
        *self.weights.entry(ordered(u, v)).or_insert(0) += count;
    }

    pub fn weight(&self, u: usize, v: usize) -> u64 {
        if u == v {
            return 0;
        }
        self.weights.get(&ordered(u, v)).copied().unwrap_or(0)
    }

    /// Present pairs `(u, v)` with `u < v`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    /// Weighted adjacency lists, one per qubit, neighbours ascending.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.num_qubits];
        for (&(u, v), &w) in &self.weights {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Number of distinct interaction partners of `q`.
    pub fn degree(&self, q: usize) -> usize {
        self.weights
            .keys()
            .filter(|&&(u, v)| u == q || v == q)
            .count()
    }

    /// Sum of weights incident to `q`.
    pub fn strength(&self, q: usize) -> u64 {
        self.weights
            .iter()
            .filter(|(&(u, v), _)| u == q || v == q)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Restricts the graph to `keep` and relabels those qubits `0..keep.len()`.
    pub fn induced(&self, keep: &[usize]) -> InteractionGraph {
        let mut index = vec![usize::MAX; self.num_qubits];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let mut out = InteractionGraph::new(keep.len());
        for (&(u, v), &w) in &self.weights {
            if index[u] != usize::MAX && index[v] != usize::MAX {
                out.add(index[u], index[v], w);
            }
        }
        out
    }
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

pub fn interaction_graph(circuit: &Circuit) -> InteractionGraph {
    let mut graph = InteractionGraph::new(circuit.num_qubits());
    for instr in circuit.instructions() {
        for (i, &u) in instr.qubits.iter().enumerate() {
            for &v in &instr.qubits[i + 1..] {
                graph.add(u, v, 1);
            }
        }
    }
    graph
}

/// Longest chain of instructions linked by shared qubits, unit cost per
/// instruction.
pub fn logical_depth(circuit: &Circuit) -> usize {
    let mut frontier = vec![0usize; circuit.num_qubits()];
    let mut depth = 0;
    for instr in circuit.instructions() {
        let level = instr.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
        for &q in &instr.qubits {
            frontier[q] = level;
        }
        depth = depth.max(level);
    }
    depth
}

/// One longest dependency chain, as instruction ids in program order.
///
/// Built by a program-order DP over immediate predecessors (the previous
/// instruction on each operand). Ties pick the lowest id, both for the chain
/// end and for each predecessor step.
pub fn critical_path(circuit: &Circuit) -> Vec<usize> {
    let n = circuit.len();
    if n == 0 {
        return Vec::new();
    }
    let mut last_on = vec![None::<usize>; circuit.num_qubits()];
    let mut len = vec![0usize; n];
    let mut parent = vec![None::<usize>; n];
    for instr in circuit.instructions() {
        let mut best: Option<usize> = None;
        for &q in &instr.qubits {
            if let Some(p) = last_on[q] {
                best = match best {
                    Some(b) if len[b] > len[p] || (len[b] == len[p] && b < p) => Some(b),
                    _ => Some(p),
                };
            }
        }
        len[instr.id] = best.map_or(1, |b| len[b] + 1);
        parent[instr.id] = best;
        for &q in &instr.qubits {
            last_on[q] = Some(instr.id);
        }
    }
    let max_len = *len.iter().max().unwrap();
    let mut cur = len.iter().position(|&l| l == max_len);
    let mut path = Vec::with_capacity(max_len);
    while let Some(id) = cur {
        path.push(id);
        cur = parent[id];
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circ(n: usize, gates: &[(GateTag, &[usize])]) -> Circuit {
        Circuit::new(n, gates.iter().map(|(t, q)| (*t, q.to_vec()))).unwrap()
    }

    #[test]
    fn arity_is_a_function_of_tag() {
        for tag in GateTag::ALL {
            let expected = match tag {
                GateTag::Cx | GateTag::Cz | GateTag::Swap => 2,
                GateTag::Ccx => 3,
                _ => 1,
            };
            assert_eq!(tag.arity(), expected);
            assert_eq!(tag.name().parse::<GateTag>().unwrap(), tag);
        }
    }

    #[test]
    fn rejects_bad_instructions() {
        let dup = Circuit::new(2, [(GateTag::Cx, vec![0, 0])]);
        assert!(matches!(dup, Err(CircuitError::DuplicateQubit { instr: 0, qubit: 0 })));
        let range = Circuit::new(2, [(GateTag::H, vec![0]), (GateTag::H, vec![2])]);
        assert!(matches!(range, Err(CircuitError::QubitOutOfRange { instr: 1, .. })));
        let swap = Circuit::new(2, [(GateTag::Swap, vec![0, 1])]);
        assert!(matches!(swap, Err(CircuitError::SwapInLogicalInput { instr: 0 })));
        let rx = Circuit::new(1, [(GateTag::Rx, vec![0])]);
        assert!(matches!(rx, Err(CircuitError::Params { .. })));
    }

    #[test]
    fn interaction_graph_counts_pairs() {
        let c = circ(
            3,
            &[
                (GateTag::Cx, &[0, 1]),
                (GateTag::Cx, &[0, 1]),
                (GateTag::Ccx, &[0, 1, 2]),
            ],
        );
        let g = interaction_graph(&c);
        assert_eq!(g.weight(0, 1), 3);
        assert_eq!(g.weight(1, 0), 3);
        assert_eq!(g.weight(0, 2), 1);
        assert_eq!(g.weight(1, 2), 1);
        assert_eq!(g.total_weight(), 5);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.strength(0), 4);
    }

    #[test]
    fn single_qubit_circuit_has_empty_graph() {
        let c = circ(3, &[(GateTag::H, &[0]), (GateTag::X, &[2])]);
        assert!(interaction_graph(&c).is_empty());
    }

    #[test]
    fn depth_examples() {
        let parallel = circ(3, &[(GateTag::H, &[0]), (GateTag::H, &[1]), (GateTag::H, &[2])]);
        assert_eq!(logical_depth(&parallel), 1);
        let chain = circ(
            4,
            &[(GateTag::Cx, &[0, 1]), (GateTag::Cx, &[1, 2]), (GateTag::Cx, &[2, 3])],
        );
        assert_eq!(logical_depth(&chain), 3);
        assert_eq!(critical_path(&chain), vec![0, 1, 2]);
        assert_eq!(logical_depth(&Circuit::new::<_, GateTag>(2, []).unwrap()), 0);
    }

    #[test]
    fn critical_path_prefers_lowest_ids() {
        // Two disjoint chains of equal length: the one ending at the lower id wins.
        let c = circ(
            4,
            &[
                (GateTag::H, &[0]),
                (GateTag::H, &[2]),
                (GateTag::Cx, &[0, 1]),
                (GateTag::Cx, &[2, 3]),
            ],
        );
        assert_eq!(critical_path(&c), vec![0, 2]);
    }

    #[test]
    fn induced_subgraph_relabels() {
        let c = circ(5, &[(GateTag::Cx, &[1, 4]), (GateTag::Cz, &[1, 3])]);
        let g = interaction_graph(&c).induced(&[1, 3, 4]);
        assert_eq!(g.num_qubits(), 3);
        assert_eq!(g.weight(0, 2), 1);
        assert_eq!(g.weight(0, 1), 1);
        assert_eq!(g.weight(1, 2), 0);
    }
}

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Circuit, CircuitError, GateKind, GateTag};
use crate::rng::seeded;

const ONE_QUBIT_TAGS: [GateTag; 6] = [
    GateTag::H,
    GateTag::X,
    GateTag::Y,
    GateTag::Z,
    GateTag::S,
    GateTag::T,
];
const TWO_QUBIT_TAGS: [GateTag; 2] = [GateTag::Cx, GateTag::Cz];

/// Parameters of one randomized instruction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Number of distinct qubits the circuit ends up using.
    pub width: usize,
    pub min_instructions: usize,
    /// Probability that an operand is drawn from already-used qubits.
    pub inter_connectivity: f64,
    pub one_qubit_rate: f64,
    pub three_qubit_rate: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), CircuitError> {
        let bad = |m: &str| Err(CircuitError::InvalidParams(m.to_string()));
        if self.width < 3 {
            return bad("width must be at least 3");
        }
        for (name, p) in [
            ("inter_connectivity", self.inter_connectivity),
            ("one_qubit_rate", self.one_qubit_rate),
            ("three_qubit_rate", self.three_qubit_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.one_qubit_rate + self.three_qubit_rate > 1.0 {
            return bad("one_qubit_rate + three_qubit_rate must not exceed 1");
        }
        Ok(())
    }
}

/// Generates a random logical circuit.
///
/// Each instruction draws its arity (1 with `one_qubit_rate`, 3 with
/// `three_qubit_rate`, otherwise 2), then each operand: an already-used qubit
/// with probability `inter_connectivity`, else a fresh one. Generation stops at
/// the first index `>= min_instructions` once all `width` qubits are in use.
/// Past `min_instructions` the first operand of every instruction is forced
/// fresh while unused qubits remain, so the loop ends for any rates.
pub fn generate_random_circuit(params: &GenParams) -> Result<Circuit, CircuitError> {
    params.validate()?;
    let mut rng = seeded(params.seed);
    let width = params.width;
    let mut used: Vec<usize> = Vec::with_capacity(width);
    let mut unused: Vec<usize> = (0..width).collect();
    let mut gates: Vec<(GateKind, Vec<usize>)> = Vec::new();

    loop {
        let index = gates.len();
        if index >= params.min_instructions && unused.is_empty() {
            break;
        }
        let draw: f64 = rng.gen();
        let (arity, tag) = if draw < params.one_qubit_rate {
            (1, *ONE_QUBIT_TAGS.choose(&mut rng).unwrap())
        } else if draw < params.one_qubit_rate + params.three_qubit_rate {
            (3, GateTag::Ccx)
        } else {
            (2, *TWO_QUBIT_TAGS.choose(&mut rng).unwrap())
        };

        let mut operands: Vec<usize> = Vec::with_capacity(arity);
        for k in 0..arity {
            let force_fresh = k == 0 && index >= params.min_instructions;
            let reuse: Vec<usize> = used
                .iter()
                .copied()
                .filter(|q| !operands.contains(q))
                .collect();
            let want_used = rng.gen::<f64>() < params.inter_connectivity;
            let q = if !force_fresh && want_used && !reuse.is_empty() {
                reuse[rng.gen_range(0..reuse.len())]
            } else if !unused.is_empty() {
                let pos = rng.gen_range(0..unused.len());
                let q = unused.remove(pos);
                used.push(q);
                q
            } else {
                reuse[rng.gen_range(0..reuse.len())]
            };
            operands.push(q);
        }
        gates.push((GateKind::new(tag), operands));
    }
    Circuit::new(width, gates)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(width: usize, min: usize, inter: f64, one: f64, three: f64, seed: u64) -> GenParams {
        GenParams {
            width,
            min_instructions: min,
            inter_connectivity: inter,
            one_qubit_rate: one,
            three_qubit_rate: three,
            seed,
        }
    }

    #[test]
    fn zero_interconnectivity_uses_fresh_qubits_first() {
        let c = generate_random_circuit(&params(5, 20, 0.0, 0.0, 0.0, 3)).unwrap();
        let first: Vec<usize> = c
            .instructions()
            .iter()
            .flat_map(|i| i.qubits.iter().copied())
            .take(5)
            .collect();
        let mut sorted = first.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5, "{first:?}");
    }

    #[test]
    fn degenerate_arity_distribution() {
        let c = generate_random_circuit(&params(5, 20, 0.5, 1.0, 0.0, 7)).unwrap();
        assert!(c.instructions().iter().all(|i| i.arity() == 1));
        assert_eq!(c.active_qubits().len(), 5);
        assert!(c.len() >= 20);
    }

    #[test]
    fn full_interconnectivity_still_terminates() {
        let c = generate_random_circuit(&params(8, 20, 1.0, 1.0, 0.0, 1)).unwrap();
        assert_eq!(c.active_qubits().len(), 8);
        assert!(c.len() >= 20);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(generate_random_circuit(&params(2, 20, 0.5, 0.3, 0.1, 1)).is_err());
        assert!(generate_random_circuit(&params(5, 20, 0.5, 0.8, 0.3, 1)).is_err());
        assert!(generate_random_circuit(&params(5, 20, 1.5, 0.3, 0.1, 1)).is_err());
    }
}

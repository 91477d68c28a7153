use std::f64::consts::PI;

use atomlayout::circuit::{generate_random_circuit, Circuit, GateKind, GateTag, GenParams};
use atomlayout::noise_sim::{ideal_distribution, noisy_sample, NoiseModel};
use atomlayout::StateVector;
use proptest::prelude::*;

fn circuit(seed: u64, width: usize) -> Circuit {
    let mut c = generate_random_circuit(&GenParams {
        width,
        min_instructions: 25,
        inter_connectivity: 0.5,
        one_qubit_rate: 0.4,
        three_qubit_rate: 0.15,
        seed,
    })
    .unwrap();
    // sprinkle rotations so every gate family is exercised
    let extra = c.instructions().iter().map(|i| (i.kind.clone(), i.qubits.clone())).chain([
        (GateKind::with_params(GateTag::Rx, vec![0.3 + seed as f64 % 1.7]), vec![0]),
        (GateKind::with_params(GateTag::Ry, vec![1.1]), vec![1]),
        (GateKind::with_params(GateTag::Rz, vec![-0.7]), vec![2]),
    ]);
    c = Circuit::new(width, extra.collect::<Vec<_>>()).unwrap();
    c
}

/// Reversed circuit with every gate replaced by its inverse (up to phase).
fn inverse(c: &Circuit) -> Vec<(GateKind, Vec<usize>)> {
    c.instructions()
        .iter()
        .rev()
        .map(|i| {
            let kind = match i.kind.tag {
                GateTag::S => GateKind::with_params(GateTag::Rz, vec![-PI / 2.0]),
                GateTag::T => GateKind::with_params(GateTag::Rz, vec![-PI / 4.0]),
                GateTag::Rx | GateTag::Ry | GateTag::Rz => GateKind::with_params(i.kind.tag, vec![-i.kind.params[0]]),
                _ => i.kind.clone(),
            };
            (kind, i.qubits.clone())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn circuit_then_inverse_returns_to_zero(seed in any::<u64>(), width in 3usize..9) {
        let c = circuit(seed, width);
        let ops: Vec<_> = c.instructions().iter().map(|i| (i.kind.clone(), i.qubits.clone())).chain(inverse(&c)).collect();
        let round = Circuit::new(width, ops).unwrap();
        let d = ideal_distribution(&round).unwrap();
        prop_assert!((d.probabilities[0] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn gates_preserve_the_norm(seed in any::<u64>(), width in 3usize..10) {
        let c = circuit(seed, width);
        let mut psi = StateVector::zero(width).unwrap();
        let mut before = psi.norm_sqr();
        for i in c.instructions() {
            psi.apply(&i.kind, &i.qubits).unwrap();
            let after = psi.norm_sqr();
            prop_assert!((after.sqrt() - before.sqrt()).abs() <= 1e-10);
            before = after;
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), width in 3usize..7) {
        let c = circuit(seed, width);
        let noise = NoiseModel { p1: 0.05 };
        let a = noisy_sample(&c, &noise, 600, seed).unwrap();
        prop_assert_eq!(&a, &noisy_sample(&c, &noise, 600, seed).unwrap());
        prop_assert_eq!(a.counts.values().sum::<u64>(), 600);
    }
}

#[test]
fn different_seeds_give_different_counts() {
    let c = circuit(4, 5);
    let noise = NoiseModel { p1: 0.05 };
    assert_ne!(noisy_sample(&c, &noise, 2000, 1).unwrap(), noisy_sample(&c, &noise, 2000, 2).unwrap());
}

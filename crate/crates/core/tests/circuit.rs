use atomlayout::circuit::{
    generate_random_circuit, interaction_graph, logical_depth, parse_json, to_json, Circuit, GateKind, GateTag, GenParams,
};
use proptest::prelude::*;

fn params(seed: u64, width: usize) -> GenParams {
    GenParams {
        width,
        min_instructions: 40,
        inter_connectivity: 0.5,
        one_qubit_rate: 0.3,
        three_qubit_rate: 0.1,
        seed,
    }
}

#[test]
fn seed_42_matches_frozen_output() {
    let c = generate_random_circuit(&params(42, 8)).unwrap();
    let frozen = include_str!("data/gen_seed42.json");
    assert_eq!(to_json(&c), frozen.trim_end());
}

#[test]
fn chain_circuits_have_full_depth() {
    let chain = Circuit::new(4, (0..3).map(|i| (GateTag::Cx, vec![i, i + 1]))).unwrap();
    assert_eq!(logical_depth(&chain), 3);
    let parallel = Circuit::new(4, [(GateTag::Cx, vec![0, 1]), (GateTag::Cx, vec![2, 3])]).unwrap();
    assert_eq!(logical_depth(&parallel), 1);
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    (3usize..9).prop_flat_map(|n| {
        let gate = (0usize..13, proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 3), -3.0f64..3.0)
            .prop_filter("no swap", |(t, _, _)| GateTag::ALL[*t] != GateTag::Swap)
            .prop_map(|(t, qs, theta)| {
                let tag = GateTag::ALL[t];
                let mut qs = qs;
                qs.truncate(tag.arity());
                let kind = if tag.num_params() == 1 {
                    GateKind::with_params(tag, vec![theta])
                } else {
                    GateKind::new(tag)
                };
                (kind, qs)
            });
        proptest::collection::vec(gate, 0..30).prop_map(move |g| Circuit::new(n, g).unwrap())
    })
}

fn depth_oracle(c: &Circuit) -> usize {
    let mut level = vec![0usize; c.num_qubits()];
    for i in c.instructions() {
        let l = i.qubits.iter().map(|&q| level[q]).max().unwrap() + 1;
        for &q in &i.qubits {
            level[q] = l;
        }
    }
    level.into_iter().max().unwrap_or(0)
}

proptest! {
    #[test]
    fn generator_is_deterministic(seed in any::<u64>(), width in 3usize..20) {
        let p = params(seed, width);
        let a = generate_random_circuit(&p).unwrap();
        prop_assert_eq!(&a, &generate_random_circuit(&p).unwrap());
        prop_assert_eq!(a.active_qubits().len(), width);
        prop_assert!(a.len() >= p.min_instructions);
    }

    #[test]
    fn json_round_trip(c in arb_circuit()) {
        prop_assert_eq!(parse_json(&to_json(&c)).unwrap(), c);
    }

    #[test]
    fn interaction_graph_mass_matches_pair_count(c in arb_circuit()) {
        let g = interaction_graph(&c);
        let pairs: u64 = c.instructions().iter().map(|i| {
            let a = i.arity() as u64;
            a * (a - 1) / 2
        }).sum();
        prop_assert_eq!(g.total_weight(), pairs);
        for u in 0..c.num_qubits() {
            for v in 0..c.num_qubits() {
                prop_assert_eq!(g.weight(u, v), g.weight(v, u));
            }
        }
    }

    #[test]
    fn depth_matches_level_oracle(c in arb_circuit()) {
        let d = logical_depth(&c);
        prop_assert_eq!(d, depth_oracle(&c));
        prop_assert!(d <= c.len());
    }
}

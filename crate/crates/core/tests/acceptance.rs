//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use atomlayout::circuit::{generate_random_circuit, interaction_graph, Circuit, GateKind, GateTag, GenParams};
use atomlayout::features::{compute_features, pagerank, PageRankConfig, NUM_FEATURES};
use atomlayout::mapper::{random_mapping, route_swaps, Mapping};
use atomlayout::noise_sim::{ideal_distribution, noisy_sample, Distribution, NoiseModel, ShotCounts};
use atomlayout::pipeline::{
    bench, compile, corpus_features, generate_corpus, label_corpus, train_bank, CompileConfig, CorpusRanges,
    FidelityConfig, TrainConfig,
};
use atomlayout::predictor::Metric;
use atomlayout::rng::seeded;
use atomlayout::scheduler::{build_dag, schedule, validate, GateDurations};
use atomlayout::topology::{build_lattice, LatticeKind};
use atomlayout::{AdamConfig, Lattice, LatticeSpec, Mlp, RadiusConfig};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("schedule legality fuzz", schedule_fuzz),
        ("adjacent-row comparison makespans", compare_scenario),
        ("routing within +2 of BFS optimum", routing_oracle),
        ("feature and PageRank oracle", feature_oracle),
        ("MLP gradient check", gradient_check),
        ("selection beats random", selection_beats_random),
        ("simulator correctness", simulator),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn schedule_fuzz() -> Outcome {
    let start = Instant::now();
    let ranges = CorpusRanges {
        width: (5, 30),
        ..CorpusRanges::default()
    };
    let corpus = generate_corpus(&ranges, 500, 2024).map_err(|e| e.to_string())?;
    let cfg = CompileConfig::default();
    let mut runs = 0;
    for (i, (_, circuit)) in corpus.iter().enumerate() {
        for kind in LatticeKind::STANDARD {
            let c = compile(circuit, kind, &cfg).map_err(|e| format!("circuit {i} on {kind}: {e}"))?;
            let violations = validate(&c.schedule, &c.dag, &c.routed, &c.lattice, &c.radii);
            ensure(violations.is_empty(), || format!("circuit {i} on {kind}: {:?}", violations[0]))?;
            c.routed.verify(&c.lattice, &c.radii)?;
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{runs} compiles, 0 violations"))
}

fn compare_scenario() -> Outcome {
    let circuit = Circuit::new(4, [(GateTag::Cx, vec![0, 1]), (GateTag::Cx, vec![2, 3])]).unwrap();
    let mut got = Vec::new();
    for (kind, expected) in [(LatticeKind::Square, 3), (LatticeKind::STriangle, 3), (LatticeKind::TTriangle, 6)] {
        let lattice = build_lattice(&LatticeSpec::standard(kind, 2, 2)).unwrap();
        let mapping = Mapping::from_sites(vec![0, 1, 2, 3], 4).unwrap();
        let radii = RadiusConfig::default();
        let routed = route_swaps(&circuit, &mapping, &lattice, &radii).map_err(|e| e.to_string())?;
        let dag = build_dag(&routed);
        let s = schedule(&dag, &routed, &lattice, &radii, &GateDurations::default());
        ensure(s.makespan == expected, || format!("{kind}: makespan {} != {expected}", s.makespan))?;
        got.push(format!("{kind}={}", s.makespan));
    }
    Ok(got.join(", "))
}

/// Fewest SWAPs bringing the operands within `r2`, by breadth-first search
/// over both operand positions. Each SWAP moves one operand to a site within
/// `r2` of it (exchanging with the other operand if it sits there).
fn bfs_swaps(lattice: &Lattice, radii: &RadiusConfig, a: usize, b: usize) -> usize {
    let n = lattice.len();
    let close = |x: usize, y: usize| lattice.distance(x, y) <= radii.r2 + 1e-9;
    let mut dist = vec![usize::MAX; n * n];
    let mut queue = VecDeque::from([(a, b)]);
    dist[a * n + b] = 0;
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[x * n + y];
        if close(x, y) {
            return d;
        }
        let mut next = Vec::new();
        for s in 0..n {
            if s != x && close(x, s) {
                next.push(if s == y { (y, x) } else { (s, y) });
            }
            if s != y && close(y, s) {
                next.push(if s == x { (y, x) } else { (x, s) });
            }
        }
        for (p, q) in next {
            if dist[p * n + q] == usize::MAX {
                dist[p * n + q] = d + 1;
                queue.push_back((p, q));
            }
        }
    }
    usize::MAX
}

fn routing_oracle() -> Outcome {
    let start = Instant::now();
    let lattice = build_lattice(&LatticeSpec::standard(LatticeKind::Square, 4, 4)).unwrap();
    let radii = RadiusConfig::default();
    let circuit = Circuit::new(2, [(GateTag::Cx, vec![0, 1])]).unwrap();
    let mut within = 0;
    let mut worst_gap = 0i64;
    for seed in 0..50 {
        let mapping = random_mapping(2, 16, 1000 + seed).map_err(|e| e.to_string())?;
        let routed = route_swaps(&circuit, &mapping, &lattice, &radii).map_err(|e| e.to_string())?;
        let optimum = bfs_swaps(&lattice, &radii, mapping.site_of(0), mapping.site_of(1));
        let gap = routed.swap_count() as i64 - optimum as i64;
        ensure(gap >= 0, || format!("seed {seed}: greedy {} beats BFS {optimum}", routed.swap_count()))?;
        worst_gap = worst_gap.max(gap);
        if gap <= 2 {
            within += 1;
        }
    }
    ensure(within * 10 >= 50 * 9, || format!("only {within}/50 within +2"))?;
    ensure(start.elapsed() < Duration::from_secs(30), || "over 30 s".into())?;
    Ok(format!("{within}/50 within +2, worst gap {worst_gap}"))
}

/// Straight-line recomputation of the fourteen descriptors.
fn oracle_features(c: &Circuit) -> ([f64; NUM_FEATURES], Vec<f64>) {
    let ins = c.instructions();
    let n = ins.len();
    let mut used = BTreeSet::new();
    for i in ins {
        used.extend(i.qubits.iter().copied());
    }
    let active: Vec<usize> = used.into_iter().collect();
    let w = active.len();
    let shares = |i: usize, j: usize| ins[i].qubits.iter().any(|q| ins[j].qubits.contains(q));

    // Longest chain over the full "shares a qubit with an earlier gate"
    // relation; ties to the lowest id.
    let mut len = vec![1usize; n];
    let mut parent = vec![None; n];
    for j in 0..n {
        for i in 0..j {
            if shares(i, j) && (len[i] + 1 > len[j]) {
                len[j] = len[i] + 1;
                parent[j] = Some(i);
            }
        }
    }
    let depth = *len.iter().max().unwrap();
    let mut end = (0..n).find(|&i| len[i] == depth);
    let mut on_path_2q = 0;
    while let Some(i) = end {
        if ins[i].qubits.len() == 2 {
            on_path_2q += 1;
        }
        end = parent[i];
    }

    let count = |k: usize| ins.iter().filter(|i| i.qubits.len() == k).count();
    let (g1, g2, g3) = (count(1), count(2), count(3));
    let mut load = vec![0.0; c.num_qubits()];
    for i in ins.iter().filter(|i| i.qubits.len() == 2) {
        for &q in &i.qubits {
            load[q] += 1.0;
        }
    }
    let mean = active.iter().map(|&q| load[q]).sum::<f64>() / w as f64;
    let sq: f64 = active.iter().map(|&q| (load[q] - mean).powi(2)).sum();

    let mut weight = vec![vec![0.0; w]; w];
    for i in ins {
        for a in 0..i.qubits.len() {
            for b in a + 1..i.qubits.len() {
                let x = active.iter().position(|&q| q == i.qubits[a]).unwrap();
                let y = active.iter().position(|&q| q == i.qubits[b]).unwrap();
                weight[x][y] += 1.0;
                weight[y][x] += 1.0;
            }
        }
    }
    let degrees: usize = weight.iter().map(|row| row.iter().filter(|&&x| x > 0.0).count()).sum();
    let pc = if w > 1 { degrees as f64 / (w * (w - 1)) as f64 } else { 0.0 };

    // Dense lazy power method on the column-stochastic transition matrix.
    let mut m = vec![vec![0.0; w]; w];
    for v in 0..w {
        let out: f64 = weight[v].iter().sum();
        for u in 0..w {
            m[u][v] = if out > 0.0 { weight[v][u] / out } else { 1.0 / w as f64 };
        }
    }
    let mut x = vec![1.0 / w as f64; w];
    for _ in 0..1000 {
        let y: Vec<f64> = (0..w).map(|u| (0..w).map(|v| m[u][v] * x[v]).sum()).collect();
        let lazy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let change: f64 = lazy.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = lazy;
        if change < 1e-8 {
            break;
        }
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    let pr_mean = x.iter().sum::<f64>() / w as f64;
    let pr_std = (x.iter().map(|v| (v - pr_mean).powi(2)).sum::<f64>() / w as f64).sqrt();
    let pr_max = x.iter().copied().fold(f64::MIN, f64::max);

    let nf = n as f64;
    (
        [
            nf,
            w as f64,
            depth as f64,
            (g1 + 2 * g2 + 3 * g3) as f64 / (w * depth) as f64,
            (1.0 + sq).ln() / w as f64,
            pc,
            if g2 > 0 { on_path_2q as f64 / g2 as f64 } else { 0.0 },
            g2 as f64 / nf,
            pr_mean,
            pr_std,
            pr_max,
            g1 as f64 / nf,
            g2 as f64 / nf,
            g3 as f64 / nf,
        ],
        x,
    )
}

fn feature_oracle() -> Outcome {
    let mut rng = seeded(77);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let params = GenParams {
            width: rng.gen_range(3..=25),
            min_instructions: rng.gen_range(5..=80),
            inter_connectivity: rng.gen_range(0.0..=1.0),
            one_qubit_rate: rng.gen_range(0.0..=0.5),
            three_qubit_rate: rng.gen_range(0.0..=0.3),
            seed: k,
        };
        let c = generate_random_circuit(&params).map_err(|e| e.to_string())?;
        let got = compute_features::<f64>(&c).map_err(|e| e.to_string())?.to_array();
        let (want, pr_oracle) = oracle_features(&c);
        for j in 0..NUM_FEATURES {
            let exact = matches!(j, 0..=2);
            let err = (got[j] - want[j]).abs();
            if exact {
                ensure(err == 0.0, || format!("circuit {k} feature {j}: {} != {}", got[j], want[j]))?;
            } else {
                ensure(err <= 1e-9, || format!("circuit {k} feature {j}: {} vs {}", got[j], want[j]))?;
                worst = worst.max(err);
            }
        }
        let active: Vec<usize> = {
            let mut s = BTreeSet::new();
            c.instructions().iter().for_each(|i| s.extend(i.qubits.iter().copied()));
            s.into_iter().collect()
        };
        let pr = pagerank::<f64>(&interaction_graph(&c).induced(&active), &PageRankConfig::default());
        let sum: f64 = pr.scores.iter().sum();
        ensure((sum - 1.0).abs() <= 1e-9, || format!("circuit {k}: PageRank sums to {sum}"))?;
        for (a, b) in pr.scores.iter().zip(&pr_oracle) {
            ensure((a - b).abs() <= 1e-8, || format!("circuit {k}: PageRank {a} vs oracle {b}"))?;
        }
    }
    Ok(format!("100 circuits, max real error {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = seeded(5);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for cfg in 0..100u64 {
        let mlp = Mlp::standard(NUM_FEATURES, 10_000 + cfg).unwrap();
        let batch = rng.gen_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..NUM_FEATURES).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<f64> = (0..batch).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let pattern = |m: &Mlp| -> Vec<bool> {
            xs.iter()
                .flat_map(|x| {
                    let t = m.trace(x).unwrap();
                    let hidden = t.pre.len() - 1;
                    t.pre.into_iter().take(hidden).flatten().map(|z| z > 0.0).collect::<Vec<_>>()
                })
                .collect()
        };
        let near_kink = xs.iter().any(|x| {
            let t = mlp.trace(x).unwrap();
            t.pre[..t.pre.len() - 1].iter().flatten().any(|z| z.abs() < 1e-6)
        });
        if near_kink {
            skipped += 1;
            continue;
        }
        let base_pattern = pattern(&mlp);
        let (_, grad) = mlp.mae_gradient(&xs, &ys).unwrap();
        let params = mlp.parameters();
        for i in 0..params.len() {
            let mut p = params.clone();
            let mut up = mlp.clone();
            p[i] = params[i] + h;
            up.set_parameters(&p).unwrap();
            let mut down = mlp.clone();
            p[i] = params[i] - h;
            down.set_parameters(&p).unwrap();
            // A step that flips a ReLU straddles a kink.
            if pattern(&up) != base_pattern || pattern(&down) != base_pattern {
                continue;
            }
            let numeric = (up.mae(&xs, &ys).unwrap() - down.mae(&xs, &ys).unwrap()) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-5);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.2e}"))?;
    ensure(checked > 40_000, || format!("only {checked} parameters checked"))?;
    Ok(format!("{checked} partials, {skipped} configs near a kink, max rel error {worst:.1e}"))
}

fn selection_beats_random() -> Outcome {
    let start = Instant::now();
    let cfg = CompileConfig::default();
    let mut report = Vec::new();
    for seed in [11u64, 22, 33] {
        let corpus = generate_corpus(&CorpusRanges::default(), 500, seed).map_err(|e| e.to_string())?;
        let circuits: Vec<Circuit> = corpus.into_iter().map(|(_, c)| c).collect();
        let labels = label_corpus(&circuits, &cfg, None).map_err(|e| e.to_string())?;
        let features = corpus_features(&circuits).map_err(|e| e.to_string())?;
        let train_cfg = TrainConfig {
            adam: AdamConfig::default(),
            folds: None,
            seed,
        };
        let (bank, _) = train_bank(&features[..400], &labels[..400], &[Metric::Critical], &train_cfg)
            .map_err(|e| e.to_string())?;
        let rows = bench(&circuits[400..], &labels[400..], &bank, Metric::Critical, seed).map_err(|e| e.to_string())?;
        let n = rows.len() as f64;
        let predictor = rows.iter().map(|r| r.predictor).sum::<f64>() / n;
        let random = rows.iter().map(|r| r.random_mean).sum::<f64>() / n;
        let oracle = rows.iter().map(|r| r.oracle).sum::<f64>() / n;
        ensure(predictor < random, || {
            format!("seed {seed}: predictor {predictor:.2} >= random {random:.2}")
        })?;
        report.push(format!("seed {seed}: oracle {oracle:.1} predictor {predictor:.1} random {random:.1}"));
    }
    ensure(start.elapsed() < Duration::from_secs(600), || "over 10 min".into())?;
    Ok(report.join("; "))
}

fn circuit(n: usize, gates: &[(GateTag, &[usize])]) -> Circuit {
    Circuit::new(n, gates.iter().map(|(t, q)| (*t, q.to_vec()))).unwrap()
}

fn tvd(ideal: &Distribution, counts: &ShotCounts) -> f64 {
    let mut total = 0.0;
    for (i, &p) in ideal.probabilities.iter().enumerate() {
        let bits = atomlayout::noise_sim::bitstring(i, ideal.num_qubits);
        total += (p - counts.get(&bits) as f64 / counts.shots as f64).abs();
    }
    0.5 * total
}

type Mat = [[Complex64; 4]; 4];

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &Mat) -> Mat {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `op` on qubit `q` of two, basis index bit `q` = qubit `q`.
fn embed(op: [[Complex64; 2]; 2], q: usize) -> Mat {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let other = 1 - q;
            if (i >> other & 1) == (j >> other & 1) {
                out[i][j] = op[i >> q & 1][j >> q & 1];
            }
        }
    }
    out
}

fn conjugate(rho: &Mat, u: &Mat) -> Mat {
    mat_mul(&mat_mul(u, rho), &dagger(u))
}

fn depolarize(rho: &Mat, q: usize, p: f64) -> Mat {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let paulis = [
        [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    ];
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = rho[i][j] * (1.0 - p + p / 4.0);
        }
    }
    for pauli in paulis {
        let term = conjugate(rho, &embed(pauli, q));
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += term[i][j] * (p / 4.0);
            }
        }
    }
    out
}

fn simulator() -> Outcome {
    let bell = circuit(2, &[(GateTag::H, &[0]), (GateTag::Cx, &[0, 1])]);
    let ghz = circuit(3, &[(GateTag::H, &[0]), (GateTag::Cx, &[0, 1]), (GateTag::Cx, &[1, 2])]);
    let d = ideal_distribution(&bell).map_err(|e| e.to_string())?;
    for (bits, want) in [("00", 0.5), ("01", 0.0), ("10", 0.0), ("11", 0.5)] {
        ensure((d.get(bits) - want).abs() <= 1e-9, || format!("Bell {bits}: {}", d.get(bits)))?;
    }
    let d = ideal_distribution(&ghz).map_err(|e| e.to_string())?;
    for i in 0..8 {
        let bits = atomlayout::noise_sim::bitstring(i, 3);
        let want = if i == 0 || i == 7 { 0.5 } else { 0.0 };
        ensure((d.get(&bits) - want).abs() <= 1e-9, || format!("GHZ {bits}: {}", d.get(&bits)))?;
    }

    let rot = GateKind::with_params(GateTag::Ry, vec![0.7]);
    let mixed = Circuit::new(
        4,
        [
            (rot.clone(), vec![0]),
            (GateKind::new(GateTag::H), vec![1]),
            (GateKind::new(GateTag::Cx), vec![1, 2]),
            (GateKind::new(GateTag::Ccx), vec![0, 1, 3]),
            (GateKind::with_params(GateTag::Rx, vec![1.3]), vec![3]),
        ],
    )
    .unwrap();
    let mut worst_tvd = 0.0f64;
    for (k, c) in [&bell, &ghz, &mixed].into_iter().enumerate() {
        let ideal = ideal_distribution(c).map_err(|e| e.to_string())?;
        let counts = noisy_sample(c, &NoiseModel { p1: 0.0 }, 5000, 40 + k as u64).map_err(|e| e.to_string())?;
        let t = tvd(&ideal, &counts);
        ensure(t <= 0.05, || format!("circuit {k}: TVD {t}"))?;
        worst_tvd = worst_tvd.max(t);
    }

    let p = 0.01;
    let c = |re: f64| Complex64::new(re, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut rho = [[c(0.0); 4]; 4];
    rho[0][0] = c(1.0);
    rho = conjugate(&rho, &embed([[c(s), c(s)], [c(s), c(-s)]], 0));
    rho = depolarize(&rho, 0, p);
    let mut cx = [[c(0.0); 4]; 4];
    for (i, row) in cx.iter_mut().enumerate() {
        let j = if i & 1 == 1 { i ^ 2 } else { i };
        row[j] = c(1.0);
    }
    rho = conjugate(&rho, &cx);
    rho = depolarize(&rho, 0, p);
    rho = depolarize(&rho, 1, p);
    let expected = rho[1][1].re + rho[2][2].re;
    let shots = 5000;
    let counts = noisy_sample(&bell, &NoiseModel { p1: p }, shots, 99).map_err(|e| e.to_string())?;
    let observed = (counts.get("10") + counts.get("01")) as f64 / shots as f64;
    let sigma = (expected * (1.0 - expected) / shots as f64).sqrt();
    ensure((observed - expected).abs() <= 3.0 * sigma, || {
        format!("odd-parity fraction {observed} vs density matrix {expected} (sigma {sigma:.2e})")
    })?;
    Ok(format!(
        "max p=0 TVD {worst_tvd:.3}, odd parity {observed:.4} vs {expected:.4} +/- {:.4}",
        3.0 * sigma
    ))
}

/// Every stage serialized to one string.
fn full_run() -> Result<String, String> {
    let ranges = CorpusRanges {
        width: (5, 12),
        instructions: (20, 40),
        ..CorpusRanges::default()
    };
    let corpus = generate_corpus(&ranges, 60, 8).map_err(|e| e.to_string())?;
    let circuits: Vec<Circuit> = corpus.iter().map(|(_, c)| c.clone()).collect();
    let cfg = CompileConfig::default();
    let fid = FidelityConfig {
        noise: NoiseModel::default(),
        shots: 500,
        seed: 3,
    };
    let labels = label_corpus(&circuits, &cfg, Some(&fid)).map_err(|e| e.to_string())?;
    let features = corpus_features(&circuits).map_err(|e| e.to_string())?;
    let train_cfg = TrainConfig {
        adam: AdamConfig {
            epochs: 30,
            ..AdamConfig::default()
        },
        folds: Some(5),
        seed: 4,
    };
    let (bank, cv) = train_bank(&features, &labels, &Metric::ALL, &train_cfg).map_err(|e| e.to_string())?;
    let rows = bench(&circuits, &labels, &bank, Metric::Critical, 5).map_err(|e| e.to_string())?;
    let compiled = compile(&circuits[0], LatticeKind::TTriangle, &cfg).map_err(|e| e.to_string())?;
    let counts = noisy_sample(&circuits[1], &NoiseModel::default(), 1000, 6).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for part in [
        serde_json::to_string(&corpus.iter().map(|(p, _)| p).collect::<Vec<_>>()),
        serde_json::to_string(&labels),
        serde_json::to_string(&features),
        serde_json::to_string(&cv),
        serde_json::to_string(&rows),
        serde_json::to_string(&compiled.routed),
        serde_json::to_string(&compiled.schedule),
        serde_json::to_string(&counts),
    ] {
        out.push_str(&part.map_err(|e| e.to_string())?);
    }
    out.push_str(&bank.to_json().map_err(|e| e.to_string())?);
    Ok(out)
}

fn determinism() -> Outcome {
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?
            .install(full_run)
    };
    let a = run_with(4)?;
    let b = run_with(4)?;
    ensure(a == b, || "two runs differ".into())?;
    let c = run_with(1)?;
    ensure(a == c, || "serial run differs from parallel run".into())?;
    Ok(format!("{} bytes identical across 2 runs and 1 vs 4 threads", a.len()))
}

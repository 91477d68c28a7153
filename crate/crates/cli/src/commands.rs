//! One function per subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use atomlayout::circuit::{interaction_graph, to_json, Circuit};
use atomlayout::features::{compute_features, FEATURE_NAMES};
use atomlayout::mapper::{map_circuit, route_swaps};
use atomlayout::noise_sim::{
    bitwise_error, ideal_distribution, ideal_distribution_routed, noisy_sample, noisy_sample_routed,
};
use atomlayout::pipeline::{
    self, compile, corpus_features, Compiled, generate_corpus, label_corpus, train_bank, BenchRow, FidelityConfig, Labels,
    PipelineError, TrainConfig, FIDELITY_MAX_WIDTH,
};
use atomlayout::predictor::{load_bank, save_bank, select_topology, Metric};
use atomlayout::rng::derive_seed;
use atomlayout::scheduler::{build_dag, schedule_with, validate_with};
use atomlayout::topology::{build_lattice, min_lattice_for, LatticeKind};
use atomlayout::{ModelBank, RadiusConfig};
use serde::Serialize;
use serde_json::json;

use crate::io::{self, collect_inputs, csv_err, csv_writer, display, print_json, read_all, read_circuit};
use crate::{CliError, Command, MetricArg, RunConfig};

/// Corpora smaller than this are refused by `train`.
pub const MIN_TRAIN_CORPUS: usize = 50;

pub fn dispatch(command: Command, cfg: RunConfig) -> Result<(), CliError> {
    match command {
        Command::Gen { count, out, .. } => gen(count, &out, cfg),
        Command::Features { inputs, out } => features(&inputs, out.as_deref(), cfg),
        Command::Compile {
            circuit,
            all,
            schedule_out,
        } => compile_cmd(&circuit, all, schedule_out.as_deref(), cfg),
        Command::Train {
            corpus,
            metric,
            out,
            cv_out,
            dataset_out,
            ..
        } => train(&corpus, metric, &out, cv_out, dataset_out.as_deref(), cfg),
        Command::Predict { bank, circuit, metric } => predict(&bank, &circuit, metric.single()?, cfg),
        Command::Bench {
            bank,
            corpus,
            metric,
            out,
            ..
        } => bench(&bank, &corpus, metric.single()?, &out, cfg),
        Command::Simulate { circuit, routed, .. } => simulate(&circuit, routed, cfg),
        Command::Validate { inputs } => validate(&inputs, cfg),
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn gen(count: usize, out: &Path, mut cfg: RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| data_err(out, e))?;
    let corpus = generate_corpus(&cfg.corpus, count, cfg.seed)?;
    let manifest = out.join("manifest.csv");
    let mut w = csv_writer(&manifest)?;
    w.write_record([
        "file",
        "width",
        "min_instructions",
        "inter_connectivity",
        "one_qubit_rate",
        "three_qubit_rate",
        "seed",
        "num_instructions",
    ])
    .map_err(csv_err)?;
    for (i, (p, c)) in corpus.iter().enumerate() {
        let name = format!("circuit_{i:05}.json");
        let path = out.join(&name);
        fs::write(&path, to_json(c) + "\n").map_err(|e| data_err(&path, e))?;
        w.write_record([
            name,
            p.width.to_string(),
            p.min_instructions.to_string(),
            p.inter_connectivity.to_string(),
            p.one_qubit_rate.to_string(),
            p.three_qubit_rate.to_string(),
            p.seed.to_string(),
            c.len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    cfg.outputs = vec![display(out)];
    io::write_json(&out.join(io::RUN_CONFIG_FILE), &cfg)?;
    print_json(&json!({ "circuits": count, "out": display(out) }))
}

fn features(inputs: &[PathBuf], out: Option<&Path>, mut cfg: RunConfig) -> Result<(), CliError> {
    let paths = collect_inputs(inputs)?;
    let circuits = read_all(&paths)?;
    let rows = corpus_features(&circuits)?;
    cfg.inputs = paths.iter().map(|p| display(p)).collect();
    match out {
        Some(out) => {
            let mut w = csv_writer(out)?;
            let header: Vec<&str> = std::iter::once("file").chain(FEATURE_NAMES).collect();
            w.write_record(&header).map_err(csv_err)?;
            for (p, f) in paths.iter().zip(&rows) {
                let mut rec = vec![display(p)];
                rec.extend(f.to_array().iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush().map_err(csv_err)?;
            cfg.outputs = vec![display(out)];
            io::write_sidecar(out, &cfg)?;
            print_json(&json!({ "rows": rows.len(), "out": display(out) }))
        }
        None => {
            let rows: Vec<_> = paths
                .iter()
                .zip(&rows)
                .map(|(p, f)| json!({ "file": display(p), "features": f }))
                .collect();
            print_json(&json!({ "run_config": cfg, "rows": rows }))
        }
    }
}

#[derive(Serialize)]
struct CompileRow {
    topology: LatticeKind,
    rows: usize,
    cols: usize,
    sites: usize,
    swap_count: usize,
    critical_pulse_count: u64,
    total_pulse_count: u64,
}

#[derive(Serialize)]
struct ScheduleRow {
    topology: LatticeKind,
    id: usize,
    gate: String,
    /// Logical qubit per operand; `None` is a spectator atom.
    qubits: Vec<Option<usize>>,
    sites: Vec<usize>,
    start: u64,
    duration: u64,
}

fn schedule_rows(kind: LatticeKind, c: &Compiled) -> Vec<ScheduleRow> {
    c.routed
        .instructions
        .iter()
        .map(|i| ScheduleRow {
            topology: kind,
            id: i.id,
            gate: i.kind.tag.name().to_string(),
            qubits: i.qubits.clone(),
            sites: i.sites.clone(),
            start: c.schedule.start[i.id],
            duration: c.schedule.duration[i.id],
        })
        .collect()
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Column order of the schedule timeline.
pub const TIMELINE_COLUMNS: [&str; 7] = ["topology", "id", "gate", "qubits", "sites", "start", "duration"];

fn write_timeline(path: &Path, rows: &[ScheduleRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(TIMELINE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.topology.name().to_string(),
            r.id.to_string(),
            r.gate.clone(),
            join(r.qubits.iter().map(|q| q.map(|q| q.to_string()).unwrap_or_else(|| "-".into()))),
            join(r.sites.iter()),
            r.start.to_string(),
            r.duration.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn compile_cmd(path: &Path, all: bool, schedule_out: Option<&Path>, mut cfg: RunConfig) -> Result<(), CliError> {
    let circuit = read_circuit(path)?;
    let kinds: Vec<LatticeKind> = if all {
        LatticeKind::STANDARD.to_vec()
    } else {
        vec![cfg.topology.unwrap_or(LatticeKind::Square)]
    };
    let compile_cfg = cfg.compile_config();
    let mut results = Vec::new();
    let mut dumps = Vec::new();
    for kind in kinds {
        let c = compile(&circuit, kind, &compile_cfg)?;
        let spec = c.lattice.spec();
        results.push(CompileRow {
            topology: kind,
            rows: spec.rows,
            cols: spec.cols,
            sites: c.lattice.len(),
            swap_count: c.metrics.swap_count,
            critical_pulse_count: c.metrics.critical_pulse_count,
            total_pulse_count: c.metrics.total_pulse_count,
        });
        if schedule_out.is_some() {
            dumps.extend(schedule_rows(kind, &c));
        }
    }
    cfg.inputs = vec![display(path)];
    if let Some(out) = schedule_out {
        if out.extension().is_some_and(|e| e == "csv") {
            write_timeline(out, &dumps)?;
        } else {
            io::write_json(out, &dumps)?;
        }
        cfg.outputs = vec![display(out)];
    }
    print_json(&json!({ "run_config": cfg, "circuit": display(path), "results": results }))
}

fn metric_list(metric: MetricArg, circuits: &[Circuit]) -> Vec<Metric> {
    match metric {
        MetricArg::All => {
            let mut m = vec![Metric::Critical, Metric::Total];
            if circuits.iter().any(|c| c.num_qubits() <= FIDELITY_MAX_WIDTH) {
                m.push(Metric::Fidelity);
            }
            m
        }
        other => vec![other.single().expect("single metric")],
    }
}

fn fidelity_config(cfg: &RunConfig) -> FidelityConfig {
    FidelityConfig {
        noise: cfg.noise,
        shots: cfg.shots,
        seed: derive_seed(cfg.seed, 1),
    }
}

fn opt(v: Option<[f64; 3]>, k: usize) -> String {
    v.map(|v| v[k].to_string()).unwrap_or_default()
}

fn write_dataset(path: &Path, files: &[PathBuf], circuits: &[Circuit], labels: &[Labels]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = std::iter::once("file").chain(FEATURE_NAMES).map(String::from).collect();
    for m in Metric::ALL {
        for k in LatticeKind::STANDARD {
            header.push(format!("{}_{}", m, k.name().replace('-', "_")));
        }
    }
    w.write_record(&header).map_err(csv_err)?;
    for ((p, c), l) in files.iter().zip(circuits).zip(labels) {
        let f = compute_features::<f64>(c).map_err(|e| data_err(p, e))?;
        let mut rec = vec![display(p)];
        rec.extend(f.to_array().iter().map(|v| v.to_string()));
        for m in Metric::ALL {
            rec.extend((0..3).map(|k| opt(l.values(m), k)));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn train(
    corpus: &Path,
    metric: MetricArg,
    out: &Path,
    cv_out: Option<PathBuf>,
    dataset_out: Option<&Path>,
    mut cfg: RunConfig,
) -> Result<(), CliError> {
    let files = collect_inputs(&[corpus.to_path_buf()])?;
    if files.len() < MIN_TRAIN_CORPUS {
        return Err(CliError::Data(format!(
            "corpus has {} circuits; training needs at least {MIN_TRAIN_CORPUS}",
            files.len()
        )));
    }
    let circuits = read_all(&files)?;
    let metrics = metric_list(metric, &circuits);
    let fid = fidelity_config(&cfg);
    let labels = label_corpus(
        &circuits,
        &cfg.compile_config(),
        metrics.contains(&Metric::Fidelity).then_some(&fid),
    )?;
    let features = corpus_features(&circuits)?;
    let train_cfg = TrainConfig {
        adam: cfg.adam.clone(),
        folds: (cfg.folds > 0).then_some(cfg.folds),
        seed: cfg.seed,
    };
    let (bank, cv) = train_bank(&features, &labels, &metrics, &train_cfg)?;
    save_bank(&bank, out).map_err(|e| data_err(out, e))?;

    let cv_path = cv_out.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".cv.csv");
        PathBuf::from(p)
    });
    let mut w = csv_writer(&cv_path)?;
    w.write_record(["topology", "metric", "fold", "train_size", "validation_size", "mae"])
        .map_err(csv_err)?;
    for row in &cv {
        w.write_record([
            row.topology.name().to_string(),
            row.metric.to_string(),
            row.fold.fold.to_string(),
            row.fold.train_size.to_string(),
            row.fold.validation_size.to_string(),
            row.fold.mae.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;

    cfg.inputs = vec![display(corpus)];
    cfg.outputs = vec![display(out), display(&cv_path)];
    if let Some(d) = dataset_out {
        write_dataset(d, &files, &circuits, &labels)?;
        cfg.outputs.push(display(d));
    }
    io::write_sidecar(out, &cfg)?;

    let mut mean_mae: BTreeMap<String, f64> = BTreeMap::new();
    for (topology, metric) in bank.keys() {
        let folds: Vec<f64> = cv
            .iter()
            .filter(|r| r.topology == topology && r.metric == metric)
            .map(|r| r.fold.mae)
            .collect();
        if !folds.is_empty() {
            mean_mae.insert(format!("{metric}/{topology}"), folds.iter().sum::<f64>() / folds.len() as f64);
        }
    }
    print_json(&json!({
        "circuits": circuits.len(),
        "models": bank.len(),
        "cv_mean_mae": mean_mae,
        "bank": display(out),
    }))
}

fn load(path: &Path) -> Result<ModelBank, CliError> {
    load_bank(path).map_err(|e| data_err(path, e))
}

fn predict(bank: &Path, circuit_path: &Path, metric: Metric, mut cfg: RunConfig) -> Result<(), CliError> {
    let bank_data = load(bank)?;
    let circuit = read_circuit(circuit_path)?;
    let features = compute_features::<f64>(&circuit).map_err(|e| data_err(circuit_path, e))?;
    let sel = select_topology(&bank_data, metric, &features.to_array()).map_err(|e| CliError::Data(e.to_string()))?;
    let predictions: BTreeMap<&str, f64> = sel.predictions.iter().map(|(k, v)| (k.name(), *v)).collect();
    cfg.inputs = vec![display(bank), display(circuit_path)];
    print_json(&json!({
        "run_config": cfg,
        "metric": metric,
        "selected": sel.topology,
        "predictions": predictions,
    }))
}

fn norm(v: f64, worst: f64) -> String {
    if worst == 0.0 {
        String::new()
    } else {
        (v / worst).to_string()
    }
}

/// Column order of the benchmark table.
pub const BENCH_COLUMNS: [&str; 21] = [
    "circuit",
    "file",
    "width",
    "metric",
    "square",
    "s_triangle",
    "t_triangle",
    "oracle",
    "worst",
    "predictor",
    "random",
    "random_mean",
    "predicted",
    "random_pick",
    "square_norm",
    "s_triangle_norm",
    "t_triangle_norm",
    "oracle_norm",
    "predictor_norm",
    "random_norm",
    "random_mean_norm",
];

fn bench_record(row: &BenchRow, file: &str, metric: Metric) -> Vec<String> {
    let mut rec = vec![row.circuit.to_string(), file.to_string(), row.width.to_string(), metric.to_string()];
    rec.extend(row.values.iter().map(|v| v.to_string()));
    rec.extend(
        [row.oracle, row.worst, row.predictor, row.random, row.random_mean]
            .iter()
            .map(|v| v.to_string()),
    );
    rec.push(row.predicted.name().to_string());
    rec.push(row.random_pick.name().to_string());
    rec.extend(row.values.iter().map(|&v| norm(v, row.worst)));
    rec.extend(
        [row.oracle, row.predictor, row.random, row.random_mean]
            .iter()
            .map(|&v| norm(v, row.worst)),
    );
    rec
}

fn bench(bank: &Path, corpus: &Path, metric: Metric, out: &Path, mut cfg: RunConfig) -> Result<(), CliError> {
    let bank_data = load(bank)?;
    for kind in LatticeKind::STANDARD {
        bank_data
            .get(kind, metric)
            .map_err(|e| data_err(bank, e))?;
    }
    let files = collect_inputs(&[corpus.to_path_buf()])?;
    let circuits = read_all(&files)?;
    let fid = fidelity_config(&cfg);
    let labels = label_corpus(
        &circuits,
        &cfg.compile_config(),
        (metric == Metric::Fidelity).then_some(&fid),
    )?;
    let rows = pipeline::bench(&circuits, &labels, &bank_data, metric, cfg.seed)?;
    if rows.is_empty() && metric == Metric::Fidelity {
        return Err(PipelineError::NoSimulable.into());
    }
    let mut w = csv_writer(out)?;
    w.write_record(BENCH_COLUMNS).map_err(csv_err)?;
    for row in &rows {
        w.write_record(bench_record(row, &display(&files[row.circuit]), metric))
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    cfg.inputs = vec![display(bank), display(corpus)];
    cfg.outputs = vec![display(out)];
    io::write_sidecar(out, &cfg)?;

    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&BenchRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    print_json(&json!({
        "metric": metric,
        "circuits": rows.len(),
        "mean": {
            "oracle": mean(&|r| r.oracle),
            "worst": mean(&|r| r.worst),
            "square": mean(&|r| r.values[0]),
            "s_triangle": mean(&|r| r.values[1]),
            "t_triangle": mean(&|r| r.values[2]),
            "predictor": mean(&|r| r.predictor),
            "random": mean(&|r| r.random),
            "random_mean": mean(&|r| r.random_mean),
        },
        "out": display(out),
    }))
}

fn simulate(path: &Path, routed: bool, mut cfg: RunConfig) -> Result<(), CliError> {
    let circuit = read_circuit(path)?;
    let sim = |e: atomlayout::noise_sim::SimError| CliError::Data(e.to_string());
    let (topology, swaps, ideal, counts) = if routed {
        let kind = cfg.topology.unwrap_or(LatticeKind::Square);
        let c = compile(&circuit, kind, &cfg.compile_config())?;
        let ideal = ideal_distribution_routed(&c.routed).map_err(sim)?;
        let counts = noisy_sample_routed(&c.routed, &cfg.noise, cfg.shots, cfg.seed).map_err(sim)?;
        (Some(kind), c.metrics.swap_count, ideal, counts)
    } else {
        let ideal = ideal_distribution(&circuit).map_err(sim)?;
        let counts = noisy_sample(&circuit, &cfg.noise, cfg.shots, cfg.seed).map_err(sim)?;
        (None, 0, ideal, counts)
    };
    let report = bitwise_error(&ideal, &counts).map_err(sim)?;
    cfg.inputs = vec![display(path)];
    print_json(&json!({
        "run_config": cfg,
        "topology": topology,
        "swap_count": swaps,
        "shots": counts.shots,
        "ideal": ideal.to_map(),
        "counts": counts.counts,
        "bitwise_error": report.bitwise_error,
        "tvd": report.tvd,
        "fidelity": report.fidelity,
    }))
}

#[derive(Serialize)]
struct ValidationRow {
    file: String,
    topology: LatticeKind,
    swap_count: usize,
    violations: Vec<String>,
}

fn validate(inputs: &[PathBuf], mut cfg: RunConfig) -> Result<(), CliError> {
    let files = collect_inputs(inputs)?;
    let kinds: Vec<LatticeKind> = match cfg.topology {
        Some(k) => vec![k],
        None => LatticeKind::STANDARD.to_vec(),
    };
    let compile_cfg = cfg.compile_config();
    let mut rows = Vec::new();
    for file in &files {
        let circuit = read_circuit(file)?;
        for &kind in &kinds {
            let lattice = build_lattice(&min_lattice_for(circuit.num_qubits(), kind))
                .map_err(|e| CliError::Data(e.to_string()))?;
            let radii = compile_cfg
                .radii
                .unwrap_or_else(|| RadiusConfig::default_for(lattice.spec()));
            let mapping = map_circuit(&circuit, &lattice, &interaction_graph(&circuit))
                .map_err(|e| data_err(file, e))?;
            let routed = route_swaps(&circuit, &mapping, &lattice, &radii).map_err(|e| data_err(file, e))?;
            let mut violations = Vec::new();
            if let Err(e) = routed.verify(&lattice, &radii) {
                violations.push(format!("routing: {e}"));
            }
            let dag = build_dag(&routed);
            let s = schedule_with(&dag, &routed, &lattice, &radii, &compile_cfg.durations, &compile_cfg.frequencies);
            violations.extend(
                validate_with(&s, &dag, &routed, &lattice, &radii, &compile_cfg.frequencies)
                    .iter()
                    .map(|v| v.to_string()),
            );
            rows.push(ValidationRow {
                file: display(file),
                topology: kind,
                swap_count: routed.swap_count(),
                violations,
            });
        }
    }
    cfg.inputs = files.iter().map(|f| display(f)).collect();
    let broken = rows.iter().filter(|r| !r.violations.is_empty()).count();
    print_json(&json!({ "run_config": cfg, "results": rows, "failing": broken }))?;
    if broken > 0 {
        return Err(CliError::Invariant(format!("{broken} compile(s) violate routing or schedule invariants")));
    }
    Ok(())
}

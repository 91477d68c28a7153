//! Circuit loading and small output helpers.

use std::fs;
use std::path::{Path, PathBuf};

use atomlayout::circuit::{parse_json, parse_qasm_subset, Circuit};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const RUN_CONFIG_FILE: &str = "run_config.json";

fn is_circuit_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    (ext == "json" || ext == "qasm") && name != RUN_CONFIG_FILE && !name.ends_with(".run.json")
}

/// Reads a circuit from `.qasm` (OpenQASM 2 subset) or JSON.
pub fn read_circuit(path: &Path) -> Result<Circuit, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "qasm") {
        parse_qasm_subset(&text).map(|q| q.circuit)
    } else {
        parse_json(&text)
    };
    parsed.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Circuit files named by `inputs`, expanding directories (sorted by name).
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_circuit_file(p))
                .collect();
            files.sort();
            out.extend(files);
        } else if input.is_file() {
            out.push(input.clone());
        } else {
            return Err(CliError::Data(format!("{}: no such file or directory", input.display())));
        }
    }
    Ok(out)
}

pub fn read_all(paths: &[PathBuf]) -> Result<Vec<Circuit>, CliError> {
    paths.iter().map(|p| read_circuit(p)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Sidecar path for a file output: `<file>.run.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".run.json");
    PathBuf::from(name)
}

pub fn write_sidecar(path: &Path, config: &RunConfig) -> Result<(), CliError> {
    write_json(&sidecar(path), config)
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("csv: {e}"))
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}

//! Resolved run configuration. Defaults, then `--config`, then explicit flags.

use std::path::Path;

use atomlayout::noise_sim::{NoiseModel, DEFAULT_SHOTS};
use atomlayout::pipeline::{CompileConfig, CorpusRanges};
use atomlayout::scheduler::{FrequencyPlan, GateDurations};
use atomlayout::topology::LatticeKind;
use atomlayout::{AdamConfig, RadiusConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything needed to reproduce a run. Written next to every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub jobs: usize,
    pub topology: Option<LatticeKind>,
    /// `None` uses the lattice defaults (1.05, 1.55, 0.9 times the pitch).
    pub radii: Option<RadiusConfig>,
    pub durations: GateDurations,
    pub frequencies: FrequencyPlan,
    pub noise: NoiseModel,
    pub shots: u64,
    pub adam: AdamConfig,
    pub folds: usize,
    pub corpus: CorpusRanges,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            seed: 0,
            jobs: 0,
            topology: None,
            radii: None,
            durations: GateDurations::default(),
            frequencies: FrequencyPlan::default(),
            noise: NoiseModel::default(),
            shots: DEFAULT_SHOTS,
            adam: AdamConfig::default(),
            folds: 5,
            corpus: CorpusRanges::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn compile_config(&self) -> CompileConfig {
        CompileConfig {
            radii: self.radii,
            durations: self.durations,
            frequencies: self.frequencies,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(r) = &self.radii {
            r.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.durations.validate().map_err(CliError::Usage)?;
        self.noise.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.adam.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.corpus.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.topology == Some(LatticeKind::Custom) {
            return Err(CliError::Usage("topology must be square, s-triangle or t-triangle".into()));
        }
        if self.folds == 1 {
            return Err(CliError::Usage("folds must be 0 (off) or at least 2".into()));
        }
        if self.shots == 0 {
            return Err(CliError::Usage("shots must be positive".into()));
        }
        Ok(())
    }
}

/// `r2,r3,rb`.
pub fn parse_radii(s: &str) -> Result<RadiusConfig, String> {
    let v = parse_list::<f64>(s, 3)?;
    Ok(RadiusConfig {
        r2: v[0],
        r3: v[1],
        rb: v[2],
    })
}

/// `one,two,three,swap` pulse counts.
pub fn parse_durations(s: &str) -> Result<GateDurations, String> {
    let v = parse_list::<u64>(s, 4)?;
    Ok(GateDurations {
        pulses_1q: v[0],
        pulses_2q: v[1],
        pulses_3q: v[2],
        pulses_swap: v[3],
    })
}

pub fn parse_topology(s: &str) -> Result<LatticeKind, String> {
    match s.parse::<LatticeKind>() {
        Ok(LatticeKind::Custom) | Err(_) => Err(format!("expected square, s-triangle or t-triangle, got {s:?}")),
        Ok(k) => Ok(k),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got {s:?}"));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("cannot parse {p:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsers() {
        assert_eq!(parse_radii("1,1.5,0.8").unwrap().r3, 1.5);
        assert!(parse_radii("1,2").is_err());
        assert_eq!(parse_durations("1,2,3,6").unwrap().pulses_swap, 6);
        assert!(parse_durations("1,x,3,6").is_err());
        assert_eq!(parse_topology("t-triangle").unwrap(), LatticeKind::TTriangle);
        assert!(parse_topology("custom").is_err());
    }

    #[test]
    fn partial_config_files_fill_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 9, "shots": 100}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.shots, 100);
        assert_eq!(cfg.durations, GateDurations::default());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

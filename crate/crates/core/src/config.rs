//! Experiment configuration: everything a run needs, fully
//! serializable, hashed for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::AnalysisOptions;
use crate::embodiment::SimConfig;
use crate::evolution::EvoConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub evo: EvoConfig,
    pub sim: SimConfig,
    pub analysis: AnalysisOptions,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
}

impl ExperimentConfig {
    /// Load from a TOML or JSON file, decided by extension.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| ConfigError::Parse {
            path: path.display().to_string(),
            message,
        })
    }

    /// Stable hash over the canonical JSON form, recorded in every
    /// output artifact.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.evo.seed = 99;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();

        let toml_path = dir.path().join("cfg.toml");
        std::fs::write(&toml_path, toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&toml_path).unwrap(), cfg);

        let json_path = dir.path().join("cfg.json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&json_path).unwrap(), cfg);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "[evo]\nseed = 5\ntotal_generations = 7\n").unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.evo.seed, 5);
        assert_eq!(cfg.evo.total_generations, 7);
        assert_eq!(cfg.evo.pop_size, 100);
        assert_eq!(cfg.sim, SimConfig::default());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(ExperimentConfig::load(Path::new("/nonexistent/x.toml")).is_err());
    }
}

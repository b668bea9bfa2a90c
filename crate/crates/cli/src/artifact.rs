//! Output files: JSON artifacts tagged with the config hash, and the run manifest.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub payload: T,
}

/// Tag for files that must not be mixed across configurations.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn wrap<T>(&self, kind: &str, payload: T) -> Artifact<T> {
        Artifact {
            kind: kind.to_string(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            version: VERSION.to_string(),
            payload,
        }
    }

    /// `# key=value` lines for CSV headers.
    pub fn meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("version", VERSION.to_string()),
        ]
    }

    pub fn header(&self) -> String {
        self.meta().iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{path} was written for config {found}, current config is {expected}; use a fresh --out directory or rerun the producing stage")]
pub struct HashMismatch {
    pub path: String,
    pub found: String,
    pub expected: String,
}

pub fn write_json<T: Serialize>(path: &Path, artifact: &Artifact<T>) -> hnlab::Result<()> {
    let mut text = serde_json::to_string_pretty(artifact).expect("artifact serializes");
    text.push('\n');
    hnlab::io::write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> hnlab::Result<Artifact<T>> {
    let text = hnlab::io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| hnlab::Error::Parse {
        what: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Effective configuration, relative to the output directory.
    pub config: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    /// Existing manifest for the same config, or a fresh one.
    pub fn open(out: &Path, stamp: &Stamp) -> Self {
        let fresh = RunManifest {
            config_hash: stamp.config_hash.clone(),
            seed: stamp.seed,
            version: VERSION.to_string(),
            config: "config.toml".into(),
            stages: Vec::new(),
        };
        let Ok(text) = std::fs::read_to_string(out.join("manifest.json")) else {
            return fresh;
        };
        match serde_json::from_str::<RunManifest>(&text) {
            Ok(m) if m.config_hash == stamp.config_hash => m,
            _ => fresh,
        }
    }

    /// Replace any earlier record of the same stage.
    pub fn record(&mut self, stage: StageRecord) {
        self.stages.retain(|s| s.stage != stage.stage);
        self.stages.push(stage);
    }

    pub fn save(&self, out: &Path) -> hnlab::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        hnlab::io::write_text(&out.join("manifest.json"), &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_replaces_stage_records() {
        let stamp = Stamp {
            config_hash: "abc".into(),
            seed: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::open(dir.path(), &stamp);
        let rec = |t: f64| StageRecord {
            stage: "ids".into(),
            artifacts: vec!["ids.json".into()],
            wall_time_s: t,
        };
        m.record(rec(1.0));
        m.record(rec(2.0));
        m.save(dir.path()).unwrap();
        let back = RunManifest::open(dir.path(), &stamp);
        assert_eq!(back.stages.len(), 1);
        assert_eq!(back.stages[0].wall_time_s, 2.0);
        let other = Stamp {
            config_hash: "def".into(),
            seed: 1,
        };
        assert!(RunManifest::open(dir.path(), &other).stages.is_empty());
    }

    #[test]
    fn artifact_round_trip() {
        let stamp = Stamp {
            config_hash: "abc".into(),
            seed: 9,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_json(&path, &stamp.wrap("numbers", vec![1.5, 2.5])).unwrap();
        let back: Artifact<Vec<f64>> = read_json(&path).unwrap();
        assert_eq!(back.payload, vec![1.5, 2.5]);
        assert_eq!(back.seed, 9);
    }
}

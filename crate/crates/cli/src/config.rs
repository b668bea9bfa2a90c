//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use hnlab::verify::VerifySettings;
use hnlab::{EnsembleSpec, Error};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    /// Matrix sizes, strictly ascending.
    pub sizes: Vec<usize>,
    /// Realizations per size.
    #[serde(default = "one")]
    pub reps: usize,
    /// Default output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub ids: IdsSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub verify: VerifySettings,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    /// Also write dense `J_n` and `H_n` in matrix-market format.
    pub matrix_market: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Eigenvalues with `|Im z|` at or below this count as real.
    pub im_tol: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { im_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdsSection {
    pub n: usize,
    pub reps: usize,
    pub grid_points: usize,
    /// Cache file; defaults to `ids.json` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

impl Default for IdsSection {
    fn default() -> Self {
        IdsSection {
            n: 100_000,
            reps: 4,
            grid_points: hnlab::stats::DEFAULT_GRID_POINTS,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub x_points: usize,
    pub curve_tol: f64,
    pub scan_points: usize,
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection {
            x_points: hnlab::curves::DEFAULT_X_POINTS,
            curve_tol: hnlab::curves::DEFAULT_CURVE_TOL,
            scan_points: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub n: usize,
    pub reps: usize,
    /// `[re, im]` pairs; empty means a default set off the real axis.
    pub points: Vec<[f64; 2]>,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection {
            n: 100_000,
            reps: 8,
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Histogram bins per arc and per Σ interval.
    pub bins: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { bins: 12 }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> hnlab::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            what: "experiment config".into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> hnlab::Result<Self> {
        Self::from_toml_str(&hnlab::io::read_text(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> hnlab::Result<()> {
        self.ensemble.validate()?;
        if self.sizes.is_empty() {
            return Err(invalid("sizes", "at least one size is required"));
        }
        if self.sizes[0] < 2 {
            return Err(invalid("sizes", "sizes must be at least 2"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sizes", "sizes must be strictly ascending"));
        }
        if self.reps == 0 {
            return Err(invalid("reps", "must be at least 1"));
        }
        let positive = [
            ("spectrum.im_tol", self.spectrum.im_tol),
            ("curve.curve_tol", self.curve.curve_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(k, "must be positive"));
            }
        }
        if self.ids.n < 100 {
            return Err(invalid("ids.n", "must be at least 100"));
        }
        if self.ids.reps == 0 || self.lyapunov.reps == 0 {
            return Err(invalid("reps", "ids.reps and lyapunov.reps must be at least 1"));
        }
        if self.ids.grid_points < 16 {
            return Err(invalid("ids.grid_points", "must be at least 16"));
        }
        if self.curve.x_points < 2 || self.curve.scan_points < 16 {
            return Err(invalid("curve", "x_points >= 2 and scan_points >= 16 required"));
        }
        if self.lyapunov.n < 2 {
            return Err(invalid("lyapunov.n", "must be at least 2"));
        }
        if self.lyapunov.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("lyapunov.points", "points must be finite"));
        }
        if self.compare.bins == 0 {
            return Err(invalid("compare.bins", "must be at least 1"));
        }
        self.verify.validate()
    }

    /// Hash of the effective configuration. The output directory does not enter it.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes to JSON");
        hnlab::io::content_hash(json.as_bytes())
    }

    pub fn seed(&self) -> u64 {
        self.ensemble.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
sizes = [10, 20]

[ensemble]
seed = 3
[ensemble.xi]
kind = "constant"
value = -0.2
[ensemble.eta]
kind = "constant"
value = 0.2
[ensemble.q]
kind = "uniform"
a = -1.0
b = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.reps, 1);
        assert_eq!(cfg.ids, IdsSection::default());
        assert_eq!(cfg.seed(), 3);
    }

    #[test]
    fn round_trip_keeps_hash() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut moved = cfg.clone();
        moved.output = Some("elsewhere".into());
        assert_eq!(moved.hash(), cfg.hash());
        let mut reseeded = cfg.clone();
        reseeded.ensemble.seed = 4;
        assert_ne!(reseeded.hash(), cfg.hash());
    }

    #[test]
    fn verify_rectangles_and_panel_parse() {
        let text = format!(
            "{MINIMAL}\n[verify]\nrectangles = [{{ x0 = -1.0, x1 = 1.0, y0 = 0.5, y1 = 0.9, domain = \"outer\" }}]\n\
             panel = [{{ kind = \"gaussian-bump\", re = 0.0, im = 0.3, width = 0.2 }}]\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.verify.rectangles.len(), 1);
        assert_eq!(cfg.verify.rectangles[0].domain, hnlab::verify::Domain::Outer);
        assert_eq!(cfg.verify.panel.len(), 1);
        let bad = text.replace("width = 0.2", "width = 0.0");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::Validation { .. })));
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let descending = MINIMAL.replace("[10, 20]", "[20, 10]");
        assert!(matches!(ExperimentConfig::from_toml_str(&descending), Err(Error::Validation { .. })));
        let no_seed = MINIMAL.replace("seed = 3", "");
        assert!(matches!(ExperimentConfig::from_toml_str(&no_seed), Err(Error::Parse { .. })));
        let typo = format!("{MINIMAL}\n[curve]\ncurve_tl = 1e-6\n");
        assert!(matches!(ExperimentConfig::from_toml_str(&typo), Err(Error::Parse { .. })));
        let negative = format!("{MINIMAL}\n[curve]\ncurve_tol = -1.0\n");
        assert!(matches!(ExperimentConfig::from_toml_str(&negative), Err(Error::Validation { .. })));
    }
}

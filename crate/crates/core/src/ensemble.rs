//! Coefficient ensembles and seeded realizations of `{(xi_k, eta_k, q_k)}`.
//!
//! A realization of length `n` carries indices `0..=n`. In log coordinates the
//! matrix entries are `-e^{xi}` (sub-diagonal and the top-right corner) and
//! `-e^{eta}` (super-diagonal and the bottom-left corner); see
//! [`crate::operator`] for the full index table.
//!
//! # Config format
//!
//! Specs are TOML documents:
//!
//! ```toml
//! seed = 20240611          # mandatory
//! entries = "log"          # "log" (default) or "raw"
//!
//! [mode]
//! type = "iid"             # "iid" | "constant" | "periodic"
//! # table = [[xi, eta, q], ...]   (periodic only)
//!
//! [xi]
//! kind = "log-uniform"     # constant | uniform | two-point | gaussian | cauchy | log-uniform
//! a = 0.0
//! b = 1.0
//!
//! [eta]
//! kind = "log-uniform"
//! a = 0.5
//! b = 1.5
//!
//! [q]
//! kind = "uniform"
//! a = 0.0
//! b = 1.0
//! ```
//!
//! Parameter names per kind: `constant {value}`, `uniform {a, b}`,
//! `two-point {v1, v2, prob}` (`prob` is the probability of `v1`),
//! `gaussian {mean, sd}`, `cauchy {loc, scale}`, `log-uniform {a, b}`
//! (the logarithm of a `Uni[a, b]` draw).
//!
//! With `entries = "raw"` the three distributions describe the signed matrix
//! entries directly: `xi` the sub-diagonal (and top-right corner), `eta` the
//! super-diagonal (and bottom-left corner), `q` the diagonal. Raw ensembles
//! only support spectra.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_id, IndexedStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Constant { value: f64 },
    Uniform { a: f64, b: f64 },
    TwoPoint { v1: f64, v2: f64, prob: f64 },
    Gaussian { mean: f64, sd: f64 },
    Cauchy { loc: f64, scale: f64 },
    LogUniform { a: f64, b: f64 },
}

impl DistributionSpec {
    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |what: &str, reason: &str| Err(Error::validation(format!("{field}.{what}"), reason));
        let all_finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            DistributionSpec::Constant { value } => {
                if !value.is_finite() {
                    return bad("value", "must be finite");
                }
            }
            DistributionSpec::Uniform { a, b } => {
                if !all_finite(&[a, b]) {
                    return bad("a", "bounds must be finite");
                }
                if !(a < b) {
                    return bad("b", "uniform requires a < b");
                }
            }
            DistributionSpec::TwoPoint { v1, v2, prob } => {
                if !all_finite(&[v1, v2]) {
                    return bad("v1", "values must be finite");
                }
                if !(0.0..=1.0).contains(&prob) {
                    return bad("prob", "must lie in [0, 1]");
                }
            }
            DistributionSpec::Gaussian { mean, sd } => {
                if !mean.is_finite() {
                    return bad("mean", "must be finite");
                }
                if !(sd >= 0.0) || !sd.is_finite() {
                    return bad("sd", "must be finite and >= 0");
                }
            }
            DistributionSpec::Cauchy { loc, scale } => {
                if !loc.is_finite() {
                    return bad("loc", "must be finite");
                }
                if !(scale > 0.0) || !scale.is_finite() {
                    return bad("scale", "must be finite and > 0");
                }
            }
            DistributionSpec::LogUniform { a, b } => {
                if !all_finite(&[a, b]) {
                    return bad("a", "bounds must be finite");
                }
                if !(a >= 0.0) {
                    return bad("a", "log-uniform requires a >= 0");
                }
                if !(b > a) {
                    return bad("b", "log-uniform requires b > a");
                }
            }
        }
        Ok(())
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self, DistributionSpec::Cauchy { .. })
    }

    /// Exact expectation, `None` for heavy-tailed kinds.
    pub fn mean(&self) -> Option<f64> {
        Some(match *self {
            DistributionSpec::Constant { value } => value,
            DistributionSpec::Uniform { a, b } => 0.5 * (a + b),
            DistributionSpec::TwoPoint { v1, v2, prob } => prob * v1 + (1.0 - prob) * v2,
            DistributionSpec::Gaussian { mean, .. } => mean,
            DistributionSpec::Cauchy { .. } => return None,
            DistributionSpec::LogUniform { a, b } => {
                // ∫ ln u du = u ln u - u
                let prim = |u: f64| if u == 0.0 { 0.0 } else { u * u.ln() - u };
                (prim(b) - prim(a)) / (b - a)
            }
        })
    }

    /// Map two independent uniforms in `[0, 1)` to a draw.
    #[inline]
    pub fn draw(&self, u1: f64, u2: f64) -> f64 {
        match *self {
            DistributionSpec::Constant { value } => value,
            DistributionSpec::Uniform { a, b } => a + (b - a) * u1,
            DistributionSpec::TwoPoint { v1, v2, prob } => {
                if u1 < prob {
                    v1
                } else {
                    v2
                }
            }
            DistributionSpec::Gaussian { mean, sd } => {
                // Box-Muller; 1 - u1 lies in (0, 1]
                let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                mean + sd * r * (std::f64::consts::TAU * u2).cos()
            }
            DistributionSpec::Cauchy { loc, scale } => {
                loc + scale * (std::f64::consts::PI * (u1 - 0.5)).tan()
            }
            DistributionSpec::LogUniform { a, b } => {
                let u = (a + (b - a) * u1).max(f64::MIN_POSITIVE);
                u.ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Mode {
    #[default]
    Iid,
    /// One draw per component, repeated at every index.
    Constant,
    /// Deterministic repetition of a `(xi, eta, q)` table.
    Periodic { table: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Entries {
    /// `xi`, `eta` are logarithms of the off-diagonal magnitudes.
    #[default]
    Log,
    /// Distributions give signed matrix entries directly.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub seed: u64,
    #[serde(default)]
    pub entries: Entries,
    #[serde(default)]
    pub mode: Mode,
    pub xi: DistributionSpec,
    pub eta: DistributionSpec,
    pub q: DistributionSpec,
}

impl EnsembleSpec {
    pub fn iid(xi: DistributionSpec, eta: DistributionSpec, q: DistributionSpec, seed: u64) -> Self {
        EnsembleSpec {
            seed,
            entries: Entries::Log,
            mode: Mode::Iid,
            xi,
            eta,
            q,
        }
    }

    /// All three components constant: a circulant bundle.
    pub fn constant(xi: f64, eta: f64, q: f64) -> Self {
        EnsembleSpec {
            seed: 0,
            entries: Entries::Log,
            mode: Mode::Constant,
            xi: DistributionSpec::Constant { value: xi },
            eta: DistributionSpec::Constant { value: eta },
            q: DistributionSpec::Constant { value: q },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.xi.validate("xi")?;
        self.eta.validate("eta")?;
        self.q.validate("q")?;
        if let Mode::Periodic { table } = &self.mode {
            if table.is_empty() {
                return Err(Error::validation("mode.table", "periodic table must be nonempty"));
            }
            if let Some(i) = table.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
                return Err(Error::validation(format!("mode.table[{i}]"), "entries must be finite"));
            }
        }
        Ok(())
    }

    pub fn is_raw(&self) -> bool {
        self.entries == Entries::Raw
    }

    /// Reject specs that cannot feed the Lyapunov / curve machinery.
    pub fn require_log_moments(&self, operation: &'static str) -> Result<()> {
        self.validate()?;
        if self.is_raw() {
            return Err(Error::RawModeUnsupported { operation });
        }
        if !matches!(self.mode, Mode::Periodic { .. }) {
            for (name, d) in [("xi", &self.xi), ("eta", &self.eta)] {
                if d.is_heavy_tailed() {
                    return Err(Error::HeavyTailed { field: name.into() });
                }
            }
        }
        Ok(())
    }

    /// Exact `(E xi, E eta)` from the spec parameters (table means for periodic mode).
    pub fn log_means(&self) -> Result<(f64, f64)> {
        self.require_log_moments("log_means")?;
        match &self.mode {
            Mode::Periodic { table } => {
                let p = table.len() as f64;
                let xi = table.iter().map(|r| r[0]).sum::<f64>() / p;
                let eta = table.iter().map(|r| r[1]).sum::<f64>() / p;
                Ok((xi, eta))
            }
            _ => Ok((
                self.xi.mean().expect("checked light-tailed"),
                self.eta.mean().expect("checked light-tailed"),
            )),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: EnsembleSpec = toml::from_str(text).map_err(|e| Error::Parse {
            what: "ensemble spec".into(),
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("ensemble spec is always representable in TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Stable content hash (hex) of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::io::content_hash(serde_json::to_string(self).expect("serializable").as_bytes())
    }
}

/// One realization `{(xi_k, eta_k, q_k)}` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    pub n: usize,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub q: Vec<f64>,
    pub spec: EnsembleSpec,
    pub realization: u64,
}

impl CoefficientSequence {
    pub fn is_raw(&self) -> bool {
        self.spec.is_raw()
    }

    /// Build directly from arrays of length `n + 1` (log coordinates).
    pub fn from_arrays(xi: Vec<f64>, eta: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if xi.len() != eta.len() || xi.len() != q.len() {
            return Err(Error::validation("arrays", "xi, eta, q must have equal length"));
        }
        if xi.len() < 2 {
            return Err(Error::validation("n", "need at least indices 0..=1"));
        }
        let n = xi.len() - 1;
        Ok(CoefficientSequence {
            n,
            xi,
            eta,
            q,
            spec: EnsembleSpec::constant(0.0, 0.0, 0.0),
            realization: 0,
        })
    }
}

/// Realization 0 of `spec` with indices `0..=n`.
pub fn sample(spec: &EnsembleSpec, n: usize) -> Result<CoefficientSequence> {
    sample_realization(spec, n, 0)
}

/// Independent realization number `realization`; a pure function of `(spec, n, realization)`.
pub fn sample_realization(spec: &EnsembleSpec, n: usize, realization: u64) -> Result<CoefficientSequence> {
    if n < 1 {
        return Err(Error::validation("n", "must be >= 1"));
    }
    spec.validate()?;
    let len = n + 1;
    let mut xi = vec![0.0; len];
    let mut eta = vec![0.0; len];
    let mut q = vec![0.0; len];
    fill_range(spec, realization, 0, &mut xi, &mut eta, &mut q);
    Ok(CoefficientSequence {
        n,
        xi,
        eta,
        q,
        spec: spec.clone(),
        realization,
    })
}

/// Fill `out_*[i]` with index `start + i`. Disjoint ranges may be filled concurrently.
pub fn fill_range(
    spec: &EnsembleSpec,
    realization: u64,
    start: usize,
    out_xi: &mut [f64],
    out_eta: &mut [f64],
    out_q: &mut [f64],
) {
    match &spec.mode {
        Mode::Periodic { table } => {
            for (i, ((x, e), q)) in out_xi.iter_mut().zip(out_eta.iter_mut()).zip(out_q.iter_mut()).enumerate() {
                let row = table[(start + i) % table.len()];
                *x = row[0];
                *e = row[1];
                *q = row[2];
            }
        }
        Mode::Constant => {
            let draw0 = |comp: u64, d: &DistributionSpec| {
                let (u1, u2) = IndexedStream::new(spec.seed, stream_id(realization, comp), 0).next_pair();
                d.draw(u1, u2)
            };
            let (x0, e0, q0) = (draw0(0, &spec.xi), draw0(1, &spec.eta), draw0(2, &spec.q));
            out_xi.fill(x0);
            out_eta.fill(e0);
            out_q.fill(q0);
        }
        Mode::Iid => {
            for (comp, dist, out) in [
                (0u64, &spec.xi, out_xi),
                (1, &spec.eta, out_eta),
                (2, &spec.q, out_q),
            ] {
                let mut stream = IndexedStream::new(spec.seed, stream_id(realization, comp), start);
                for v in out.iter_mut() {
                    let (u1, u2) = stream.next_pair();
                    *v = dist.draw(u1, u2);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMeans {
    pub mean_xi: f64,
    pub mean_eta: f64,
    /// Mean of `ln(1 + |q_k|)`.
    pub mean_q_logabs: f64,
}

/// Arithmetic means over indices `0..n` (the last index `n` is excluded).
pub fn empirical_means(seq: &CoefficientSequence) -> EmpiricalMeans {
    let n = seq.n.max(1);
    let m = |v: &[f64]| v[..n].iter().sum::<f64>() / n as f64;
    EmpiricalMeans {
        mean_xi: m(&seq.xi),
        mean_eta: m(&seq.eta),
        mean_q_logabs: seq.q[..n].iter().map(|q| q.abs().ln_1p()).sum::<f64>() / n as f64,
    }
}

/// Named ensembles used throughout the examples and tests.
pub mod presets {
    use super::*;

    /// All nonzero entries `Uni[0, 1]`: stochastically symmetric, real limit spectrum.
    pub fn uniform_symmetric(seed: u64) -> EnsembleSpec {
        EnsembleSpec::iid(
            DistributionSpec::LogUniform { a: 0.0, b: 1.0 },
            DistributionSpec::LogUniform { a: 0.0, b: 1.0 },
            DistributionSpec::Uniform { a: 0.0, b: 1.0 },
            seed,
        )
    }

    /// Sub-diagonal and diagonal `Uni[0, 1]`, super-diagonal `Uni[1/2, 3/2]`.
    pub fn uniform_biased(seed: u64) -> EnsembleSpec {
        EnsembleSpec::iid(
            DistributionSpec::LogUniform { a: 0.0, b: 1.0 },
            DistributionSpec::LogUniform { a: 0.5, b: 1.5 },
            DistributionSpec::Uniform { a: 0.0, b: 1.0 },
            seed,
        )
    }

    /// Raw-entry ensembles with mixed-sign hopping (two-dimensional spectra).
    pub fn raw_symmetric(seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            seed,
            entries: Entries::Raw,
            mode: Mode::Iid,
            xi: DistributionSpec::Uniform { a: -0.5, b: 0.5 },
            eta: DistributionSpec::Uniform { a: -0.5, b: 0.5 },
            q: DistributionSpec::Uniform { a: 0.0, b: 1.0 },
        }
    }

    pub fn raw_biased(seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            seed,
            entries: Entries::Raw,
            mode: Mode::Iid,
            xi: DistributionSpec::Uniform { a: -0.5, b: 0.5 },
            eta: DistributionSpec::Uniform { a: 0.0, b: 1.0 },
            q: DistributionSpec::Uniform { a: 0.0, b: 1.0 },
        }
    }

    /// Unit hopping, uniform on-site disorder `Uni[-w/2, w/2]`, imaginary gauge `g`.
    pub fn anderson(w: f64, g: f64, seed: u64) -> EnsembleSpec {
        let q = if w > 0.0 {
            DistributionSpec::Uniform { a: -0.5 * w, b: 0.5 * w }
        } else {
            DistributionSpec::Constant { value: 0.0 }
        };
        EnsembleSpec::iid(
            DistributionSpec::Constant { value: -g },
            DistributionSpec::Constant { value: g },
            q,
            seed,
        )
    }

    /// Unit hopping and binary on-site values `{0, v}` with equal weight.
    pub fn binary_alloy(v: f64, g: f64, seed: u64) -> EnsembleSpec {
        EnsembleSpec::iid(
            DistributionSpec::Constant { value: -g },
            DistributionSpec::Constant { value: g },
            DistributionSpec::TwoPoint { v1: 0.0, v2: v, prob: 0.5 },
            seed,
        )
    }

    /// Free Jacobi reference (`c ≡ 1`, `q ≡ 0`) with gauge `g`.
    pub fn free(g: f64) -> EnsembleSpec {
        EnsembleSpec {
            mode: Mode::Iid,
            ..EnsembleSpec::constant(-g, g, 0.0)
        }
    }
}

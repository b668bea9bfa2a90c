//! Estimators of the limit objects: integrated density of states `N`, its
//! log-potential `Φ`, its Stieltjes transform, and the Lyapunov exponent
//! `γ̄` by transfer products and by the Thouless formula.
//!
//! `N` is stored as a piecewise-linear function on a grid, so `dN` has a
//! constant density on each cell and every integral against it is a sum of
//! closed-form cell primitives.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::sturm;
use crate::ensemble::{sample_realization, EnsembleSpec};
use crate::error::{Error, Result};
use crate::operator::{build, SymTridiagonal};

pub const DEFAULT_GRID_POINTS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IdsGrid {
    /// Uniform grid over the Gershgorin bounds of the sampled matrices, padded by 5%.
    Auto { points: usize },
    /// User grid, extended if it does not cover the Gershgorin bounds.
    Explicit(Vec<f64>),
}

impl Default for IdsGrid {
    fn default() -> Self {
        IdsGrid::Auto {
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub n_used: usize,
    pub realizations_used: usize,
    /// Closure of the cells carrying positive mass.
    pub support: (f64, f64),
    pub spec_hash: String,
}

fn reference_from_spec(spec: &EnsembleSpec, n: usize, realization: u64) -> Result<SymTridiagonal> {
    let seq = sample_realization(spec, n, realization)?;
    build(&seq)?.reference()
}

/// Average of `count(H_n, λ_i)/n` over `reps` independent realizations.
pub fn estimate_ids(spec: &EnsembleSpec, n: usize, reps: usize, grid: &IdsGrid) -> Result<IdsEstimate> {
    spec.require_log_moments("estimate_ids")?;
    if n < 100 {
        return Err(Error::validation("n", "estimate_ids needs n >= 100"));
    }
    if reps == 0 {
        return Err(Error::validation("reps", "must be >= 1"));
    }
    let mats = (0..reps as u64)
        .into_par_iter()
        .map(|r| reference_from_spec(spec, n, r))
        .collect::<Result<Vec<_>>>()?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for h in &mats {
        let (a, b) = h.gershgorin();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let pad = 0.05 * (hi - lo).max(1e-3);
    let (glo, ghi) = (lo - pad, hi + pad);
    let grid = match grid {
        IdsGrid::Auto { points } => {
            if *points < 2 {
                return Err(Error::validation("grid.points", "need at least 2 points"));
            }
            let m = points - 1;
            (0..=m).map(|i| glo + (ghi - glo) * i as f64 / m as f64).collect::<Vec<_>>()
        }
        IdsGrid::Explicit(g) => {
            if g.is_empty() || g.windows(2).any(|w| !(w[0] < w[1])) || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("grid", "must be finite and strictly increasing"));
            }
            let mut g = g.clone();
            if g[0] >= lo {
                g.insert(0, glo.min(g[0] - pad));
            }
            if *g.last().unwrap() <= hi {
                g.push(ghi.max(*g.last().unwrap() + pad));
            }
            g
        }
    };
    let per_rep: Vec<Vec<usize>> = mats
        .par_iter()
        .map(|h| grid.iter().map(|&l| sturm::eigencount(h, l)).collect())
        .collect();
    let denom = (n * reps) as f64;
    let mut values = vec![0.0; grid.len()];
    for counts in &per_rep {
        for (v, &c) in values.iter_mut().zip(counts) {
            *v += c as f64;
        }
    }
    for v in values.iter_mut() {
        *v /= denom;
    }
    Ok(IdsEstimate::from_parts(grid, values, n, reps, spec.hash()))
}

impl IdsEstimate {
    /// Assemble from a grid and nondecreasing values in `[0, 1]`.
    pub fn from_parts(grid: Vec<f64>, values: Vec<f64>, n_used: usize, realizations_used: usize, spec_hash: String) -> Self {
        assert_eq!(grid.len(), values.len());
        let mut lo = grid[0];
        let mut hi = *grid.last().unwrap();
        if let Some(i) = (0..grid.len() - 1).find(|&i| values[i + 1] > values[i]) {
            lo = grid[i];
        }
        if let Some(i) = (0..grid.len() - 1).rev().find(|&i| values[i + 1] > values[i]) {
            hi = grid[i + 1];
        }
        IdsEstimate {
            grid,
            values,
            n_used,
            realizations_used,
            support: (lo, hi),
            spec_hash,
        }
    }

    /// Piecewise-linear `N(λ)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let g = &self.grid;
        if lambda <= g[0] {
            return self.values[0];
        }
        if lambda >= *g.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = g.partition_point(|&x| x <= lambda) - 1;
        let t = (lambda - g[i]) / (g[i + 1] - g[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// `(λ_i, λ_{i+1}, density)` for every cell with positive mass.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid.windows(2).zip(self.values.windows(2)).filter_map(|(g, v)| {
            let m = v[1] - v[0];
            (m > 0.0).then(|| (g[0], g[1], m / (g[1] - g[0])))
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.support.0.abs().max(self.support.1.abs())
    }

    pub fn support_center(&self) -> f64 {
        0.5 * (self.support.0 + self.support.1)
    }

    /// Mass of `dN` on `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.eval(a)
    }

    pub fn to_csv(&self) -> String {
        let meta = vec![
            ("n_used", self.n_used.to_string()),
            ("realizations_used", self.realizations_used.to_string()),
            ("spec_hash", self.spec_hash.clone()),
        ];
        let rows = self.grid.iter().zip(&self.values).map(|(&l, &v)| vec![l, v]);
        crate::io::csv_with_header(&meta, &["lambda", "N"], rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Content hash of the serialized estimate.
    pub fn hash(&self) -> String {
        crate::io::content_hash(serde_json::to_string(self).expect("serializable").as_bytes())
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &self.to_json())
    }

    /// Load a cached estimate; rejects it if `expected_spec_hash` is given and differs.
    pub fn load_cache(path: &Path, expected_spec_hash: Option<&str>) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let ids: IdsEstimate = serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if let Some(h) = expected_spec_hash {
            if ids.spec_hash != h {
                return Err(Error::validation(
                    "ids cache",
                    format!("spec hash {} does not match {}", ids.spec_hash, h),
                ));
            }
        }
        Ok(ids)
    }
}

/// `∫ ½ ln(t² + y²) dt`.
#[inline]
fn log_primitive(t: f64, y: f64) -> f64 {
    if y == 0.0 {
        if t == 0.0 {
            0.0
        } else {
            t * t.abs().ln() - t
        }
    } else {
        0.5 * t * (t * t + y * y).ln() - t + y * (t / y).atan()
    }
}

/// `Φ(z) = ∫ ln|z - λ| dN(λ)`, exact for the piecewise-linear `N`; valid on the real axis.
pub fn phi(ids: &IdsEstimate, z: Complex64) -> f64 {
    let y = z.im.abs();
    ids.cells()
        .map(|(a, b, d)| d * (log_primitive(b - z.re, y) - log_primitive(a - z.re, y)))
        .sum()
}

/// `ln(1 + w)` without cancellation for small `w`.
fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        w - w * w / 2.0 + w * w * w / 3.0 - w * w * w * w / 4.0
    } else {
        (1.0 + w).ln()
    }
}

/// `∫ dN(λ) / (λ - z)` for non-real `z`.
pub fn stieltjes(ids: &IdsEstimate, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::validation("z", "Stieltjes transform needs Im z != 0"));
    }
    Ok(ids.cells().map(|(a, b, d)| d * ln_1p((b - a) / (a - z))).sum())
}

/// `lim_{y↓0} ∫ dN(λ) / (λ - x - iy)`.
///
/// A point exactly on a grid node is nudged by a relative `1e-9` of the local
/// cell width, since the real part diverges logarithmically where the density
/// jumps.
pub fn stieltjes_upper_limit(ids: &IdsEstimate, x: f64) -> Complex64 {
    let g = &ids.grid;
    let mut x = x;
    if let Ok(i) = g.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        let h = if i + 1 < g.len() { g[i + 1] - g[i] } else { g[i] - g[i - 1] };
        x += 1e-9 * h;
    }
    ids.cells()
        .map(|(a, b, d)| {
            let re = (b - x).abs().ln() - (a - x).abs().ln();
            let ind = |v: f64| if v < x { 1.0 } else { 0.0 };
            let im = -std::f64::consts::PI * (ind(b) - ind(a));
            d * Complex64::new(re, im)
        })
        .sum()
}

/// `(1/n) Σ ln|λ_i - z|`.
pub fn log_potential(eigenvalues: &[f64], z: Complex64) -> f64 {
    eigenvalues.iter().map(|&l| (z - l).norm().ln()).sum::<f64>() / eigenvalues.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovMethod {
    Transfer,
    Thouless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub z: Complex64,
    pub gamma_hat: f64,
    pub n_used: usize,
    /// Standard error of the mean across realizations (0 for the Thouless route).
    pub stderr: f64,
    pub method: LyapunovMethod,
    /// Set for real `z`, where per-realization limits are not guaranteed.
    pub real_axis_warning: bool,
}

/// `(1/n) ln ‖S_n(z)‖` for one realization.
pub fn lyapunov_single(spec: &EnsembleSpec, n: usize, realization: u64, z: Complex64) -> Result<f64> {
    let seq = sample_realization(spec, n, realization)?;
    let bundle = build(&seq)?;
    let s = crate::operator::transfer_product(&bundle, z)?;
    Ok(s.log_norm() / n as f64)
}

/// Mean over `reps` realizations of `(1/n) ln ‖S_n(z)‖` in the column-sum norm.
pub fn lyapunov_transfer(spec: &EnsembleSpec, n: usize, reps: usize, z: Complex64) -> Result<LyapunovEstimate> {
    spec.require_log_moments("lyapunov_transfer")?;
    if n < 2 || reps == 0 {
        return Err(Error::validation("n/reps", "need n >= 2 and reps >= 1"));
    }
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|r| lyapunov_single(spec, n, r, z))
        .collect::<Result<Vec<_>>>()?;
    let mean = samples.iter().sum::<f64>() / reps as f64;
    let stderr = if reps > 1 {
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        (var / reps as f64).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        z,
        gamma_hat: mean,
        n_used: n,
        stderr,
        method: LyapunovMethod::Transfer,
        real_axis_warning: z.im == 0.0,
    })
}

/// `γ̄(z) = Φ(z) - E ln c_0`.
pub fn lyapunov_thouless(ids: &IdsEstimate, mean_log_c: f64, z: Complex64) -> f64 {
    phi(ids, z) - mean_log_c
}

pub fn lyapunov_thouless_estimate(ids: &IdsEstimate, mean_log_c: f64, z: Complex64) -> LyapunovEstimate {
    LyapunovEstimate {
        z,
        gamma_hat: lyapunov_thouless(ids, mean_log_c, z),
        n_used: ids.n_used,
        stderr: 0.0,
        method: LyapunovMethod::Thouless,
        real_axis_warning: false,
    }
}

/// `E ln c_0 = ½(E ξ + E η)` from the distribution parameters.
pub fn mean_log_c(spec: &EnsembleSpec) -> Result<f64> {
    let (mx, me) = spec.log_means()?;
    Ok(0.5 * (mx + me))
}

/// CSV for a list of Lyapunov estimates.
pub fn lyapunov_csv(estimates: &[LyapunovEstimate], meta: &[(&str, String)]) -> String {
    let rows = estimates.iter().map(|e| vec![e.z.re, e.z.im, e.gamma_hat, e.stderr]);
    crate::io::csv_with_header(meta, &["re", "im", "gamma", "stderr"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::presets;

    fn free_ids(n: usize) -> IdsEstimate {
        estimate_ids(&presets::free(0.0), n, 1, &IdsGrid::default()).unwrap()
    }

    #[test]
    fn endpoints_and_monotone() {
        let ids = estimate_ids(&presets::uniform_biased(3), 300, 2, &IdsGrid::Auto { points: 200 }).unwrap();
        assert_eq!(ids.values[0], 0.0);
        assert_eq!(*ids.values.last().unwrap(), 1.0);
        assert!(ids.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn free_half_at_zero() {
        let n = 400;
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.1).collect();
        let ids = estimate_ids(&presets::free(0.0), n, 1, &IdsGrid::Explicit(grid)).unwrap();
        assert!((ids.eval(0.0) - 0.5).abs() <= 2.0 / n as f64);
        // grid was extended to cover the Gershgorin bounds [-2, 2]
        assert!(ids.grid[0] < -2.0 && *ids.grid.last().unwrap() > 2.0);
    }

    #[test]
    fn primitive_matches_quadrature() {
        let (a, b, y) = (-0.3, 0.7, 0.25);
        let m = 20000;
        let h = (b - a) / m as f64;
        let quad: f64 = (0..m)
            .map(|i| {
                let t = a + (i as f64 + 0.5) * h;
                0.5 * (t * t + y * y).ln() * h
            })
            .sum();
        assert!((log_primitive(b, y) - log_primitive(a, y) - quad).abs() < 1e-8);
        // the real-axis primitive is the y -> 0 limit
        assert!((log_primitive(0.4, 1e-12) - log_primitive(0.4, 0.0)).abs() < 1e-10);
    }

    #[test]
    fn far_field() {
        let ids = free_ids(500);
        let r = ids.support_radius();
        let z = Complex64::new(0.0, 1e4 * r);
        assert!((phi(&ids, z) - z.norm().ln()).abs() < 1e-3);
        let s = stieltjes(&ids, z).unwrap();
        assert!((s - (-1.0 / z)).norm() / (1.0 / z.norm()) < 1e-3);
    }

    #[test]
    fn conjugation_and_herglotz() {
        let ids = estimate_ids(&presets::uniform_biased(2), 400, 1, &IdsGrid::default()).unwrap();
        let z = Complex64::new(0.4, 0.3);
        assert!((phi(&ids, z) - phi(&ids, z.conj())).abs() < 1e-14);
        let s = stieltjes(&ids, z).unwrap();
        assert!((stieltjes(&ids, z.conj()).unwrap() - s.conj()).norm() < 1e-14);
        assert!(s.im > 0.0);
        assert!(stieltjes(&ids, Complex64::new(0.4, 0.0)).is_err());
    }

    #[test]
    fn upper_limit_matches_small_y() {
        let ids = estimate_ids(&presets::uniform_biased(2), 400, 1, &IdsGrid::default()).unwrap();
        let x = 0.37;
        let lim = stieltjes_upper_limit(&ids, x);
        let near = stieltjes(&ids, Complex64::new(x, 1e-9)).unwrap();
        assert!((lim - near).norm() < 1e-5, "{lim} vs {near}");
    }

    #[test]
    fn transfer_conjugation() {
        let spec = presets::uniform_biased(5);
        let a = lyapunov_transfer(&spec, 2000, 2, Complex64::new(0.5, 0.7)).unwrap();
        let b = lyapunov_transfer(&spec, 2000, 2, Complex64::new(0.5, -0.7)).unwrap();
        assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-12);
        assert!(!a.real_axis_warning);
        assert!(lyapunov_transfer(&spec, 100, 1, Complex64::new(0.5, 0.0)).unwrap().real_axis_warning);
    }

    #[test]
    fn raw_and_heavy_tailed_rejected() {
        assert!(estimate_ids(&presets::raw_symmetric(1), 200, 1, &IdsGrid::default()).is_err());
        assert!(lyapunov_transfer(&presets::raw_biased(1), 200, 1, Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn cache_roundtrip_checks_hash() {
        let dir = std::env::temp_dir().join(format!("hnlab-ids-{}", std::process::id()));
        let path = dir.join("ids.json");
        let ids = estimate_ids(&presets::uniform_biased(2), 150, 1, &IdsGrid::Auto { points: 64 }).unwrap();
        ids.save_cache(&path).unwrap();
        let back = IdsEstimate::load_cache(&path, Some(&ids.spec_hash)).unwrap();
        assert_eq!(back, ids);
        assert!(IdsEstimate::load_cache(&path, Some("0000")).is_err());
        let _ = std::fs::remove_dir_all(dir);
    }
}

//! Invariant battery: exclusion rectangles, Thouless residual, rank-2
//! determinant identity, eigenvector bounds and the weak-convergence panel.
//! Every check reports its measured value next to its budget.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{trace_curve, Coupling, CurveModel, TestFunction, XGrid};
use crate::eig::{boundary_bounds, rank2_det, spectrum, transfer_bounds, SpectrumResult};
use crate::ensemble::{sample_realization, EnsembleSpec};
use crate::error::{Error, Result};
use crate::operator::{build, OperatorBundle};
use crate::stats::{estimate_ids, lyapunov_thouless, lyapunov_transfer, IdsEstimate, IdsGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub budget: f64,
    /// `true` when `measured` must stay below `budget`, `false` when it must reach it.
    pub upper: bool,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn below(name: &str, measured: f64, budget: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            measured,
            budget,
            upper: true,
            passed: measured < budget,
            detail: detail.into(),
        }
    }

    pub fn at_least(name: &str, measured: f64, budget: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            measured,
            budget,
            upper: false,
            passed: measured >= budget,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: measured {:.6e} {} budget {:.6e}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            if self.upper { "<" } else { ">=" },
            self.budget,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

/// Closed axis-aligned rectangle; membership also counts the conjugate image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, z: Complex64) -> bool {
        let hit = |y: f64| z.re >= self.x0 && z.re <= self.x1 && y >= self.y0 && y <= self.y1;
        hit(z.im) || hit(-z.im)
    }

    fn samples(&self, m: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity((m + 1) * (m + 1));
        for i in 0..=m {
            for j in 0..=m {
                let x = self.x0 + (self.x1 - self.x0) * i as f64 / m as f64;
                let y = self.y0 + (self.y1 - self.y0) * j as f64 / m as f64;
                out.push(Complex64::new(x, y));
            }
        }
        out
    }
}

/// `D1`: outside every contour (`γ̄ > |g|`); `D2`: inside one (`γ̄ < |g|`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Outer,
    Inner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRect {
    pub rect: Rect,
    pub domain: Domain,
    /// Smallest sampled `γ̄ - |g|` (outer) or `|g| - γ̄` (inner).
    pub achieved_margin: f64,
}

const RECT_SAMPLES: usize = 24;

/// Smallest signed margin over a sample grid of the rectangle.
pub fn rect_margin(model: &CurveModel, rect: &Rect, domain: Domain) -> f64 {
    let g = model.g.abs();
    rect.samples(RECT_SAMPLES)
        .par_iter()
        .map(|&z| {
            let gam = model.gamma(z);
            match domain {
                Domain::Outer => gam - g,
                Domain::Inner => g - gam,
            }
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Longest run of `xs` on which `pred` holds, as an index range.
fn longest_run(xs: &[f64], pred: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &x) in xs.iter().enumerate() {
        match (pred(x), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.map_or(true, |(a, b)| i - 1 - s > b - a) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if best.map_or(true, |(a, b)| xs.len() - 1 - s > b - a) {
            best = Some((s, xs.len() - 1));
        }
    }
    best
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect()
}

/// Shrink `[x0, x1]` symmetrically by 10% of its width.
fn trim(x0: f64, x1: f64) -> (f64, f64) {
    let d = 0.1 * (x1 - x0);
    (x0 + d, x1 - d)
}

fn accept(model: &CurveModel, rect: Rect, domain: Domain, margin: f64, out: &mut Vec<ExclusionRect>) {
    if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
        return;
    }
    let achieved = rect_margin(model, &rect, domain);
    if achieved > margin {
        out.push(ExclusionRect {
            rect,
            domain,
            achieved_margin: achieved,
        });
    }
}

/// Rectangles in `D1 \ ℝ` and `D2` whose sampled margin exceeds `margin`.
///
/// Inner rectangles straddle the real axis inside each contour; outer ones
/// sit above each arc, above each interval of `Σ`, and beside the support.
/// Heights are found by halving, using that `γ̄` increases with `|Im z|`.
pub fn exclusion_rectangles(model: &CurveModel, margin: f64) -> Vec<ExclusionRect> {
    let g = model.g.abs();
    let gam = |x: f64, y: f64| model.gamma(Complex64::new(x, y));
    let mut out = Vec::new();
    for arc in &model.arcs {
        let xs = linspace(arc.a, arc.a_prime, 400);
        // inner: real segment where |g| - γ̄ clears the margin with room to spare
        if let Some((i, j)) = longest_run(&xs, |x| g - gam(x, 0.0) > 1.5 * margin) {
            let (x0, x1) = trim(xs[i], xs[j]);
            let mut h = 0.5 * linspace(x0, x1, 50).into_iter().map(|x| arc.height(x)).fold(f64::INFINITY, f64::min);
            for _ in 0..30 {
                let top = Rect { x0, x1, y0: h, y1: h };
                if rect_margin(model, &top, Domain::Inner) > margin {
                    break;
                }
                h *= 0.5;
            }
            accept(model, Rect { x0, x1, y0: 0.0, y1: h }, Domain::Inner, margin, &mut out);
        }
        // outer: band above the middle of the arc
        let (x0, x1) = trim(arc.a + 0.25 * (arc.a_prime - arc.a), arc.a_prime - 0.25 * (arc.a_prime - arc.a));
        let top = linspace(x0, x1, 50).into_iter().map(|x| arc.height(x)).fold(0.0, f64::max);
        let mut y0 = top + 0.05;
        for _ in 0..40 {
            let bottom = Rect { x0, x1, y0, y1: y0 };
            if rect_margin(model, &bottom, Domain::Outer) > margin {
                break;
            }
            y0 += 0.05;
        }
        accept(model, Rect { x0, x1, y0, y1: y0 + 0.5 }, Domain::Outer, margin, &mut out);
    }
    // outer: just above Σ where γ̄ - |g| clears the margin on the axis
    for &(a, b) in &model.sigma {
        let xs = linspace(a, b, 200);
        if let Some((i, j)) = longest_run(&xs, |x| gam(x, 0.0) - g > 1.5 * margin) {
            let (x0, x1) = trim(xs[i], xs[j]);
            accept(model, Rect { x0, x1, y0: 0.02, y1: 0.3 }, Domain::Outer, margin, &mut out);
        }
    }
    // outer: right of the support
    let (_, s1) = model.ids.support;
    let w = 0.25 * model.ids.support_radius().max(0.5);
    accept(model, Rect { x0: s1 + 0.1 * w, x1: s1 + w, y0: 0.02, y1: w }, Domain::Outer, margin, &mut out);
    out
}

/// Eigenvalues (or their conjugates) inside `rect`, summed over the spectra.
pub fn count_in_rect(spectra: &[SpectrumResult], rect: &Rect) -> usize {
    spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .filter(|z| rect.contains(**z))
        .count()
}

/// `ln|det A|` for a dense complex column-major matrix by LU with partial pivoting.
pub fn dense_log_abs_det(mut a: Vec<Complex64>, n: usize) -> f64 {
    let idx = |i: usize, j: usize| i + j * n;
    let mut acc = 0.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[idx(x, k)].norm().partial_cmp(&a[idx(y, k)].norm()).unwrap())
            .unwrap();
        if a[idx(p, k)].norm() == 0.0 {
            return f64::NEG_INFINITY;
        }
        if p != k {
            for j in 0..n {
                a.swap(idx(p, j), idx(k, j));
            }
        }
        let piv = a[idx(k, k)];
        acc += piv.norm().ln();
        for i in k + 1..n {
            let f = a[idx(i, k)] / piv;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let t = a[idx(k, j)];
                a[idx(i, j)] -= f * t;
            }
        }
    }
    acc
}

/// `|ln|det(J - zI)| - ln|d| - ln|det(H - zI)||` with the left side from dense LU.
pub fn rank2_identity_error(bundle: &OperatorBundle, z: Complex64) -> Result<f64> {
    let n = bundle.n;
    let mut a: Vec<Complex64> = bundle.dense_j().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    for i in 0..n {
        a[i + i * n] -= z;
    }
    let lhs = dense_log_abs_det(a, n);
    let d = rank2_det(bundle, z)?;
    let h = crate::eig::resolvent_corners(bundle, z)?.det;
    Ok((lhs - d.log_mod - h.log_mod).abs())
}

fn random_z(rng: &mut ChaCha8Rng, re: (f64, f64), im: (f64, f64)) -> Complex64 {
    let x = rng.gen_range(re.0..re.1);
    let y = rng.gen_range(im.0..im.1);
    Complex64::new(x, if rng.gen_bool(0.5) { y } else { -y })
}

/// Largest rank-2 identity error over `reps` realizations and `points` random non-real `z` each.
pub fn rank2_identity_battery(spec: &EnsembleSpec, n: usize, reps: usize, points: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0001);
    let mut worst = 0.0f64;
    for r in 0..reps as u64 {
        let b = build(&sample_realization(spec, n, r)?)?;
        for _ in 0..points {
            let z = random_z(&mut rng, (-3.0, 3.0), (0.05, 2.0));
            worst = worst.max(rank2_identity_error(&b, z)?);
        }
    }
    Ok(worst)
}

/// Smallest slack of the eigenvector bounds over `count` random
/// `(realization, n, z)` with `Im z ∈ [0.1, 2]`, for `S_n` and `B_n S_n`.
pub fn eigenvector_bounds_battery(spec: &EnsembleSpec, n_range: (usize, usize), count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0002);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let n = rng.gen_range(n_range.0..=n_range.1);
        let r = rng.gen_range(0..1000u64);
        let x = rng.gen_range(-3.0..3.0);
        let y = rng.gen_range(0.1..2.0);
        let b = build(&sample_realization(spec, n, r)?)?;
        let z = Complex64::new(x, y);
        worst = worst
            .min(transfer_bounds(&b, z)?.min_slack())
            .min(boundary_bounds(&b, z)?.min_slack());
    }
    Ok(worst)
}

/// `max |lyapunov_transfer - lyapunov_thouless|` over the given points.
pub fn thouless_battery(spec: &EnsembleSpec, ids: &IdsEstimate, n: usize, reps: usize, points: &[Complex64]) -> Result<f64> {
    let mlc = crate::stats::mean_log_c(spec)?;
    let mut worst = 0.0f64;
    for &z in points {
        let t = lyapunov_transfer(spec, n, reps, z)?;
        worst = worst.max((t.gamma_hat - lyapunov_thouless(ids, mlc, z)).abs());
    }
    Ok(worst)
}

/// Default off-axis probe points for the Thouless comparison.
pub fn thouless_points() -> Vec<Complex64> {
    vec![
        Complex64::new(1.0, 1.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(-1.0, 0.8),
        Complex64::new(2.0, 0.3),
        Complex64::new(0.5, -1.5),
        Complex64::new(3.0, 2.0),
    ]
}

/// `count` Gaussian bumps of the given width: one at the middle of each `Σ`
/// interval, one on the real axis inside each contour, the rest along the
/// arcs (endpoints included).
pub fn bump_panel(model: &CurveModel, count: usize, width: f64) -> Vec<TestFunction> {
    let bump = |re: f64, im: f64| TestFunction::GaussianBump { re, im, width };
    let mut panel: Vec<TestFunction> = model.sigma.iter().map(|&(a, b)| bump(0.5 * (a + b), 0.0)).collect();
    panel.extend(model.arcs.iter().map(|a| bump(0.5 * (a.a + a.a_prime), 0.0)));
    let remaining = count.saturating_sub(panel.len());
    if model.arcs.is_empty() {
        let (s0, s1) = model.ids.support;
        for k in 0..remaining {
            panel.push(bump(s0 + (s1 - s0) * (k as f64 + 0.5) / remaining as f64, 0.0));
        }
    } else {
        let per = remaining / model.arcs.len();
        let extra = remaining % model.arcs.len();
        for (j, arc) in model.arcs.iter().enumerate() {
            let m = per + usize::from(j < extra);
            let last = arc.points.len() - 1;
            for k in 0..m {
                let i = if m > 1 { last * k / (m - 1) } else { last / 2 };
                panel.push(bump(arc.points[i].x, arc.points[i].y));
            }
        }
    }
    panel.truncate(count);
    panel
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub function: TestFunction,
    pub predicted: f64,
    /// `(1/N) Σ f(z_i)` per size, pooled over realizations.
    pub empirical: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConvergence {
    pub sizes: Vec<usize>,
    pub realizations: Vec<usize>,
    pub rows: Vec<PanelRow>,
    /// `max_f |empirical - predicted|` per size.
    pub max_errors: Vec<f64>,
    pub predicted_mass: f64,
}

impl WeakConvergence {
    pub fn is_decreasing(&self) -> bool {
        self.max_errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn table(&self) -> String {
        let mut s = String::from("function\tpredicted");
        for n in &self.sizes {
            s.push_str(&format!("\tn={n}"));
        }
        s.push('\n');
        for row in &self.rows {
            let label = match &row.function {
                TestFunction::GaussianBump { re, im, width } => format!("bump({re:.3}{im:+.3}i, w={width})"),
                other => format!("{other:?}"),
            };
            s.push_str(&format!("{label}\t{:.6}", row.predicted));
            for e in &row.empirical {
                s.push_str(&format!("\t{:+.6}", e - row.predicted));
            }
            s.push('\n');
        }
        s.push_str("max error");
        s.push('\t');
        for e in &self.max_errors {
            s.push_str(&format!("\t{e:.6}"));
        }
        s.push('\n');
        s
    }
}

/// Empirical against predicted panel integrals for each group of spectra (one group per size).
pub fn weak_convergence(model: &CurveModel, groups: &[Vec<SpectrumResult>], panel: &[TestFunction]) -> WeakConvergence {
    let predicted: Vec<f64> = panel.iter().map(|f| model.limit_measure_integral(f)).collect();
    let mut rows: Vec<PanelRow> = panel
        .iter()
        .zip(&predicted)
        .map(|(f, &p)| PanelRow {
            function: f.clone(),
            predicted: p,
            empirical: Vec::new(),
        })
        .collect();
    let mut max_errors = Vec::new();
    for group in groups {
        let total: usize = group.iter().map(|s| s.n).sum();
        let mut worst = 0.0f64;
        for row in rows.iter_mut() {
            let sum: f64 = group.iter().flat_map(|s| s.eigenvalues.iter()).map(|&z| row.function.eval(z)).sum();
            let e = sum / total as f64;
            worst = worst.max((e - row.predicted).abs());
            row.empirical.push(e);
        }
        max_errors.push(worst);
    }
    WeakConvergence {
        sizes: groups.iter().map(|g| g.first().map_or(0, |s| s.n)).collect(),
        realizations: groups.iter().map(Vec::len).collect(),
        rows,
        max_errors,
        predicted_mass: model.total_mass(),
    }
}

/// Spectra of realizations `0..reps` at size `n`.
pub fn spectra_for(spec: &EnsembleSpec, n: usize, reps: usize) -> Result<Vec<SpectrumResult>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| spectrum(&build(&sample_realization(spec, n, r)?)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub ids_n: usize,
    pub ids_reps: usize,
    pub ids_points: usize,
    pub x_points: usize,
    pub rank2_n: usize,
    pub rank2_reps: usize,
    pub rank2_points: usize,
    pub rank2_budget: f64,
    pub bounds_n_min: usize,
    pub bounds_n_max: usize,
    pub bounds_count: usize,
    pub bounds_budget: f64,
    pub thouless_n: usize,
    pub thouless_reps: usize,
    pub thouless_budget: f64,
    pub exclusion_n: usize,
    pub exclusion_reps: usize,
    pub exclusion_margin: f64,
    /// Sizes with the realization count for each.
    pub weak_sizes: Vec<(usize, usize)>,
    pub panel_size: usize,
    pub panel_width: f64,
    pub mass_tol: f64,
    /// Checked in addition to the automatic rectangles.
    pub rectangles: Vec<RectRequest>,
    /// Replaces the automatic bump panel when non-empty.
    pub panel: Vec<TestFunction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectRequest {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub domain: Domain,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            ids_n: 100_000,
            ids_reps: 4,
            ids_points: crate::stats::DEFAULT_GRID_POINTS,
            x_points: crate::curves::DEFAULT_X_POINTS,
            rank2_n: 30,
            rank2_reps: 20,
            rank2_points: 10,
            rank2_budget: 1e-6,
            bounds_n_min: 10,
            bounds_n_max: 200,
            bounds_count: 100,
            bounds_budget: -1e-9,
            thouless_n: 100_000,
            thouless_reps: 8,
            thouless_budget: 0.02,
            exclusion_n: 2001,
            exclusion_reps: 5,
            exclusion_margin: 0.1,
            weak_sizes: vec![(500, 16), (1000, 8), (2000, 4)],
            panel_size: 10,
            panel_width: 0.1,
            mass_tol: 0.02,
            rectangles: Vec::new(),
            panel: Vec::new(),
        }
    }
}

impl VerifySettings {
    /// Small sizes for fast smoke runs.
    pub fn quick() -> Self {
        VerifySettings {
            ids_n: 20_000,
            ids_reps: 2,
            ids_points: 1024,
            x_points: 200,
            rank2_reps: 5,
            bounds_n_max: 60,
            bounds_count: 20,
            thouless_n: 20_000,
            thouless_reps: 4,
            thouless_budget: 0.03,
            exclusion_n: 300,
            exclusion_reps: 2,
            weak_sizes: vec![(100, 32), (200, 16), (400, 8)],
            panel_width: 0.25,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank2_budget", self.rank2_budget),
            ("thouless_budget", self.thouless_budget),
            ("exclusion_margin", self.exclusion_margin),
            ("panel_width", self.panel_width),
            ("mass_tol", self.mass_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(Error::validation(k, "must be positive"));
            }
        }
        if self.weak_sizes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::validation("weak_sizes", "sizes must be ascending"));
        }
        if self.bounds_n_min < 2 || self.bounds_n_min > self.bounds_n_max {
            return Err(Error::validation("bounds_n_min", "need 2 <= bounds_n_min <= bounds_n_max"));
        }
        for r in &self.rectangles {
            if !(r.x0 < r.x1 && r.y0 < r.y1) || ![r.x0, r.x1, r.y0, r.y1].iter().all(|v| v.is_finite()) {
                return Err(Error::validation("rectangles", "need finite x0 < x1 and y0 < y1"));
            }
        }
        if let Some(f) = self.panel.iter().find(|f| matches!(f, TestFunction::GaussianBump { width, .. } if !(*width > 0.0))) {
            return Err(Error::validation("panel", format!("bump width must be positive: {f:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub spec_hash: String,
    pub checks: Vec<Check>,
    pub rectangles: Vec<(ExclusionRect, usize)>,
    pub panel: Option<WeakConvergence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&c.line());
            s.push('\n');
        }
        for (r, count) in &self.rectangles {
            s.push_str(&format!(
                "rect {:?} [{:.4}, {:.4}] x [{:.4}, {:.4}] margin {:.4}: {} eigenvalues\n",
                r.domain, r.rect.x0, r.rect.x1, r.rect.y0, r.rect.y1, r.achieved_margin, count
            ));
        }
        if let Some(p) = &self.panel {
            s.push_str(&p.table());
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the whole battery on one ensemble. Raw-mode ensembles are rejected.
pub fn run_battery(spec: &EnsembleSpec, settings: &VerifySettings) -> Result<VerifyReport> {
    settings.validate()?;
    spec.require_log_moments("verify")?;
    let mut checks = Vec::new();

    let e = rank2_identity_battery(spec, settings.rank2_n, settings.rank2_reps, settings.rank2_points)?;
    checks.push(Check::below("rank-2 identity", e, settings.rank2_budget, format!("n={}", settings.rank2_n)));

    let s = eigenvector_bounds_battery(spec, (settings.bounds_n_min, settings.bounds_n_max), settings.bounds_count)?;
    checks.push(Check::at_least("eigenvector bounds slack", s, settings.bounds_budget, format!("{} samples", settings.bounds_count)));

    let ids = estimate_ids(spec, settings.ids_n, settings.ids_reps, &IdsGrid::Auto { points: settings.ids_points })?;
    let t = thouless_battery(spec, &ids, settings.thouless_n, settings.thouless_reps, &thouless_points())?;
    checks.push(Check::below("thouless residual", t, settings.thouless_budget, format!("n={}", settings.thouless_n)));

    let model = trace_curve(&ids, &Coupling::from_spec(spec)?, &XGrid::Auto(settings.x_points));
    let mass = model.total_mass();
    checks.push(Check::below("predicted mass error", (mass - 1.0).abs(), settings.mass_tol, format!("mass={mass:.6}")));

    let mut rects = exclusion_rectangles(&model, settings.exclusion_margin);
    let mut misplaced = 0usize;
    for r in &settings.rectangles {
        let rect = Rect { x0: r.x0, x1: r.x1, y0: r.y0, y1: r.y1 };
        let achieved_margin = rect_margin(&model, &rect, r.domain);
        if achieved_margin <= 0.0 {
            misplaced += 1;
        }
        rects.push(ExclusionRect { rect, domain: r.domain, achieved_margin });
    }
    if !settings.rectangles.is_empty() {
        checks.push(Check::below(
            "configured rectangles outside their domain",
            misplaced as f64,
            0.5,
            format!("{} configured", settings.rectangles.len()),
        ));
    }
    let spectra = spectra_for(spec, settings.exclusion_n, settings.exclusion_reps)?;
    let rectangles: Vec<(ExclusionRect, usize)> = rects.into_iter().map(|r| {
        let c = count_in_rect(&spectra, &r.rect);
        (r, c)
    }).collect();
    let inside: usize = rectangles.iter().map(|(_, c)| c).sum();
    checks.push(Check::below(
        "eigenvalues in exclusion rectangles",
        inside as f64,
        0.5,
        format!("{} rectangles, n={}", rectangles.len(), settings.exclusion_n),
    ));

    let panel = if settings.weak_sizes.is_empty() {
        None
    } else {
        let functions = if settings.panel.is_empty() {
            bump_panel(&model, settings.panel_size, settings.panel_width)
        } else {
            settings.panel.clone()
        };
        let groups = settings
            .weak_sizes
            .iter()
            .map(|&(n, r)| spectra_for(spec, n, r))
            .collect::<Result<Vec<_>>>()?;
        let wc = weak_convergence(&model, &groups, &functions);
        let worsened = wc.max_errors.windows(2).filter(|w| w[1] >= w[0]).count();
        checks.push(Check::below(
            "weak convergence non-decreasing steps",
            worsened as f64,
            0.5,
            format!("max errors {:?}", wc.max_errors),
        ));
        Some(wc)
    };

    Ok(VerifyReport {
        spec_hash: spec.hash(),
        checks,
        rectangles,
        panel,
    })
}

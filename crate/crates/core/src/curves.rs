//! The predicted limit spectrum: the curve `γ̄(z) = |g|`, the real part `Σ`,
//! the density `ρ` along the curve, and integrals against the limit measure.
//!
//! With `γ̄ = Φ - E ln c_0` and `|g| = ½|Eη - Eξ|`, the curve is the level set
//! `Φ(z) = max(Eξ, Eη)`. For fixed `x`, `Φ(x + iy)` is strictly increasing in
//! `y ≥ 0`, so the upper half of the curve is a graph `y(x)` over the set
//! where `Φ(x + i0)` lies below the level.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::stats::{phi, stieltjes, stieltjes_upper_limit, IdsEstimate};

pub const DEFAULT_CURVE_TOL: f64 = 1e-6;
pub const DEFAULT_X_POINTS: usize = 800;
/// Width of the band around the level where a real point belongs to neither `Σ` nor a contour.
pub const TIE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub g: f64,
    pub mean_xi: f64,
    pub mean_eta: f64,
}

impl Coupling {
    pub fn new(mean_xi: f64, mean_eta: f64) -> Self {
        Coupling {
            g: 0.5 * (mean_eta - mean_xi),
            mean_xi,
            mean_eta,
        }
    }

    pub fn from_spec(spec: &EnsembleSpec) -> Result<Self> {
        let (x, e) = spec.log_means()?;
        Ok(Self::new(x, e))
    }

    /// Coupling `g` with the same `E ln c_0` as `self`.
    pub fn with_g(&self, g: f64) -> Self {
        let m = 0.5 * (self.mean_xi + self.mean_eta);
        Coupling::new(m - g, m + g)
    }

    /// `max(Eξ, Eη)`, the level of `Φ` on the curve.
    pub fn threshold(&self) -> f64 {
        self.mean_xi.max(self.mean_eta)
    }

    /// `E ln c_0 = ½(Eξ + Eη)`.
    pub fn mean_log_c(&self) -> f64 {
        0.5 * (self.mean_xi + self.mean_eta)
    }
}

/// `g = ½ E(η - ξ)`, exact from the distribution parameters.
pub fn coupling_g(spec: &EnsembleSpec) -> Result<f64> {
    Ok(Coupling::from_spec(spec)?.g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum XGrid {
    /// This many points spread over the qualifying intervals, clustered at their ends.
    Auto(usize),
    Explicit(Vec<f64>),
}

impl Default for XGrid {
    fn default() -> Self {
        XGrid::Auto(DEFAULT_X_POINTS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub x_grid: XGrid,
    pub curve_tol: f64,
    /// Resolution of the initial real-axis scan.
    pub scan_points: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            x_grid: XGrid::default(),
            curve_tol: DEFAULT_CURVE_TOL,
            scan_points: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub x: f64,
    pub y: f64,
    pub rho: f64,
}

impl ArcPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Upper half of one contour; its conjugate closes it around `[a, a_prime]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub a: f64,
    pub a_prime: f64,
    pub points: Vec<ArcPoint>,
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].z() - w[0].z()).norm()).sum()
    }

    /// `∫ ρ dl` over this upper arc (trapezoid on the polyline).
    pub fn mass(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[0].rho + w[1].rho) * (w[1].z() - w[0].z()).norm())
            .sum()
    }

    /// Height of the arc at `x` by linear interpolation (0 outside `[a, a']`).
    pub fn height(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.a_prime {
            return 0.0;
        }
        let i = self.points.partition_point(|p| p.x <= x);
        if i == 0 || i >= self.points.len() {
            return 0.0;
        }
        let (p, q) = (self.points[i - 1], self.points[i]);
        if q.x == p.x {
            return p.y.max(q.y);
        }
        p.y + (q.y - p.y) * (x - p.x) / (q.x - p.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveModel {
    pub g: f64,
    pub threshold: f64,
    pub mean_log_c: f64,
    pub arcs: Vec<Arc>,
    pub sigma: Vec<(f64, f64)>,
    /// Real solutions of `γ̄(x) = |g|` that bound no contour; they carry no mass.
    pub isolated_real_points: Vec<f64>,
    pub curve_tol: f64,
    pub warnings: Vec<String>,
    pub ids_hash: String,
    pub ids: IdsEstimate,
}

/// Signed distance to the level: `Φ(z) - level`.
fn level_fn(ids: &IdsEstimate, level: f64, z: Complex64) -> f64 {
    phi(ids, z) - level
}

/// Root of a function on `[lo, hi]` with `f(lo) < 0 < f(hi)` (Illinois variant of regula falsi).
fn illinois(mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut side = 0i8;
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for _ in 0..200 {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() < tol || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    best
}

/// Root of `f` between `a` and `b` where `f(a)` and `f(b)` have opposite signs.
fn bracket_root(a: f64, b: f64, fa: f64, fb: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    if fa < 0.0 {
        illinois(a, b, fa, fb, tol, f)
    } else {
        let (x, v) = illinois(a, b, -fa, -fb, tol, |x| -f(x));
        (x, -v)
    }
}

/// Height `y > 0` with `Φ(x + iy) = level`, given `Φ(x + i0) < level`.
fn solve_height(ids: &IdsEstimate, level: f64, x: f64, f0: f64, tol: f64) -> (f64, f64) {
    // Φ(x+iy) ≥ ln y, so the level is crossed below y = e^level
    let mut hi = 1.01 * level.exp() + 1e-12;
    let mut fhi = level_fn(ids, level, Complex64::new(x, hi));
    while fhi <= 0.0 {
        hi *= 2.0;
        fhi = level_fn(ids, level, Complex64::new(x, hi));
    }
    illinois(0.0, hi, f0, fhi, tol, |y| level_fn(ids, level, Complex64::new(x, y)))
}

/// Interval scan of the real line covering every point where `Φ(x + i0)` can reach `level`.
fn scan_range(ids: &IdsEstimate, level: f64) -> (f64, f64) {
    let reach = 1.01 * level.exp();
    (ids.support.0 - reach, ids.support.1 + reach)
}

/// Maximal intervals of `{x : Φ(x + i0) < level}` with refined endpoints.
fn below_level_intervals(
    ids: &IdsEstimate,
    level: f64,
    scan_points: usize,
    tol: f64,
    warnings: &mut Vec<String>,
    isolated: &mut Vec<f64>,
) -> Vec<(f64, f64)> {
    let (lo, hi) = scan_range(ids, level);
    let m = scan_points.max(16);
    let xs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
    let fs: Vec<f64> = xs.par_iter().map(|&x| level_fn(ids, level, Complex64::new(x, 0.0))).collect();
    let f = |x: f64| level_fn(ids, level, Complex64::new(x, 0.0));
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..=m {
        let below = fs[i] < 0.0;
        if below && start.is_none() {
            let a = if i == 0 {
                xs[0]
            } else {
                let (r, fr) = bracket_root(xs[i - 1], xs[i], fs[i - 1], fs[i], 0.01 * tol, f);
                if fr.abs() > tol {
                    warnings.push(format!("endpoint near x={r:.6} refined only to |γ̄-|g||={:.2e}", fr.abs()));
                }
                r
            };
            start = Some(a);
        } else if !below && start.is_some() {
            let (r, fr) = bracket_root(xs[i - 1], xs[i], fs[i - 1], fs[i], 0.01 * tol, f);
            if fr.abs() > tol {
                warnings.push(format!("endpoint near x={r:.6} refined only to |γ̄-|g||={:.2e}", fr.abs()));
            }
            out.push((start.take().unwrap(), r));
        }
        // local minimum touching the level without crossing it
        if i > 0 && i < m && !below && fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1] && fs[i] < tol {
            isolated.push(xs[i]);
        }
    }
    if let Some(a) = start {
        warnings.push("sub-level set reaches the scan boundary".to_string());
        out.push((a, xs[m]));
    }
    out
}

fn endpoint_rho(ids: &IdsEstimate, x: f64) -> f64 {
    stieltjes_upper_limit(ids, x).norm() / (2.0 * std::f64::consts::PI)
}

/// Trace the curve with default tolerances.
pub fn trace_curve(ids: &IdsEstimate, coupling: &Coupling, x_grid: &XGrid) -> CurveModel {
    trace_curve_with(
        ids,
        coupling,
        &TraceOptions {
            x_grid: x_grid.clone(),
            ..TraceOptions::default()
        },
    )
}

pub fn trace_curve_with(ids: &IdsEstimate, coupling: &Coupling, opts: &TraceOptions) -> CurveModel {
    let level = coupling.threshold();
    let tol = opts.curve_tol;
    let mut warnings = Vec::new();
    let mut isolated = Vec::new();
    let mut arcs = Vec::new();
    if coupling.g != 0.0 {
        let intervals = below_level_intervals(ids, level, opts.scan_points, tol, &mut warnings, &mut isolated);
        let xs_per: Vec<Vec<f64>> = match &opts.x_grid {
            XGrid::Auto(total) => {
                let total_len: f64 = intervals.iter().map(|(a, b)| b - a).sum();
                intervals
                    .iter()
                    .map(|&(a, b)| {
                        let k = ((*total as f64) * (b - a) / total_len.max(f64::MIN_POSITIVE)).round() as usize;
                        let k = k.max(8);
                        // cosine spacing: y(x) behaves like a square root at the ends
                        (0..=k)
                            .map(|i| {
                                let t = i as f64 / k as f64;
                                a + (b - a) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos())
                            })
                            .collect()
                    })
                    .collect()
            }
            XGrid::Explicit(grid) => intervals
                .iter()
                .map(|&(a, b)| {
                    let mut v = vec![a];
                    v.extend(grid.iter().copied().filter(|&x| x > a && x < b));
                    v.push(b);
                    v
                })
                .collect(),
        };
        for (&(a, b), xs) in intervals.iter().zip(&xs_per) {
            let mut points: Vec<ArcPoint> = xs
                .par_iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == 0 || i + 1 == xs.len() {
                        return (ArcPoint { x, y: 0.0, rho: endpoint_rho(ids, x) }, 0.0);
                    }
                    let f0 = level_fn(ids, level, Complex64::new(x, 0.0));
                    if f0 >= 0.0 {
                        return (ArcPoint { x, y: 0.0, rho: endpoint_rho(ids, x) }, f0.abs());
                    }
                    let (y, fy) = solve_height(ids, level, x, f0, 0.1 * tol);
                    let z = Complex64::new(x, y);
                    let rho = stieltjes(ids, z).map(|s| s.norm()).unwrap_or(0.0) / (2.0 * std::f64::consts::PI);
                    (ArcPoint { x, y, rho }, fy.abs())
                })
                .collect::<Vec<_>>()
                .into_iter()
                .map(|(p, err)| {
                    if err > tol {
                        warnings.push(format!("arc point x={:.6} solved only to {:.2e}", p.x, err));
                    }
                    p
                })
                .collect();
            points.sort_by(|p, q| p.x.partial_cmp(&q.x).unwrap());
            arcs.push(Arc { a, a_prime: b, points });
        }
    }
    let sigma = real_support_sigma(ids, level);
    CurveModel {
        g: coupling.g,
        threshold: level,
        mean_log_c: coupling.mean_log_c(),
        arcs,
        sigma,
        isolated_real_points: isolated,
        curve_tol: tol,
        warnings,
        ids_hash: ids.hash(),
        ids: ids.clone(),
    }
}

/// `Σ = {λ ∈ supp dN : Φ(λ + i0) > threshold}` as disjoint intervals.
pub fn real_support_sigma(ids: &IdsEstimate, threshold: f64) -> Vec<(f64, f64)> {
    let (s0, s1) = ids.support;
    // probe every grid node in the support and every cell midpoint
    let mut xs: Vec<f64> = Vec::new();
    for w in ids.grid.windows(2) {
        if w[1] <= s0 || w[0] >= s1 {
            continue;
        }
        xs.push(w[0].max(s0));
        xs.push(0.5 * (w[0] + w[1]));
    }
    xs.push(s1);
    xs.dedup();
    let fs: Vec<f64> = xs
        .par_iter()
        .map(|&x| level_fn(ids, threshold, Complex64::new(x, 0.0)))
        .collect();
    let f = |x: f64| level_fn(ids, threshold, Complex64::new(x, 0.0));
    let inside = |v: f64| v > TIE_BAND;
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..xs.len() {
        let ins = inside(fs[i]);
        if ins && start.is_none() {
            let a = if i == 0 {
                xs[0]
            } else {
                bracket_root(xs[i - 1], xs[i], fs[i - 1] - TIE_BAND, fs[i] - TIE_BAND, 1e-13, |x| f(x) - TIE_BAND).0
            };
            start = Some(a);
        } else if !ins && start.is_some() {
            let b = bracket_root(xs[i - 1], xs[i], fs[i - 1] - TIE_BAND, fs[i] - TIE_BAND, 1e-13, |x| f(x) - TIE_BAND).0;
            out.push((start.take().unwrap(), b));
        }
    }
    if let Some(a) = start {
        out.push((a, *xs.last().unwrap()));
    }
    out.retain(|(a, b)| b > a);
    out
}

/// `ρ(z) = (1/2π) |∫ dN(λ)/(λ - z)|` for `Im z > 0`.
pub fn curve_density(ids: &IdsEstimate, z: Complex64) -> Result<f64> {
    if z.im <= 0.0 {
        return Err(Error::validation("z", "curve density is evaluated at Im z > 0"));
    }
    Ok(stieltjes(ids, z)?.norm() / (2.0 * std::f64::consts::PI))
}

/// `min_x γ̄(x)` and `max_{x ∈ supp dN} γ̄(x)` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCouplings {
    pub g1: f64,
    pub x1: f64,
    pub g2: f64,
    pub x2: f64,
}

pub fn critical_couplings(ids: &IdsEstimate, mean_log_c: f64, points: usize) -> CriticalCouplings {
    let (s0, s1) = ids.support;
    let m = points.max(16);
    let xs: Vec<f64> = (0..=m).map(|i| s0 + (s1 - s0) * i as f64 / m as f64).collect();
    let gam: Vec<f64> = xs.par_iter().map(|&x| phi(ids, Complex64::new(x, 0.0)) - mean_log_c).collect();
    // γ̄ grows like ln|x| outside the support, so the minimum is inside it
    let mut i1 = 0;
    let mut i2 = 0;
    for i in 0..=m {
        if gam[i] < gam[i1] {
            i1 = i;
        }
        if gam[i] > gam[i2] {
            i2 = i;
        }
    }
    // golden-section search on the neighbouring cells, minimizing sign * γ̄
    let refine = |i: usize, sign: f64| {
        let h = (s1 - s0) / m as f64;
        let (mut a, mut b) = ((xs[i] - h).max(s0), (xs[i] + h).min(s1));
        let f = |x: f64| sign * (phi(ids, Complex64::new(x, 0.0)) - mean_log_c);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        let v = sign * f(x);
        if sign * v < sign * gam[i] {
            (x, v)
        } else {
            (xs[i], gam[i])
        }
    };
    let (x1, g1) = refine(i1, 1.0);
    let (x2, g2) = refine(i2, -1.0);
    CriticalCouplings { g1, x1, g2, x2 }
}

/// Bounded test functions on the complex plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant { value: f64 },
    GaussianBump { re: f64, im: f64, width: f64 },
    ImagPart,
    /// `Re p(z) · max(0, 1 - |z|²/R²)²` with `p(z) = Σ coeffs[k] z^k`.
    PolyCutoff { coeffs: Vec<f64>, radius: f64 },
}

impl TestFunction {
    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::GaussianBump { re, im, width } => {
                let d = z - Complex64::new(*re, *im);
                (-d.norm_sqr() / (2.0 * width * width)).exp()
            }
            TestFunction::ImagPart => z.im,
            TestFunction::PolyCutoff { coeffs, radius } => {
                let cut = (1.0 - z.norm_sqr() / (radius * radius)).max(0.0);
                let p = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
                p.re * cut * cut
            }
        }
    }
}

impl CurveModel {
    pub fn gamma(&self, z: Complex64) -> f64 {
        phi(&self.ids, z) - self.mean_log_c
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// `∫_Σ dN`.
    pub fn sigma_mass(&self) -> f64 {
        self.sigma.iter().map(|&(a, b)| self.ids.mass(a, b)).fold(0.0, |s, m| s + m)
    }

    /// `2 ∫ ρ dl` over the upper arcs and their conjugates.
    pub fn arc_mass(&self) -> f64 {
        2.0 * self.arcs.iter().map(Arc::mass).sum::<f64>()
    }

    pub fn total_mass(&self) -> f64 {
        self.sigma_mass() + self.arc_mass()
    }

    /// Largest `|γ̄ - |g||` over the traced interior points.
    pub fn max_level_error(&self) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| a.points.iter())
            .filter(|p| p.y > 0.0)
            .map(|p| (self.gamma(p.z()) - self.g.abs()).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `z` lies strictly inside one of the contours.
    pub fn inside_contour(&self, z: Complex64) -> bool {
        self.arcs.iter().any(|a| z.im.abs() < a.height(z.re))
    }

    /// Euclidean distance from `z` to the traced curve and its conjugate.
    pub fn distance_to_curve(&self, z: Complex64) -> f64 {
        let w = Complex64::new(z.re, z.im.abs());
        let mut best = f64::INFINITY;
        for arc in &self.arcs {
            for s in arc.points.windows(2) {
                best = best.min(segment_distance(w, s[0].z(), s[1].z()));
            }
        }
        best
    }

    /// `∫_Σ f dN + ∫_𝓛 f ρ dl`.
    pub fn limit_measure_integral(&self, f: &TestFunction) -> f64 {
        limit_measure_integral(self, |z| f.eval(z))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "curve model".into(),
            reason: e.to_string(),
        })
    }

    /// Plot-ready CSV: one row per arc point (upper arcs), then Σ intervals as `y = NaN` rows.
    pub fn plot_csv(&self, extra: &[(&str, String)]) -> String {
        let mut meta: Vec<(&str, String)> = vec![
            ("g", format!("{:?}", self.g)),
            ("threshold", format!("{:?}", self.threshold)),
            ("ids_hash", self.ids_hash.clone()),
        ];
        meta.extend(extra.iter().cloned());
        let mut rows = Vec::new();
        for (k, arc) in self.arcs.iter().enumerate() {
            for p in &arc.points {
                rows.push(vec![k as f64, p.x, p.y, p.rho]);
            }
        }
        for &(a, b) in &self.sigma {
            rows.push(vec![-1.0, a, 0.0, f64::NAN]);
            rows.push(vec![-1.0, b, 0.0, f64::NAN]);
        }
        crate::io::csv_with_header(&meta, &["arc", "x", "y", "rho"], rows)
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// `∫_Σ f dN + ∫_𝓛 f ρ dl` for an arbitrary bounded continuous `f`.
///
/// `Σ` is split at the grid nodes so the density is constant on each piece,
/// then integrated by composite Simpson; arcs use the trapezoid rule on the
/// polyline, for both conjugate halves.
pub fn limit_measure_integral(model: &CurveModel, f: impl Fn(Complex64) -> f64) -> f64 {
    let ids = &model.ids;
    let mut real_part = 0.0;
    for &(a, b) in &model.sigma {
        for (c0, c1, d) in ids.cells() {
            let lo = c0.max(a);
            let hi = c1.min(b);
            if hi <= lo {
                continue;
            }
            let m = 8;
            let h = (hi - lo) / m as f64;
            let mut s = f(Complex64::new(lo, 0.0)) + f(Complex64::new(hi, 0.0));
            for k in 1..m {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(Complex64::new(lo + k as f64 * h, 0.0));
            }
            real_part += d * s * h / 3.0;
        }
    }
    let mut arc_part = 0.0;
    for arc in &model.arcs {
        for w in arc.points.windows(2) {
            let (p, q) = (w[0], w[1]);
            let dl = (q.z() - p.z()).norm();
            let up = p.rho * f(p.z()) + q.rho * f(q.z());
            let down = p.rho * f(p.z().conj()) + q.rho * f(q.z().conj());
            arc_part += 0.5 * (up + down) * dl;
        }
    }
    real_part + arc_part
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{presets, DistributionSpec, EnsembleSpec};
    use crate::stats::{estimate_ids, IdsGrid};

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_g(&EnsembleSpec::constant(0.3, 0.3, 0.0)).unwrap(), 0.0);
        assert_eq!(coupling_g(&EnsembleSpec::constant(0.0, 1.0, 0.0)).unwrap(), 0.5);
        let c = Coupling::new(-1.0, 0.2);
        assert!((c.with_g(0.1).mean_log_c() - c.mean_log_c()).abs() < 1e-15);
        assert!((c.with_g(0.1).g - 0.1).abs() < 1e-15);
        let heavy = EnsembleSpec::iid(
            DistributionSpec::Cauchy { loc: 0.0, scale: 1.0 },
            DistributionSpec::Constant { value: 0.0 },
            DistributionSpec::Constant { value: 0.0 },
            1,
        );
        assert!(coupling_g(&heavy).is_err());
    }

    #[test]
    fn zero_coupling_is_empty() {
        let ids = estimate_ids(&presets::anderson(3.0, 0.0, 1), 1000, 1, &IdsGrid::Auto { points: 256 }).unwrap();
        let m = trace_curve(&ids, &Coupling::new(0.0, 0.0), &XGrid::Auto(100));
        assert!(m.arcs.is_empty());
        // real component only: Σ is the whole support
        assert!((m.sigma_mass() - 1.0).abs() < 1e-6, "{}", m.sigma_mass());
    }

    #[test]
    fn traced_points_on_level() {
        let ids = estimate_ids(&presets::anderson(1.0, 0.4, 1), 800, 1, &IdsGrid::Auto { points: 512 }).unwrap();
        let m = trace_curve(&ids, &Coupling::new(-0.4, 0.4), &XGrid::Auto(120));
        assert!(!m.arcs.is_empty());
        assert!(m.max_level_error() < 1e-6);
        assert!((m.total_mass() - 1.0).abs() < 0.02, "mass {}", m.total_mass());
        assert!(m.limit_measure_integral(&TestFunction::ImagPart).abs() < 1e-12);
        for arc in &m.arcs {
            assert!(arc.points.windows(2).all(|w| w[0].x <= w[1].x));
        }
    }

    #[test]
    fn bump_is_one_at_center() {
        let f = TestFunction::GaussianBump { re: 1.0, im: -0.5, width: 0.2 };
        assert_eq!(f.eval(Complex64::new(1.0, -0.5)), 1.0);
        let p = TestFunction::PolyCutoff { coeffs: vec![1.0, 2.0], radius: 2.0 };
        assert!((p.eval(Complex64::new(1.0, 0.0)) - 3.0 * 0.75 * 0.75).abs() < 1e-15);
        assert_eq!(p.eval(Complex64::new(3.0, 0.0)), 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let ids = estimate_ids(&presets::anderson(1.0, 0.5, 2), 300, 1, &IdsGrid::Auto { points: 128 }).unwrap();
        let m = trace_curve(&ids, &Coupling::new(-0.5, 0.5), &XGrid::Auto(40));
        let back = CurveModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}

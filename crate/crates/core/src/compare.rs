//! Distances and histograms between empirical spectra and a traced limit model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curves::CurveModel;
use crate::eig::SpectrumResult;

/// Distance from `z` to the curve, its conjugate, and the real axis.
pub fn distance_to_limit_set(model: &CurveModel, z: Complex64) -> f64 {
    model.distance_to_curve(z).min(z.im.abs())
}

/// One-sided Hausdorff distance from the non-real eigenvalues (`|Im z| > im_tol`)
/// to the curve together with the real axis; 0 when there are none.
pub fn hausdorff_to_limit(spectra: &[SpectrumResult], model: &CurveModel, im_tol: f64) -> f64 {
    spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .filter(|z| z.im.abs() > im_tol)
        .map(|&z| distance_to_limit_set(model, z))
        .fold(0.0, f64::max)
}

/// Same as [`hausdorff_to_limit`] but against the traced curve only.
pub fn hausdorff_to_curve(spectra: &[SpectrumResult], model: &CurveModel, im_tol: f64) -> f64 {
    spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .filter(|z| z.im.abs() > im_tol)
        .map(|&z| model.distance_to_curve(z))
        .fold(0.0, f64::max)
}

/// Fraction of eigenvalues with `|Im z| < tol`.
pub fn real_fraction(spectra: &[SpectrumResult], tol: f64) -> f64 {
    let total: usize = spectra.iter().map(|s| s.n).sum();
    let real: usize = spectra.iter().map(|s| s.n - s.nonreal_count(tol)).sum();
    real as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `(lo, hi)` per bin; arc-length positions for arc histograms, real parts otherwise.
    pub bins: Vec<(f64, f64)>,
    /// Empirical mass per bin (eigenvalue count over total count).
    pub empirical: Vec<f64>,
    /// Predicted mass per bin.
    pub predicted: Vec<f64>,
}

impl Histogram {
    pub fn max_abs_error(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.predicted)
            .map(|(e, p)| (e - p).abs())
            .fold(0.0, f64::max)
    }
}

/// Nearest point on arc `k` as an arc-length position.
fn arc_position(model: &CurveModel, k: usize, z: Complex64) -> (f64, f64) {
    let w = Complex64::new(z.re, z.im.abs());
    let pts = &model.arcs[k].points;
    let mut best = (f64::INFINITY, 0.0);
    let mut s0 = 0.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0].z(), seg[1].z());
        let d = b - a;
        let len = d.norm();
        let t = if len > 0.0 {
            (((w - a) * d.conj()).re / (len * len)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dist = (w - (a + d * t)).norm();
        if dist < best.0 {
            best = (dist, s0 + t * len);
        }
        s0 += len;
    }
    best
}

/// Per-arc histogram of non-real eigenvalues over arc length (both conjugate
/// halves folded together) against `2 ∫ ρ dl` over each bin.
pub fn arc_histogram(spectra: &[SpectrumResult], model: &CurveModel, bins_per_arc: usize, im_tol: f64) -> Histogram {
    let total: usize = spectra.iter().map(|s| s.n).sum();
    let mut ranges = Vec::new();
    let mut empirical = Vec::new();
    let mut predicted = Vec::new();
    let mut offset = 0.0;
    let bins = bins_per_arc.max(1);
    let mut bin_base = Vec::new();
    for arc in &model.arcs {
        let len = arc.length();
        bin_base.push(empirical.len());
        for b in 0..bins {
            ranges.push((offset + len * b as f64 / bins as f64, offset + len * (b + 1) as f64 / bins as f64));
            empirical.push(0.0);
            // trapezoid mass of the polyline portion inside the bin
            let (lo, hi) = (len * b as f64 / bins as f64, len * (b + 1) as f64 / bins as f64);
            let mut s = 0.0f64;
            let mut mass = 0.0;
            for seg in arc.points.windows(2) {
                let l = (seg[1].z() - seg[0].z()).norm();
                let (a, c) = (s.max(lo), (s + l).min(hi));
                if c > a && l > 0.0 {
                    let r = |p: f64| seg[0].rho + (seg[1].rho - seg[0].rho) * (p - s) / l;
                    mass += 0.5 * (r(a) + r(c)) * (c - a);
                }
                s += l;
            }
            predicted.push(2.0 * mass);
        }
        offset += len;
    }
    for z in spectra.iter().flat_map(|s| s.eigenvalues.iter()) {
        if z.im.abs() <= im_tol || model.arcs.is_empty() {
            continue;
        }
        let (k, pos) = (0..model.arcs.len())
            .map(|k| (k, arc_position(model, k, *z)))
            .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
            .map(|(k, (_, p))| (k, p))
            .unwrap();
        let len = model.arcs[k].length();
        let b = if len > 0.0 {
            ((pos / len * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        empirical[bin_base[k] + b] += 1.0 / total as f64;
    }
    Histogram {
        bins: ranges,
        empirical,
        predicted,
    }
}

/// Histogram of real eigenvalues (`|Im z| ≤ im_tol`) on `Σ` against `dN`.
pub fn real_histogram(spectra: &[SpectrumResult], model: &CurveModel, bins_per_interval: usize, im_tol: f64) -> Histogram {
    let total: usize = spectra.iter().map(|s| s.n).sum();
    let bins = bins_per_interval.max(1);
    let mut empirical = Vec::new();
    let mut predicted = Vec::new();
    let mut ranges = Vec::new();
    for &(a, b) in &model.sigma {
        for k in 0..bins {
            let lo = a + (b - a) * k as f64 / bins as f64;
            let hi = a + (b - a) * (k + 1) as f64 / bins as f64;
            empirical.push(0.0);
            predicted.push(model.ids.mass(lo, hi));
            ranges.push((lo, hi));
        }
    }
    for z in spectra.iter().flat_map(|s| s.eigenvalues.iter()) {
        if z.im.abs() > im_tol {
            continue;
        }
        if let Some(i) = ranges.iter().position(|&(lo, hi)| z.re >= lo && z.re < hi) {
            empirical[i] += 1.0 / total as f64;
        }
    }
    Histogram {
        bins: ranges,
        empirical,
        predicted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n: usize,
    pub realizations: usize,
    pub nonreal_fraction: f64,
    pub hausdorff_to_limit: f64,
    pub hausdorff_to_curve: f64,
    pub arc_histogram: Histogram,
    pub real_histogram: Histogram,
}

pub fn compare(spectra: &[SpectrumResult], model: &CurveModel, im_tol: f64, bins: usize) -> CompareReport {
    CompareReport {
        n: spectra.first().map(|s| s.n).unwrap_or(0),
        realizations: spectra.len(),
        nonreal_fraction: 1.0 - real_fraction(spectra, im_tol),
        hausdorff_to_limit: hausdorff_to_limit(spectra, model, im_tol),
        hausdorff_to_curve: hausdorff_to_curve(spectra, model, im_tol),
        arc_histogram: arc_histogram(spectra, model, bins, im_tol),
        real_histogram: real_histogram(spectra, model, bins, im_tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{trace_curve, Coupling, XGrid};
    use crate::eig::{spectrum, SpectrumMethod};
    use crate::ensemble::{presets, sample};
    use crate::operator::build;
    use crate::stats::{estimate_ids, IdsGrid};

    #[test]
    fn free_gauge_circle_is_close() {
        // constant hopping e^{±g}: eigenvalues lie on the ellipse 2cosh(g)cos t + 2i sinh(g) sin t
        let g = 0.5;
        let ids = estimate_ids(&presets::free(g), 2000, 1, &IdsGrid::default()).unwrap();
        let model = trace_curve(&ids, &Coupling::new(-g, g), &XGrid::Auto(400));
        let s = spectrum(&build(&sample(&presets::free(g), 64).unwrap()).unwrap()).unwrap();
        assert_eq!(s.method, SpectrumMethod::DenseQr);
        let d = hausdorff_to_curve(std::slice::from_ref(&s), &model, 1e-8);
        assert!(d < 0.02, "distance {d}");
        let r = compare(std::slice::from_ref(&s), &model, 1e-8, 8);
        assert!(r.nonreal_fraction > 0.9);
        let total: f64 = r.arc_histogram.predicted.iter().sum();
        assert!((total - 1.0).abs() < 0.02, "arc mass {total}");
    }
}

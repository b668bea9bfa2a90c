//! Pipeline stages. Each writes its artifacts under the output directory and
//! returns their relative paths.

use std::path::{Path, PathBuf};

use anyhow::Context;
use hnlab::compare::{compare as compare_spectra, CompareReport};
use hnlab::curves::{trace_curve_with, TraceOptions};
use hnlab::eig::spectrum_from_csv;
use hnlab::stats::{lyapunov_thouless_estimate, lyapunov_transfer, mean_log_c};
use hnlab::verify::{run_battery, thouless_points};
use hnlab::{build, sample_realization, spectrum, Coupling, CurveModel, IdsEstimate, IdsGrid, SpectrumResult, XGrid};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{read_json, write_json, HashMismatch, Stamp};
use crate::config::ExperimentConfig;

pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub stamp: Stamp,
}

#[derive(Debug, thiserror::Error)]
#[error("{failed} of {total} verification checks failed")]
pub struct VerificationFailed {
    pub failed: usize,
    pub total: usize,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Self {
        let stamp = Stamp {
            config_hash: cfg.hash(),
            seed: cfg.seed(),
        };
        Run { cfg, out, stamp }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn write_text(&self, rel: &str, text: &str, written: &mut Vec<String>) -> anyhow::Result<()> {
        hnlab::io::write_text(&self.path(rel), text)?;
        written.push(rel.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, rel: &str, kind: &str, payload: T, written: &mut Vec<String>) -> anyhow::Result<()> {
        write_json(&self.path(rel), &self.stamp.wrap(kind, payload))?;
        written.push(rel.to_string());
        Ok(())
    }

    fn realizations(&self) -> Vec<(usize, u64)> {
        self.cfg
            .sizes
            .iter()
            .flat_map(|&n| (0..self.cfg.reps as u64).map(move |r| (n, r)))
            .collect()
    }
}

fn sample_rel(n: usize, r: u64) -> String {
    format!("samples/n{n}_r{r}.csv")
}

fn spectrum_rel(n: usize, r: u64) -> String {
    format!("spectra/n{n}_r{r}.csv")
}

pub fn sample(run: &Run) -> anyhow::Result<Vec<String>> {
    let spec = &run.cfg.ensemble;
    let mut written = Vec::new();
    for (n, r) in run.realizations() {
        let seq = sample_realization(spec, n, r).with_context(|| format!("sampling n={n} realization={r}"))?;
        let mut meta = run.stamp.meta();
        meta.push(("n", n.to_string()));
        meta.push(("realization", r.to_string()));
        meta.push(("entries", if seq.is_raw() { "raw" } else { "log" }.to_string()));
        let rows = (0..=n).map(|k| vec![k as f64, seq.xi[k], seq.eta[k], seq.q[k]]);
        let text = hnlab::io::csv_with_header(&meta, &["k", "xi", "eta", "q"], rows);
        run.write_text(&sample_rel(n, r), &text, &mut written)?;
        if run.cfg.sample.matrix_market {
            let bundle = build(&seq)?;
            let stem = format!("samples/n{n}_r{r}");
            run.write_text(&format!("{stem}_j.mtx"), &stamp_mtx(&run.stamp, &bundle.j_matrix_market()), &mut written)?;
            if !seq.is_raw() {
                run.write_text(&format!("{stem}_h.mtx"), &stamp_mtx(&run.stamp, &bundle.h_matrix_market()?), &mut written)?;
            }
        }
    }
    println!("[sample] wrote {} files", written.len());
    Ok(written)
}

/// Matrix-market comments go after the banner line.
fn stamp_mtx(stamp: &Stamp, text: &str) -> String {
    let (banner, rest) = text.split_once('\n').unwrap_or((text, ""));
    let comments: String = stamp.meta().iter().map(|(k, v)| format!("% {k}={v}\n")).collect();
    format!("{banner}\n{comments}{rest}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub realization: u64,
    pub nonreal_count: usize,
    pub residual: f64,
    pub trace_error: f64,
    pub conjugation_error: f64,
    /// Listed only for small matrices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub nonreal_fraction: f64,
    pub max_residual: f64,
    pub runs: Vec<RealizationSummary>,
}

const LIST_EIGENVALUES_UP_TO: usize = 16;

fn compute_spectra(run: &Run, jobs: &[(usize, u64)]) -> anyhow::Result<Vec<SpectrumResult>> {
    let spec = &run.cfg.ensemble;
    jobs.par_iter()
        .map(|&(n, r)| {
            let bundle = build(&sample_realization(spec, n, r)?)?;
            spectrum(&bundle).with_context(|| format!("spectrum failed for n={n} realization={r} (seed {})", spec.seed))
        })
        .collect()
}

fn write_spectrum(run: &Run, s: &SpectrumResult, written: &mut Vec<String>) -> anyhow::Result<()> {
    let meta = run.stamp.meta();
    let extra: Vec<(&str, String)> = meta.into_iter().filter(|(k, _)| *k != "seed").collect();
    run.write_text(&spectrum_rel(s.n, s.realization), &s.to_csv(&extra), written)
}

pub fn spectra(run: &Run) -> anyhow::Result<Vec<String>> {
    let jobs = run.realizations();
    let results = compute_spectra(run, &jobs)?;
    let mut written = Vec::new();
    for s in &results {
        write_spectrum(run, s, &mut written)?;
    }
    let tol = run.cfg.spectrum.im_tol;
    let summary: Vec<SizeSummary> = run
        .cfg
        .sizes
        .iter()
        .map(|&n| {
            let group: Vec<&SpectrumResult> = results.iter().filter(|s| s.n == n).collect();
            let runs: Vec<RealizationSummary> = group
                .iter()
                .map(|s| RealizationSummary {
                    realization: s.realization,
                    nonreal_count: s.nonreal_count(tol),
                    residual: s.residual,
                    trace_error: s.trace_error,
                    conjugation_error: s.conjugation_error(),
                    eigenvalues: (n <= LIST_EIGENVALUES_UP_TO).then(|| s.eigenvalues.iter().map(|z| [z.re, z.im]).collect()),
                })
                .collect();
            let nonreal: usize = runs.iter().map(|r| r.nonreal_count).sum();
            SizeSummary {
                n,
                nonreal_fraction: nonreal as f64 / (n * runs.len()) as f64,
                max_residual: runs.iter().map(|r| r.residual).fold(0.0, f64::max),
                runs,
            }
        })
        .collect();
    for s in &summary {
        println!(
            "[spectrum] n={} reps={} nonreal fraction {:.4}, max residual {:.2e}",
            s.n,
            s.runs.len(),
            s.nonreal_fraction,
            s.max_residual
        );
    }
    run.write_json("spectrum_summary.json", "spectrum-summary", summary, &mut written)?;
    Ok(written)
}

fn ids_cache_path(run: &Run) -> PathBuf {
    run.cfg.ids.cache.clone().unwrap_or_else(|| run.path("ids.json"))
}

fn cache_matches(run: &Run, ids: &IdsEstimate) -> bool {
    let s = &run.cfg.ids;
    ids.spec_hash == run.cfg.ensemble.hash()
        && ids.n_used == s.n
        && ids.realizations_used == s.reps
        && ids.grid.len() == s.grid_points
}

/// IDS from the cache when it matches the ensemble and settings, otherwise estimated and cached.
pub fn ids(run: &Run) -> anyhow::Result<(IdsEstimate, Vec<String>)> {
    let cache = ids_cache_path(run);
    let cached = read_json::<IdsEstimate>(&cache).ok().map(|a| a.payload).filter(|ids| cache_matches(run, ids));
    let estimate = match cached {
        Some(ids) => {
            println!("[ids] reusing {}", cache.display());
            ids
        }
        None => {
            let s = &run.cfg.ids;
            println!("[ids] estimating with n={} reps={}", s.n, s.reps);
            hnlab::estimate_ids(&run.cfg.ensemble, s.n, s.reps, &IdsGrid::Auto { points: s.grid_points })?
        }
    };
    let mut written = Vec::new();
    run.write_json("ids.json", "ids", &estimate, &mut written)?;
    if cache != run.path("ids.json") {
        write_json(&cache, &run.stamp.wrap("ids", &estimate))?;
    }
    let csv = format!("{}{}", run.stamp.header(), estimate.to_csv());
    run.write_text("ids.csv", &csv, &mut written)?;
    println!(
        "[ids] support [{:.4}, {:.4}], {} grid points",
        estimate.support.0,
        estimate.support.1,
        estimate.grid.len()
    );
    Ok((estimate, written))
}

pub fn curve(run: &Run) -> anyhow::Result<(CurveModel, Vec<String>)> {
    let spec = &run.cfg.ensemble;
    let coupling = Coupling::from_spec(spec)?;
    let (ids, mut written) = ids(run)?;
    let opts = TraceOptions {
        x_grid: XGrid::Auto(run.cfg.curve.x_points),
        curve_tol: run.cfg.curve.curve_tol,
        scan_points: run.cfg.curve.scan_points,
    };
    let model = trace_curve_with(&ids, &coupling, &opts);
    println!(
        "[curve] g={:.6} threshold={:.6} arcs={} sigma intervals={} mass={:.6}",
        model.g,
        model.threshold,
        model.arcs.len(),
        model.sigma.len(),
        model.total_mass()
    );
    for w in &model.warnings {
        println!("[curve] warning: {w}");
    }
    run.write_json("curve.json", "curve-model", &model, &mut written)?;
    run.write_text("curve.csv", &model.plot_csv(&run.stamp.meta()), &mut written)?;
    write_plot_script(run, &mut written)?;
    Ok((model, written))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovRow {
    pub re: f64,
    pub im: f64,
    pub transfer: f64,
    pub stderr: f64,
    pub thouless: f64,
    pub difference: f64,
    pub real_axis_warning: bool,
}

pub fn lyapunov(run: &Run) -> anyhow::Result<Vec<String>> {
    let spec = &run.cfg.ensemble;
    let mlc = mean_log_c(spec)?;
    let (ids, mut written) = ids(run)?;
    let points: Vec<Complex64> = if run.cfg.lyapunov.points.is_empty() {
        thouless_points()
    } else {
        run.cfg.lyapunov.points.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    };
    let s = &run.cfg.lyapunov;
    let mut rows = Vec::with_capacity(points.len());
    for &z in &points {
        let t = lyapunov_transfer(spec, s.n, s.reps, z)?;
        let th = lyapunov_thouless_estimate(&ids, mlc, z);
        println!(
            "[lyapunov] z={:+.3}{:+.3}i transfer {:.6} ± {:.1e}, thouless {:.6}{}",
            z.re,
            z.im,
            t.gamma_hat,
            t.stderr,
            th.gamma_hat,
            if t.real_axis_warning { " (real axis)" } else { "" }
        );
        rows.push(LyapunovRow {
            re: z.re,
            im: z.im,
            transfer: t.gamma_hat,
            stderr: t.stderr,
            thouless: th.gamma_hat,
            difference: t.gamma_hat - th.gamma_hat,
            real_axis_warning: t.real_axis_warning,
        });
    }
    let mut meta = run.stamp.meta();
    meta.push(("n", s.n.to_string()));
    meta.push(("reps", s.reps.to_string()));
    let csv_rows = rows.iter().map(|r| vec![r.re, r.im, r.transfer, r.stderr, r.thouless, r.difference]);
    let text = hnlab::io::csv_with_header(&meta, &["re", "im", "transfer", "stderr", "thouless", "difference"], csv_rows);
    run.write_text("lyapunov.csv", &text, &mut written)?;
    run.write_json("lyapunov.json", "lyapunov", rows, &mut written)?;
    Ok(written)
}

pub fn verify(run: &Run) -> anyhow::Result<Vec<String>> {
    println!("[verify] running battery");
    let report = run_battery(&run.cfg.ensemble, &run.cfg.verify)?;
    let text = report.to_text();
    print!("{text}");
    let mut written = Vec::new();
    run.write_text("verify.txt", &format!("{}{}", run.stamp.header(), text), &mut written)?;
    run.write_json("verify.json", "verify-report", &report, &mut written)?;
    if !report.passed() {
        // artifacts stay on disk for inspection
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        return Err(VerificationFailed {
            failed,
            total: report.checks.len(),
        }
        .into());
    }
    println!("[verify] all {} checks passed", report.checks.len());
    Ok(written)
}

fn check_hash(path: &Path, found: &str, expected: &str) -> anyhow::Result<()> {
    if found != expected {
        return Err(HashMismatch {
            path: path.display().to_string(),
            found: found.to_string(),
            expected: expected.to_string(),
        }
        .into());
    }
    Ok(())
}

/// Spectra from disk where present (hashes must match), computed otherwise.
fn load_or_compute_spectra(run: &Run, written: &mut Vec<String>) -> anyhow::Result<Vec<SpectrumResult>> {
    let mut loaded = Vec::new();
    let mut missing = Vec::new();
    for (n, r) in run.realizations() {
        let path = run.path(&spectrum_rel(n, r));
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let meta = hnlab::io::parse_csv_header(&text);
                let found = meta.iter().find(|(k, _)| k == "config_hash").map(|(_, v)| v.as_str()).unwrap_or("");
                check_hash(&path, found, &run.stamp.config_hash)?;
                loaded.push(spectrum_from_csv(&text).with_context(|| format!("reading {}", path.display()))?);
            }
            Err(_) => missing.push((n, r)),
        }
    }
    if !missing.is_empty() {
        println!("[compare] computing {} missing spectra", missing.len());
        for s in compute_spectra(run, &missing)? {
            write_spectrum(run, &s, written)?;
            loaded.push(s);
        }
    }
    loaded.sort_by_key(|s| (s.n, s.realization));
    Ok(loaded)
}

fn load_or_trace_curve(run: &Run, written: &mut Vec<String>) -> anyhow::Result<CurveModel> {
    let path = run.path("curve.json");
    if path.exists() {
        let a = read_json::<CurveModel>(&path)?;
        check_hash(&path, &a.config_hash, &run.stamp.config_hash)?;
        println!("[compare] reusing {}", path.display());
        return Ok(a.payload);
    }
    let (model, w) = curve(run)?;
    written.extend(w);
    Ok(model)
}

pub fn compare(run: &Run) -> anyhow::Result<Vec<String>> {
    let mut written = Vec::new();
    let model = load_or_trace_curve(run, &mut written)?;
    let spectra = load_or_compute_spectra(run, &mut written)?;
    let tol = run.cfg.spectrum.im_tol;
    let reports: Vec<CompareReport> = run
        .cfg
        .sizes
        .iter()
        .map(|&n| {
            let group: Vec<SpectrumResult> = spectra.iter().filter(|s| s.n == n).cloned().collect();
            compare_spectra(&group, &model, tol, run.cfg.compare.bins)
        })
        .collect();
    let mut rows = Vec::new();
    for r in &reports {
        println!(
            "[compare] n={} nonreal {:.4}, hausdorff to limit {:.4}, to curve {:.4}, histogram error arc {:.4} real {:.4}",
            r.n,
            r.nonreal_fraction,
            r.hausdorff_to_limit,
            r.hausdorff_to_curve,
            r.arc_histogram.max_abs_error(),
            r.real_histogram.max_abs_error()
        );
        for (which, h) in [(0.0, &r.arc_histogram), (1.0, &r.real_histogram)] {
            for b in 0..h.empirical.len() {
                rows.push(vec![r.n as f64, which, b as f64, h.bins[b].0, h.bins[b].1, h.empirical[b], h.predicted[b]]);
            }
        }
    }
    let mut meta = run.stamp.meta();
    meta.push(("histogram", "0=arc-length,1=real-axis".to_string()));
    let text = hnlab::io::csv_with_header(&meta, &["n", "histogram", "bin", "lo", "hi", "empirical", "predicted"], rows);
    run.write_text("compare_histograms.csv", &text, &mut written)?;
    run.write_json("compare.json", "compare", &reports, &mut written)?;
    write_plot_script(run, &mut written)?;
    Ok(written)
}

const PLOT_TEMPLATE: &str = include_str!("plot_template.py");

fn write_plot_script(run: &Run, written: &mut Vec<String>) -> anyhow::Result<()> {
    let text = format!("{}{}", run.stamp.header(), PLOT_TEMPLATE);
    run.write_text("plot.py", &text, written)
}

//! Eigenvalue engines for the reference and the periodic matrices.

pub mod dense;
pub mod inverse;
pub mod bounds;
pub mod resolvent;
pub mod sturm;

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logscale::LogComplex;
use crate::operator::{Mat2, OperatorBundle, TransferState};

pub use bounds::{boundary_bounds, sector_distance, transfer_bounds, EigenvectorBounds};
pub use resolvent::{rank2_det, resolvent_corners, ResolventCorners};

/// Eigenvalues of `H_n` strictly below `lambda`.
pub fn symmetric_eigencount(bundle: &OperatorBundle, lambda: f64) -> Result<usize> {
    Ok(sturm::eigencount(&bundle.reference()?, lambda))
}

/// All eigenvalues of `H_n`, ascending.
pub fn symmetric_spectrum(bundle: &OperatorBundle) -> Result<Vec<f64>> {
    Ok(sturm::spectrum(&bundle.reference()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    DenseQr,
    BoundaryDet,
}

impl SpectrumMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SpectrumMethod::DenseQr => "dense-qr",
            SpectrumMethod::BoundaryDet => "boundary-det",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    pub n: usize,
    pub realization: u64,
    pub seed: u64,
    pub method: SpectrumMethod,
    /// Largest `‖(J - z_i I) v_i‖ / ‖v_i‖` over the eigenvalues, `v_i` from inverse iteration.
    pub residual: f64,
    /// `|Σ z_i - tr J_n| / max(1, Σ|q_k|)`.
    pub trace_error: f64,
}

impl SpectrumResult {
    /// Eigenvalues with `|Im z| > tol`.
    pub fn nonreal_count(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| z.im.abs() > tol).count()
    }

    pub fn nonreal_fraction(&self, tol: f64) -> f64 {
        self.nonreal_count(tol) as f64 / self.n as f64
    }

    /// Largest distance from an eigenvalue's conjugate to the spectrum.
    pub fn conjugation_error(&self) -> f64 {
        let conj: Vec<Complex64> = self.eigenvalues.iter().map(|z| z.conj()).collect();
        multiset_distance(&self.eigenvalues, &conj)
    }

    /// `(1/n) Σ f(z_i)`.
    pub fn empirical_integral(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.eigenvalues.iter().map(|&z| f(z)).sum::<f64>() / self.n as f64
    }

    /// CSV with `re,im` rows and a `#` header carrying run metadata.
    pub fn to_csv(&self, extra: &[(&str, String)]) -> String {
        let mut meta: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("seed", self.seed.to_string()),
            ("realization", self.realization.to_string()),
            ("method", self.method.tag().to_string()),
            ("residual", format!("{:e}", self.residual)),
        ];
        meta.extend(extra.iter().cloned());
        let rows: Vec<Vec<f64>> = self.eigenvalues.iter().map(|z| vec![z.re, z.im]).collect();
        crate::io::csv_with_header(&meta, &["re", "im"], rows)
    }
}

/// Ordering by real part, then imaginary part.
pub fn cmp_re_im(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Multiset distance: sort both sides by `(Re, Im)`, then match each left entry
/// greedily to the nearest unused right entry. Returns the largest matched gap,
/// or infinity if the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut left = a.to_vec();
    let mut right = b.to_vec();
    left.sort_by(cmp_re_im);
    right.sort_by(cmp_re_im);
    let mut used = vec![false; right.len()];
    let mut worst = 0.0f64;
    for z in &left {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, w) in right.iter().enumerate() {
            if !used[j] {
                let d = (z - w).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// Normalized residual of the periodic characteristic equation at `z`.
///
/// With `u_k φ_{k+1} = (z - d_k) φ_k - s_{k-1} φ_{k-1}` and periodic closure
/// through the corner entries, `z` is an eigenvalue iff `det(T(z) - I) = 0`
/// for the monodromy matrix `T`. The value returned is
/// `|det T - tr T + 1| / max(|det T|, ‖T‖, 1)`, which stays small for
/// localized states where `tr T` cancels against a large `‖T‖`. Works for raw entries.
pub fn characteristic_residual(bundle: &OperatorBundle, z: Complex64) -> f64 {
    let n = bundle.n;
    if n == 2 {
        let j = bundle.dense_j();
        let det = (j[0] - z) * (j[3] - z) - j[2] * j[1];
        let scale = (j[0] - z).norm() * (j[3] - z).norm() + (j[2] * j[1]).abs();
        return det.norm() / scale.max(f64::MIN_POSITIVE);
    }
    // super-diagonal u_k (k = 1..n, u_n = J[n,1]) and sub-diagonal s_k (k = 0..n-1, s_0 = J[1,n])
    let u = |k: usize| if k == n { bundle.corner_lower } else { bundle.sup[k - 1] };
    let s = |k: usize| if k == 0 { bundle.corner_upper } else { bundle.sub[k - 1] };
    let mut state = TransferState::identity();
    let mut log_det = 0.0;
    let mut det_phase = 1.0;
    for k in 1..=n {
        let uk = u(k);
        let sk = s(k - 1);
        if uk == 0.0 {
            return f64::NAN;
        }
        let m: Mat2 = [
            [(z - bundle.diag[k - 1]) / uk, Complex64::new(-sk / uk, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ];
        state.apply_matrix(&m);
        let d = sk / uk;
        log_det += d.abs().ln();
        det_phase *= d.signum();
    }
    let det_t = LogComplex::from_log_real(log_det, det_phase < 0.0);
    let tr_stored = state.stored[0][0] + state.stored[1][1];
    let tr_t = LogComplex::from_complex(tr_stored).scale_log(state.log_scale);
    let value = det_t.sub(tr_t).add(LogComplex::ONE);
    let scale = det_t.log_mod.max(tr_t.log_mod).max(state.log_norm()).max(0.0);
    (value.log_mod - scale).exp()
}

/// Full spectrum of `J_n` by balancing, Hessenberg reduction and double-shift QR.
pub fn spectrum(bundle: &OperatorBundle) -> Result<SpectrumResult> {
    let n = bundle.n;
    let mut eigenvalues = dense::eigenvalues(bundle.dense_j(), n)?;
    eigenvalues.sort_by(cmp_re_im);
    let trace = bundle.trace();
    let sum: Complex64 = eigenvalues.iter().sum();
    let trace_scale = bundle.diag.iter().map(|q| q.abs()).sum::<f64>().max(1.0);
    let trace_error = (sum - trace).norm() / trace_scale;
    let residual = eigenvalues
        .iter()
        .map(|&z| inverse::eigenpair_residual(bundle, z))
        .fold(0.0f64, |m, r| if r.is_nan() { m } else { m.max(r) });
    Ok(SpectrumResult {
        eigenvalues,
        n,
        realization: bundle.realization,
        seed: bundle.seed,
        method: SpectrumMethod::DenseQr,
        residual,
        trace_error,
    })
}

/// Parse a spectrum CSV written by [`SpectrumResult::to_csv`].
pub fn spectrum_from_csv(text: &str) -> Result<SpectrumResult> {
    let meta = crate::io::parse_csv_header(text);
    let get = |k: &str| {
        meta.iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Parse {
                what: "spectrum csv".into(),
                reason: format!("missing header key `{k}`"),
            })
    };
    let parse_err = |k: &str| Error::Parse {
        what: "spectrum csv".into(),
        reason: format!("bad value for `{k}`"),
    };
    let n: usize = get("n")?.parse().map_err(|_| parse_err("n"))?;
    let seed: u64 = get("seed")?.parse().map_err(|_| parse_err("seed"))?;
    let realization: u64 = get("realization")?.parse().map_err(|_| parse_err("realization"))?;
    let residual: f64 = get("residual")?.parse().map_err(|_| parse_err("residual"))?;
    let method = match get("method")?.as_str() {
        "dense-qr" => SpectrumMethod::DenseQr,
        "boundary-det" => SpectrumMethod::BoundaryDet,
        _ => return Err(parse_err("method")),
    };
    let rows = crate::io::parse_csv_rows(text)?;
    let eigenvalues: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[0], r[1])).collect();
    if eigenvalues.len() != n {
        return Err(Error::Parse {
            what: "spectrum csv".into(),
            reason: format!("expected {n} rows, found {}", eigenvalues.len()),
        });
    }
    Ok(SpectrumResult {
        eigenvalues,
        n,
        realization,
        seed,
        method,
        residual,
        trace_error: f64::NAN,
    })
}

//! Matrix objects built from one coefficient realization.
//!
//! # Index table
//!
//! Arrays are 0-based and hold indices `0..=n` of the realization. Matrix
//! positions below are 1-based `(row, col)` as in the usual textbook layout.
//!
//! | object             | entry                    | value                    |
//! |--------------------|--------------------------|--------------------------|
//! | `J_n` diagonal     | `(k, k)`, `k = 1..n`     | `q[k]`                   |
//! | `J_n` sub-diagonal | `(k+1, k)`, `k = 1..n-1` | `-exp(xi[k])`            |
//! | `J_n` super-diag.  | `(k, k+1)`, `k = 1..n-1` | `-exp(eta[k])`           |
//! | `J_n` corner       | `(1, n)`                 | `-exp(xi[0])`            |
//! | `J_n` corner       | `(n, 1)`                 | `-exp(eta[n])`           |
//! | weights            | `w[k]`, `k = 0..=n+1`    | `exp(½ Σ_{j<k}(xi[j]-eta[j]))` |
//! | hopping            | `c[k]`, `k = 0..=n`      | `exp(½(xi[k]+eta[k]))`   |
//! | `H_n` off-diagonal | `(k, k+1)`, `k = 1..n-1` | `-c[k]`                  |
//! | `V_n` corners      | `(1, n)`, `(n, 1)`       | `a_n = -c[0] w[n]`, `b_n = -c[n] w[1]/w[n+1]` |
//!
//! `W⁻¹ J_n W = H_n + V_n` with `W = diag(w[1..=n])`. When `n = 2` the corner
//! and the off-diagonal share a position and their values add.
//!
//! Quantities with exponential scale (`w`, `a_n`, `b_n`, `β_n`, transfer
//! products) are kept as logarithms.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::CoefficientSequence;
use crate::error::{Error, Result};
use crate::logscale::LogComplex;

/// Largest |log| that is materialized as a plain `f64`.
pub const MAX_MATERIALIZED_LOG: f64 = 300.0;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// Length `n - 1`; entry `i` couples rows `i` and `i + 1` (0-based).
    pub offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty tridiagonal matrix");
        assert_eq!(offdiag.len() + 1, diag.len(), "offdiag must have length n - 1");
        SymTridiagonal { diag, offdiag }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `[lo, hi]` containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i + i * n] = self.diag[i];
        }
        for i in 0..n.saturating_sub(1) {
            a[i + 1 + i * n] = self.offdiag[i];
            a[i + (i + 1) * n] = self.offdiag[i];
        }
        a
    }
}

/// Similarity data that exists only in log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symmetrization {
    /// `c[0..=n]`, strictly positive.
    pub c: Vec<f64>,
    /// `ln w[0..=n+1]`, with `ln w[0] = 0`.
    pub log_w: Vec<f64>,
    /// Top-right corner of `V_n` (negative real).
    pub a_n: LogComplex,
    /// Bottom-left corner of `V_n` (negative real).
    pub b_n: LogComplex,
    /// `ln β_n = ln w[n+1] - ln w[1] - ln w[n]`.
    pub log_beta: f64,
    /// `½ · mean(eta - xi)` over indices `0..n`; equals `-(1/n) ln w[n]`.
    pub g_hat: f64,
}

impl Symmetrization {
    pub fn beta(&self) -> f64 {
        self.log_beta.exp()
    }

    /// `Σ_{j=1}^{n-1} ln c[j]`.
    pub fn log_inner_c_product(&self) -> f64 {
        let n = self.c.len() - 1;
        self.c[1..n].iter().map(|c| c.ln()).sum()
    }
}

/// All matrices attached to one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBundle {
    pub n: usize,
    /// `q[1..=n]`.
    pub diag: Vec<f64>,
    /// `J[k+1, k]` for `k = 1..n-1`.
    pub sub: Vec<f64>,
    /// `J[k, k+1]` for `k = 1..n-1`.
    pub sup: Vec<f64>,
    /// `J[1, n]`.
    pub corner_upper: f64,
    /// `J[n, 1]`.
    pub corner_lower: f64,
    /// `None` for raw-entry realizations.
    pub sym: Option<Symmetrization>,
    pub realization: u64,
    pub seed: u64,
}

fn checked_exp(quantity: &'static str, log_value: f64) -> Result<f64> {
    if log_value.abs() > MAX_MATERIALIZED_LOG {
        return Err(Error::Overflow { quantity, log_value });
    }
    Ok(log_value.exp())
}

fn check_finite(array: &'static str, values: &[f64]) -> Result<()> {
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { array, index, value });
    }
    Ok(())
}

/// Build `J_n`, `H_n`, `V_n`, weights and corner data from a realization.
pub fn build(seq: &CoefficientSequence) -> Result<OperatorBundle> {
    let n = seq.n;
    if n < 2 {
        return Err(Error::validation("n", "operator bundles need n >= 2"));
    }
    if seq.xi.len() != n + 1 || seq.eta.len() != n + 1 || seq.q.len() != n + 1 {
        return Err(Error::validation("arrays", "xi, eta, q must have length n + 1"));
    }
    check_finite("xi", &seq.xi)?;
    check_finite("eta", &seq.eta)?;
    check_finite("q", &seq.q)?;
    let diag = seq.q[1..=n].to_vec();

    if seq.is_raw() {
        return Ok(OperatorBundle {
            n,
            diag,
            sub: seq.xi[1..n].to_vec(),
            sup: seq.eta[1..n].to_vec(),
            corner_upper: seq.xi[0],
            corner_lower: seq.eta[n],
            sym: None,
            realization: seq.realization,
            seed: seq.spec.seed,
        });
    }

    let sub = seq.xi[1..n]
        .iter()
        .map(|&x| checked_exp("sub-diagonal entry", x).map(|v| -v))
        .collect::<Result<Vec<_>>>()?;
    let sup = seq.eta[1..n]
        .iter()
        .map(|&x| checked_exp("super-diagonal entry", x).map(|v| -v))
        .collect::<Result<Vec<_>>>()?;
    let corner_upper = -checked_exp("corner entry J[1,n]", seq.xi[0])?;
    let corner_lower = -checked_exp("corner entry J[n,1]", seq.eta[n])?;

    let c = (0..=n)
        .map(|k| checked_exp("hopping c_k", 0.5 * (seq.xi[k] + seq.eta[k])))
        .collect::<Result<Vec<_>>>()?;

    let mut log_w = Vec::with_capacity(n + 2);
    log_w.push(0.0);
    let mut acc = 0.0;
    for k in 0..=n {
        acc += 0.5 * (seq.xi[k] - seq.eta[k]);
        log_w.push(acc);
    }

    let a_n = LogComplex::from_log_real(0.5 * (seq.xi[0] + seq.eta[0]) + log_w[n], true);
    let b_n = LogComplex::from_log_real(0.5 * (seq.xi[n] + seq.eta[n]) + log_w[1] - log_w[n + 1], true);
    let log_beta = log_w[n + 1] - log_w[1] - log_w[n];
    let g_hat = -log_w[n] / n as f64;

    Ok(OperatorBundle {
        n,
        diag,
        sub,
        sup,
        corner_upper,
        corner_lower,
        sym: Some(Symmetrization {
            c,
            log_w,
            a_n,
            b_n,
            log_beta,
            g_hat,
        }),
        realization: seq.realization,
        seed: seq.spec.seed,
    })
}

impl OperatorBundle {
    pub fn is_raw(&self) -> bool {
        self.sym.is_none()
    }

    pub fn symmetrization(&self, operation: &'static str) -> Result<&Symmetrization> {
        self.sym.as_ref().ok_or(Error::RawModeUnsupported { operation })
    }

    /// Dense `J_n`, column-major.
    pub fn dense_j(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i + i * n] = self.diag[i];
        }
        for i in 0..n - 1 {
            a[(i + 1) + i * n] += self.sub[i];
            a[i + (i + 1) * n] += self.sup[i];
        }
        a[(n - 1) * n] += self.corner_upper;
        a[n - 1] += self.corner_lower;
        a
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// `H_n` as `(diag, offdiag)`.
    pub fn reference(&self) -> Result<SymTridiagonal> {
        let sym = self.symmetrization("reference")?;
        Ok(SymTridiagonal::new(
            self.diag.clone(),
            sym.c[1..self.n].iter().map(|c| -c).collect(),
        ))
    }

    /// Materialized `w[1..=n]` (the diagonal of `W`).
    pub fn weights(&self) -> Result<Vec<f64>> {
        let sym = self.symmetrization("weights")?;
        sym.log_w[1..=self.n].iter().map(|&l| checked_exp("similarity weight w_k", l)).collect()
    }

    /// Dense `H_n + V_n`, column-major; fails when a corner is not representable.
    pub fn dense_h_plus_v(&self) -> Result<Vec<f64>> {
        let sym = self.symmetrization("dense_h_plus_v")?;
        let n = self.n;
        let mut a = self.reference()?.to_dense();
        let an = -checked_exp("corner a_n", sym.a_n.log_mod)?;
        let bn = -checked_exp("corner b_n", sym.b_n.log_mod)?;
        a[(n - 1) * n] += an;
        a[n - 1] += bn;
        Ok(a)
    }

    /// Matrix-market text: dense `J_n` (array format).
    pub fn j_matrix_market(&self) -> String {
        let n = self.n;
        let mut out = String::new();
        let _ = writeln!(out, "%%MatrixMarket matrix array real general");
        let _ = writeln!(out, "% J_n realization={} seed={}", self.realization, self.seed);
        let _ = writeln!(out, "{n} {n}");
        for v in self.dense_j() {
            let _ = writeln!(out, "{v:?}");
        }
        out
    }

    /// Matrix-market text: `H_n` as symmetric coordinate entries (lower triangle).
    pub fn h_matrix_market(&self) -> Result<String> {
        let h = self.reference()?;
        let n = self.n;
        let mut out = String::new();
        let _ = writeln!(out, "%%MatrixMarket matrix coordinate real symmetric");
        let _ = writeln!(out, "% H_n realization={} seed={}", self.realization, self.seed);
        let _ = writeln!(out, "{n} {n} {}", 2 * n - 1);
        for i in 0..n {
            let _ = writeln!(out, "{} {} {:?}", i + 1, i + 1, h.diag[i]);
            if i + 1 < n {
                let _ = writeln!(out, "{} {} {:?}", i + 2, i + 1, h.offdiag[i]);
            }
        }
        Ok(out)
    }
}

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Column-sum norm `max_k Σ_j |M_jk|`.
pub fn col_sum_norm(m: &Mat2) -> f64 {
    (m[0][0].norm() + m[1][0].norm()).max(m[0][1].norm() + m[1][1].norm())
}

pub fn mat2_det(m: &Mat2) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// One-step matrix `A_k = (1/c_k) [[q_k - z, -c_{k-1}], [c_k, 0]]`.
pub fn one_step_matrix(bundle: &OperatorBundle, k: usize, z: Complex64) -> Mat2 {
    let c = &bundle.sym.as_ref().expect("one_step_matrix needs log coordinates").c;
    let inv = 1.0 / c[k];
    let zero = Complex64::new(0.0, 0.0);
    [
        [(bundle.diag[k - 1] - z) * inv, Complex64::new(-c[k - 1] * inv, 0.0)],
        [Complex64::new(1.0, 0.0), zero],
    ]
}

/// Running product `A_k · … · A_1` as `stored · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferState {
    pub stored: Mat2,
    pub log_scale: f64,
    pub steps: usize,
}

impl Default for TransferState {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransferState {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransferState {
            stored: [[one, zero], [zero, one]],
            log_scale: 0.0,
            steps: 0,
        }
    }

    /// Rescale by a power of two so the stored norm lies in `[2^-½, 2^½]`.
    #[inline]
    fn renormalize(&mut self) {
        let norm = col_sum_norm(&self.stored);
        if norm > 0.0 && norm.is_finite() {
            let e = norm.log2().round() as i32;
            if e != 0 {
                let s = 2f64.powi(-e);
                for row in self.stored.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= s;
                    }
                }
                self.log_scale += e as f64 * std::f64::consts::LN_2;
            }
        }
    }

    /// Left-multiply by `A_k` in place.
    #[inline]
    pub fn apply(&mut self, q_k: f64, c_prev: f64, c_k: f64, z: Complex64) {
        let inv = 1.0 / c_k;
        let a = (q_k - z) * inv;
        let b = -c_prev * inv;
        let [r0, r1] = self.stored;
        self.stored = [
            [a * r0[0] + b * r1[0], a * r0[1] + b * r1[1]],
            r0,
        ];
        self.steps += 1;
        self.renormalize();
    }

    /// Left-multiply by an arbitrary matrix.
    pub fn apply_matrix(&mut self, m: &Mat2) {
        self.stored = mat2_mul(m, &self.stored);
        self.steps += 1;
        self.renormalize();
    }

    /// `ln ‖product‖` in the column-sum norm.
    pub fn log_norm(&self) -> f64 {
        col_sum_norm(&self.stored).ln() + self.log_scale
    }

    /// `ln |det product|`.
    pub fn log_abs_det(&self) -> f64 {
        mat2_det(&self.stored).norm().ln() + 2.0 * self.log_scale
    }

    /// The product itself; overflows for long runs.
    pub fn value(&self) -> Mat2 {
        let s = self.log_scale.exp();
        let mut m = self.stored;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }
}

/// `state` advanced by `A_k` (`1 ≤ k ≤ n`).
pub fn transfer_step(state: TransferState, k: usize, z: Complex64, bundle: &OperatorBundle) -> TransferState {
    assert!(k >= 1 && k <= bundle.n, "transfer index {k} out of 1..={}", bundle.n);
    let c = &bundle.sym.as_ref().expect("transfer_step needs log coordinates").c;
    let mut next = state;
    next.apply(bundle.diag[k - 1], c[k - 1], c[k], z);
    next
}

/// `S_n(z) = A_n · … · A_1`.
pub fn transfer_product(bundle: &OperatorBundle, z: Complex64) -> Result<TransferState> {
    let c = &bundle.symmetrization("transfer_product")?.c;
    let mut state = TransferState::identity();
    for k in 1..=bundle.n {
        state.apply(bundle.diag[k - 1], c[k - 1], c[k], z);
    }
    Ok(state)
}

/// `B_n S_n(z)` as `matrix · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrix {
    pub matrix: Mat2,
    pub log_scale: f64,
}

impl BoundaryMatrix {
    pub fn value(&self) -> Mat2 {
        TransferState {
            stored: self.matrix,
            log_scale: self.log_scale,
            steps: 0,
        }
        .value()
    }

    /// Eigenvalues of the 2×2 matrix, as log-scaled numbers.
    pub fn eigenvalues(&self) -> [LogComplex; 2] {
        let m = &self.matrix;
        let tr = m[0][0] + m[1][1];
        let det = mat2_det(m);
        let disc = (tr * tr - 4.0 * det).sqrt();
        // avoid cancellation: larger root first
        let (p, q) = ((tr + disc) * 0.5, (tr - disc) * 0.5);
        let big = if p.norm() >= q.norm() { p } else { q };
        let small = if big.norm() > 0.0 { det / big } else { Complex64::new(0.0, 0.0) };
        [
            LogComplex::from_complex(big).scale_log(self.log_scale),
            LogComplex::from_complex(small).scale_log(self.log_scale),
        ]
    }

    /// `ln r(B_n S_n(z))`, the spectral radius in log form.
    pub fn log_spectral_radius(&self) -> f64 {
        self.eigenvalues()[0].log_mod
    }
}

/// `B_n S_n(z)` with `B_n = diag(β_n, 1)`.
pub fn boundary_matrix(bundle: &OperatorBundle, z: Complex64) -> Result<BoundaryMatrix> {
    let sym = bundle.symmetrization("boundary_matrix")?;
    let s = transfer_product(bundle, z)?;
    let mut m = s.stored;
    let mut log_scale = s.log_scale;
    // fold β_n into the first row, keeping the row factor moderate
    let lb = sym.log_beta;
    if lb >= 0.0 {
        let f = (-lb).exp();
        m[1][0] *= f;
        m[1][1] *= f;
        log_scale += lb;
    } else {
        let f = lb.exp();
        m[0][0] *= f;
        m[0][1] *= f;
    }
    Ok(BoundaryMatrix { matrix: m, log_scale })
}

/// `B_n S_n(z)` via `Ã_n · A_{n-1} · … · A_1` (β_n folded into the last factor).
pub fn boundary_matrix_via_last_factor(bundle: &OperatorBundle, z: Complex64) -> Result<BoundaryMatrix> {
    let sym = bundle.symmetrization("boundary_matrix")?;
    let n = bundle.n;
    let c = &sym.c;
    let mut state = TransferState::identity();
    for k in 1..n {
        state.apply(bundle.diag[k - 1], c[k - 1], c[k], z);
    }
    let beta = sym.beta();
    let last: Mat2 = [
        [
            (bundle.diag[n - 1] - z) * (beta / c[n]),
            Complex64::new(-c[n - 1] * beta / c[n], 0.0),
        ],
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ];
    state.apply_matrix(&last);
    Ok(BoundaryMatrix {
        matrix: state.stored,
        log_scale: state.log_scale,
    })
}

/// `|det((1/w_n) I - B_n S_n(z))|` after dividing every entry by the largest scale involved.
///
/// Vanishes exactly when `z` is an eigenvalue of `J_n`.
pub fn boundary_condition_residual(bundle: &OperatorBundle, z: Complex64) -> Result<f64> {
    let sym = bundle.symmetrization("boundary_condition_residual")?;
    let bm = boundary_matrix(bundle, z)?;
    let log_t = -sym.log_w[bundle.n];
    let log_m = bm.log_scale + col_sum_norm(&bm.matrix).ln();
    let s = log_t.max(log_m);
    let t = (log_t - s).exp();
    let f = (bm.log_scale - s).exp();
    let m = &bm.matrix;
    let d00 = Complex64::new(t, 0.0) - m[0][0] * f;
    let d11 = Complex64::new(t, 0.0) - m[1][1] * f;
    let det = d00 * d11 - m[0][1] * m[1][0] * f * f;
    Ok(det.norm())
}

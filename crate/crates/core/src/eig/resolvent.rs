//! Corner entries of `(H_n - zI)^{-1}` and the rank-2 determinant ratio.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logscale::LogComplex;
use crate::operator::{OperatorBundle, SymTridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventCorners {
    pub g11: LogComplex,
    pub g1n: LogComplex,
    pub gn1: LogComplex,
    pub gnn: LogComplex,
    /// `det(H_n - zI)`.
    pub det: LogComplex,
    pub z: Complex64,
    pub n: usize,
}

/// Forward pivots `r_k = (d_k - z) - b_{k-1}^2 / r_{k-1}`; returns `(Σ ln r_k, r_n)`.
fn forward(h: &SymTridiagonal, z: Complex64) -> Result<(LogComplex, Complex64)> {
    let n = h.n();
    let mut det = LogComplex::ONE;
    let mut r = Complex64::new(h.diag[0], 0.0) - z;
    for k in 1..n {
        if r.norm() == 0.0 {
            return Err(Error::SingularResolvent { re: z.re, im: z.im });
        }
        det = det * LogComplex::from_complex(r);
        let b = h.offdiag[k - 1];
        r = (h.diag[k] - z) - b * b / r;
    }
    if r.norm() == 0.0 || !r.is_finite() {
        return Err(Error::SingularResolvent { re: z.re, im: z.im });
    }
    det = det * LogComplex::from_complex(r);
    Ok((det, r))
}

/// Backward pivot `s_1` with `s_n = d_n - z`, `s_k = (d_k - z) - b_k^2 / s_{k+1}`.
fn backward_first(h: &SymTridiagonal, z: Complex64) -> Result<Complex64> {
    let n = h.n();
    let mut s = Complex64::new(h.diag[n - 1], 0.0) - z;
    for k in (0..n - 1).rev() {
        if s.norm() == 0.0 {
            return Err(Error::SingularResolvent { re: z.re, im: z.im });
        }
        let b = h.offdiag[k];
        s = (h.diag[k] - z) - b * b / s;
    }
    if s.norm() == 0.0 || !s.is_finite() {
        return Err(Error::SingularResolvent { re: z.re, im: z.im });
    }
    Ok(s)
}

/// Corner entries of the resolvent of a symmetric tridiagonal matrix.
pub fn tridiagonal_corners(h: &SymTridiagonal, z: Complex64) -> Result<ResolventCorners> {
    let n = h.n();
    let (det, rn) = forward(h, z)?;
    let s1 = backward_first(h, z)?;
    let g11 = LogComplex::from_complex(s1).recip();
    let gnn = LogComplex::from_complex(rn).recip();
    // G_1n = (-1)^{n+1} Π b_j / det; with b_j = -c_j this is Π c_j / det
    let mut off = LogComplex::ONE;
    for &b in &h.offdiag {
        off = off * LogComplex::from_real(b);
    }
    if n % 2 == 0 {
        off = -off;
    }
    let g1n = off / det;
    Ok(ResolventCorners {
        g11,
        g1n,
        gn1: g1n,
        gnn,
        det,
        z,
        n,
    })
}

/// Corner entries of `(H_n - zI)^{-1}` for the reference matrix of `bundle`.
pub fn resolvent_corners(bundle: &OperatorBundle, z: Complex64) -> Result<ResolventCorners> {
    let h = bundle.reference()?;
    tridiagonal_corners(&h, z)
}

/// `(1 + a G_n1)(1 + b G_1n) - a b G_11 G_nn`.
pub fn rank2_det_from(corners: &ResolventCorners, a: LogComplex, b: LogComplex) -> LogComplex {
    let agn1 = a * corners.gn1;
    let bg1n = b * corners.g1n;
    let first = LogComplex::ONE.add(agn1) * LogComplex::ONE.add(bg1n);
    let third = a * b * corners.g11 * corners.gnn;
    first.sub(third)
}

/// Rank-2 determinant ratio `d(z; H_n, V_n) = det(J_n - zI) / det(H_n - zI)`.
pub fn rank2_det(bundle: &OperatorBundle, z: Complex64) -> Result<LogComplex> {
    let sym = bundle.symmetrization("rank2_det")?;
    let corners = resolvent_corners(bundle, z)?;
    Ok(rank2_det_from(&corners, sym.a_n, sym.b_n))
}

/// `ln|a_n b_n G_1n G_n1|`, the cross term that vanishes as `n` grows off the real axis.
pub fn cross_term_log_modulus(bundle: &OperatorBundle, z: Complex64) -> Result<f64> {
    let sym = bundle.symmetrization("cross_term")?;
    let c = resolvent_corners(bundle, z)?;
    Ok((sym.a_n * sym.b_n * c.g1n * c.gn1).log_mod)
}

/// `det(J_n - zI) = d · det(H_n - zI)` in log-scaled form.
pub fn characteristic_value(bundle: &OperatorBundle, z: Complex64) -> Result<LogComplex> {
    let sym = bundle.symmetrization("characteristic_value")?;
    let corners = resolvent_corners(bundle, z)?;
    Ok(rank2_det_from(&corners, sym.a_n, sym.b_n) * corners.det)
}

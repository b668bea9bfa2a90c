//! Fixed-point eigenvector bounds for transfer products in the upper half-plane,
//! and the half-plane sector distance bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{boundary_matrix, transfer_product, Mat2, OperatorBundle};

/// Eigenvectors `(u, 1)` and `(v, 1)` of a 2×2 matrix, with `Im u ≤ Im v`.
pub fn projective_eigenvectors(m: &Mat2) -> Option<(Complex64, Complex64)> {
    // m10 u^2 + (m11 - m00) u - m01 = 0
    let a = m[1][0];
    let b = m[1][1] - m[0][0];
    let c = -m[0][1];
    if a.norm() == 0.0 {
        return None;
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    // pick the sign that avoids cancellation
    let qq = if (b.conj() * disc).re >= 0.0 {
        -0.5 * (b + disc)
    } else {
        -0.5 * (b - disc)
    };
    if qq.norm() == 0.0 {
        return Some((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
    }
    let r1 = qq / a;
    let r2 = c / qq;
    Some(if r1.im <= r2.im { (r1, r2) } else { (r2, r1) })
}

/// Bounds evaluated for one `(bundle, z)`; slacks are `bound - value` and must be ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorBounds {
    pub u: Complex64,
    pub v: Complex64,
    /// `-β Im z / c_n - Im u`.
    pub slack_im_u: f64,
    /// `β|q_n - z|/c_n + β c_{n-1}^2/(c_n Im z) - |u|`.
    pub slack_abs_u: f64,
    /// `Im v`.
    pub slack_im_v: f64,
    /// `c_0 / Im z - |v|`.
    pub slack_abs_v: f64,
}

impl EigenvectorBounds {
    pub fn min_slack(&self) -> f64 {
        self.slack_im_u
            .min(self.slack_abs_u)
            .min(self.slack_im_v)
            .min(self.slack_abs_v)
    }
}

fn evaluate(bundle: &OperatorBundle, z: Complex64, m: &Mat2, beta: f64) -> Result<EigenvectorBounds> {
    let c = &bundle.symmetrization("eigenvector_bounds")?.c;
    let n = bundle.n;
    let (u, v) = projective_eigenvectors(m).ok_or_else(|| Error::validation("z", "degenerate transfer matrix"))?;
    let y = z.im;
    let qn = bundle.diag[n - 1];
    Ok(EigenvectorBounds {
        u,
        v,
        slack_im_u: -beta * y / c[n] - u.im,
        slack_abs_u: beta * (qn - z).norm() / c[n] + beta * c[n - 1] * c[n - 1] / (c[n] * y) - u.norm(),
        slack_im_v: v.im,
        slack_abs_v: c[0] / y - v.norm(),
    })
}

fn require_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::validation("z", "bounds hold for Im z > 0"))
    }
}

/// Bounds for the eigenvectors of `S_n(z)`.
pub fn transfer_bounds(bundle: &OperatorBundle, z: Complex64) -> Result<EigenvectorBounds> {
    require_upper(z)?;
    let s = transfer_product(bundle, z)?;
    evaluate(bundle, z, &s.stored, 1.0)
}

/// Bounds for the eigenvectors of `B_n S_n(z)` (β-scaled `u` bounds).
pub fn boundary_bounds(bundle: &OperatorBundle, z: Complex64) -> Result<EigenvectorBounds> {
    require_upper(z)?;
    let sym = bundle.symmetrization("eigenvector_bounds")?;
    let bm = boundary_matrix(bundle, z)?;
    evaluate(bundle, z, &bm.matrix, sym.beta())
}

/// Whether `z` lies in the closed half-plane `{α ≤ arg z ≤ α + π}`.
pub fn in_sector(alpha: f64, z: Complex64) -> bool {
    // rotate by -α: the sector becomes the closed upper half-plane
    (z * Complex64::from_polar(1.0, -alpha)).im >= 0.0
}

/// Euclidean distance from `w` to the closed half-plane `{α ≤ arg z ≤ α + π}`.
pub fn sector_distance(alpha: f64, w: Complex64) -> f64 {
    let im = (w * Complex64::from_polar(1.0, -alpha)).im;
    if im >= 0.0 {
        0.0
    } else {
        -im
    }
}

//! Inverse iteration on `J_n - zI` in O(n) per step: pivoted tridiagonal LU
//! plus a rank-2 correction for the corner entries.

use num_complex::Complex64;

use crate::operator::OperatorBundle;

/// LU of a complex tridiagonal matrix with row interchanges (second
/// super-diagonal fill), as in LAPACK `gttrf`.
struct TridiagonalLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swap: Vec<bool>,
}

impl TridiagonalLu {
    /// Zero pivots are replaced by `tiny`, which perturbs the matrix by at most `tiny`.
    fn factor(mut dl: Vec<Complex64>, mut d: Vec<Complex64>, mut du: Vec<Complex64>, tiny: f64) -> Self {
        let n = d.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut du2 = vec![zero; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i] == zero {
                    d[i] = Complex64::new(tiny, 0.0);
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == zero {
            d[n - 1] = Complex64::new(tiny, 0.0);
        }
        Self { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            let t = b[i];
            b[i + 1] -= self.dl[i] * t;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }
}

/// `(J - zI) x` without forming `J`.
pub fn apply_shifted(bundle: &OperatorBundle, z: Complex64, x: &[Complex64]) -> Vec<Complex64> {
    let n = bundle.n;
    let mut y: Vec<Complex64> = (0..n).map(|i| (bundle.diag[i] - z) * x[i]).collect();
    for i in 0..n - 1 {
        y[i] += bundle.sup[i] * x[i + 1];
        y[i + 1] += bundle.sub[i] * x[i];
    }
    y[0] += bundle.corner_upper * x[n - 1];
    y[n - 1] += bundle.corner_lower * x[0];
    y
}

fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Two steps of inverse iteration from a fixed start vector; returns `v` with `‖v‖ = 1`.
pub fn approximate_eigenvector(bundle: &OperatorBundle, z: Complex64) -> Vec<Complex64> {
    let n = bundle.n;
    let scale = bundle
        .diag
        .iter()
        .map(|q| q.abs())
        .chain(bundle.sub.iter().map(|s| s.abs()))
        .chain(bundle.sup.iter().map(|s| s.abs()))
        .fold(z.norm(), f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let lu = TridiagonalLu::factor(
        bundle.sub.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        bundle.diag.iter().map(|&q| q - z).collect(),
        bundle.sup.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        tiny,
    );
    // J - zI = T + cu e_0 e_{n-1}^T + cl e_{n-1} e_0^T = T + U W^T
    let (cu, cl) = (bundle.corner_upper, bundle.corner_lower);
    let mut y0 = vec![Complex64::new(0.0, 0.0); n];
    y0[0] = Complex64::new(cu, 0.0);
    lu.solve(&mut y0);
    let mut y1 = vec![Complex64::new(0.0, 0.0); n];
    y1[n - 1] = Complex64::new(cl, 0.0);
    lu.solve(&mut y1);
    // capacitance C = I + W^T T^{-1} U, W = [e_{n-1}, e_0]
    let one = Complex64::new(1.0, 0.0);
    let c = [[one + y0[n - 1], y1[n - 1]], [y0[0], one + y1[0]]];
    let mut det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if det == Complex64::new(0.0, 0.0) {
        det = Complex64::new(f64::EPSILON, 0.0);
    }
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.5 * ((i as f64) * 0.754_877_666).fract(), 0.0))
        .collect();
    for _ in 0..2 {
        lu.solve(&mut x);
        let (w0, w1) = (x[n - 1], x[0]);
        let a0 = (c[1][1] * w0 - c[0][1] * w1) / det;
        let a1 = (c[0][0] * w1 - c[1][0] * w0) / det;
        for i in 0..n {
            x[i] -= y0[i] * a0 + y1[i] * a1;
        }
        let nx = norm2(&x);
        if !(nx.is_finite() && nx > 0.0) {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
    }
    x
}

/// `‖(J - zI) v‖ / ‖v‖` for the inverse-iteration vector `v`.
pub fn eigenpair_residual(bundle: &OperatorBundle, z: Complex64) -> f64 {
    let v = approximate_eigenvector(bundle, z);
    let nv = norm2(&v);
    if !(nv.is_finite() && nv > 0.0) {
        return f64::NAN;
    }
    norm2(&apply_shifted(bundle, z, &v)) / nv
}

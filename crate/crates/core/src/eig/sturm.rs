//! Sturm counts and bisection for real symmetric tridiagonal matrices.

use crate::operator::SymTridiagonal;

fn pivmin(h: &SymTridiagonal) -> f64 {
    let max_off2 = h.offdiag.iter().fold(1.0f64, |m, &b| m.max(b * b));
    f64::MIN_POSITIVE * max_off2
}

/// Number of eigenvalues strictly below `lambda`.
///
/// Counts negative pivots of the `LDLᵀ` factorization of `H - λI`. A pivot
/// that vanishes is replaced by `+pivmin`, so an exact eigenvalue at `λ` is
/// not counted.
pub fn eigencount(h: &SymTridiagonal, lambda: f64) -> usize {
    eigencount_with(h, lambda, pivmin(h))
}

#[inline]
fn eigencount_with(h: &SymTridiagonal, lambda: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut d = h.diag[0] - lambda;
    if d.abs() < pivmin {
        d = pivmin;
    }
    if d < 0.0 {
        count += 1;
    }
    for i in 1..h.diag.len() {
        let b = h.offdiag[i - 1];
        d = (h.diag[i] - lambda) - b * b / d;
        if d.abs() < pivmin {
            d = pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues, ascending, to absolute accuracy `1e-12 · max(1, ‖H‖)`.
pub fn spectrum(h: &SymTridiagonal) -> Vec<f64> {
    let n = h.n();
    if n == 1 {
        return vec![h.diag[0]];
    }
    let (lo, hi) = h.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = 1e-12 * scale;
    // pad so the end counts are exactly 0 and n
    let pad = 2.0 * tol + f64::EPSILON * scale;
    let (lo, hi) = (lo - pad, hi + pad);
    let piv = pivmin(h);
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![(lo, hi, 0usize, n)];
    // depth-first, lower half last pushed so output comes out ascending
    while let Some((a, b, ca, cb)) = stack.pop() {
        if ca == cb {
            continue;
        }
        if b - a <= tol {
            let mid = 0.5 * (a + b);
            out.extend(std::iter::repeat(mid).take(cb - ca));
            continue;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            out.extend(std::iter::repeat(mid).take(cb - ca));
            continue;
        }
        let cm = eigencount_with(h, mid, piv).clamp(ca, cb);
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out
}

//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's numerical kernels.

#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense `J_n` as rows, assembled from the coefficient arrays by the
/// textbook definition (1-based: `J[k+1,k] = -e^{ξ_k}`, `J[k,k+1] = -e^{η_k}`,
/// `J[1,n] = -e^{ξ_0}`, `J[n,1] = -e^{η_n}`), or from raw entries.
pub fn j_rows(xi: &[f64], eta: &[f64], q: &[f64], n: usize, raw: bool) -> Vec<Vec<f64>> {
    let f = |v: f64| if raw { v } else { -v.exp() };
    let mut a = vec![vec![0.0; n]; n];
    for k in 1..=n {
        a[k - 1][k - 1] = q[k];
    }
    for k in 1..n {
        a[k][k - 1] += f(xi[k]);
        a[k - 1][k] += f(eta[k]);
    }
    a[0][n - 1] += f(xi[0]);
    a[n - 1][0] += f(eta[n]);
    a
}

/// `ln|det A|` by Gaussian elimination with partial pivoting.
pub fn lu_log_abs_det(mut a: Vec<Vec<Complex64>>) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].norm() > a[p][k].norm() {
                p = i;
            }
        }
        a.swap(k, p);
        let piv = a[k][k];
        if piv.norm() == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += piv.norm().ln();
        for i in k + 1..n {
            let f = a[i][k] / piv;
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    acc
}

pub fn shifted(a: &[Vec<f64>], z: Complex64) -> Vec<Vec<Complex64>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { c(v, 0.0) - z } else { c(v, 0.0) })
                .collect()
        })
        .collect()
}

type Poly = Vec<f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Poly, p: &Poly, s: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (i, v) in p.iter().enumerate() {
        acc[i] += s * v;
    }
}

/// Coefficients (ascending powers of `z`) of `det(A - zI)` by cofactor
/// expansion along the first remaining row.
pub fn charpoly_cofactor(a: &[Vec<f64>]) -> Poly {
    let n = a.len();
    let entry = |i: usize, j: usize| -> Poly {
        if i == j {
            vec![a[i][j], -1.0]
        } else {
            vec![a[i][j]]
        }
    };
    fn rec(row: usize, cols: &mut Vec<usize>, n: usize, entry: &dyn Fn(usize, usize) -> Poly) -> Poly {
        if row == n {
            return vec![1.0];
        }
        let mut acc = vec![0.0];
        for pos in 0..cols.len() {
            let col = cols[pos];
            let e = entry(row, col);
            if e.iter().all(|&v| v == 0.0) {
                continue;
            }
            cols.remove(pos);
            let minor = rec(row + 1, cols, n, entry);
            cols.insert(pos, col);
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            poly_add_scaled(&mut acc, &poly_mul(&e, &minor), sign);
        }
        acc
    }
    let mut cols: Vec<usize> = (0..n).collect();
    rec(0, &mut cols, n, &entry)
}

fn horner(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(c(0.0, 0.0), |acc, &v| acc * z + v)
}

/// All roots of a real polynomial (ascending coefficients) by Weierstrass
/// iteration followed by Newton polishing.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = coeffs.iter().map(|&v| c(v, 0.0)).collect();
    while p.last().map_or(false, |v| v.norm() == 0.0) {
        p.pop();
    }
    let deg = p.len() - 1;
    let lead = p[deg];
    for v in p.iter_mut() {
        *v /= lead;
    }
    let radius = 1.0 + p[..deg].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let seed = c(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * radius.min(2.0)).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut den = c(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = horner(&p, roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    let dp: Vec<Complex64> = (1..=deg).map(|k| p[k] * k as f64).collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = horner(&dp, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= horner(&p, *r) / d;
        }
    }
    roots
}

/// Greedy bottleneck matching: an upper bound on the optimal matching distance.
pub fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = 0.0f64;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
            if matched == a.len() {
                break;
            }
        }
    }
    worst
}

/// Eigenvalues of the constant-coefficient periodic matrix: `q - e^η ω - e^ξ / ω`
/// over the `n`-th roots of unity `ω`.
pub fn circulant_spectrum(n: usize, xi: f64, eta: f64, q: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
            c(q, 0.0) - eta.exp() * w - xi.exp() / w
        })
        .collect()
}

/// Arcsine law: IDS of the free Jacobi matrix on `[-2, 2]`.
pub fn arcsine_ids(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + (x / 2.0).asin() / std::f64::consts::PI
    }
}

/// Free Lyapunov exponent `ln|z/2 + sqrt(z²/4 - 1)|` on the branch with modulus ≥ 1.
pub fn free_lyapunov(z: Complex64) -> f64 {
    let s = (z * z / 4.0 - 1.0).sqrt();
    let (a, b) = (z / 2.0 + s, z / 2.0 - s);
    a.norm().max(b.norm()).ln()
}

/// `(-z + sqrt(z² - 4))/2` on the branch with `Im m` of the sign of `Im z`:
/// the Stieltjes transform of the semicircle law on `[-2, 2]`.
pub fn semicircle_stieltjes(z: Complex64) -> Complex64 {
    let s = (z * z - 4.0).sqrt();
    let m1 = (-z + s) / 2.0;
    let m2 = (-z - s) / 2.0;
    if m1.im * z.im > 0.0 {
        m1
    } else {
        m2
    }
}

/// `∫ dN(λ)/(λ - z)` for the arcsine law, by the midpoint rule in `λ = 2cos θ`.
pub fn arcsine_stieltjes(z: Complex64) -> Complex64 {
    let m = 200_000;
    let h = std::f64::consts::PI / m as f64;
    let mut acc = c(0.0, 0.0);
    for i in 0..m {
        let lam = 2.0 * ((i as f64 + 0.5) * h).cos();
        acc += 1.0 / (c(lam, 0.0) - z);
    }
    acc / m as f64
}

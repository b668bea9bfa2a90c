//! Eigenvalues of a dense real matrix: balancing, elimination to upper
//! Hessenberg form, and the Francis implicit double-shift QR iteration.
//!
//! Matrices are column-major, `a[i + j * n]`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Diagonal similarity scaling by powers of two so that row and column norms match.
pub fn balance(a: &mut [f64], n: usize) {
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j + i * n].abs();
                    r += a[i + j * n].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i + j * n] *= g;
                    }
                    for j in 0..n {
                        a[j + i * n] *= f;
                    }
                }
            }
        }
    }
}

/// Reduce to upper Hessenberg form by stabilized elementary similarity
/// transformations (Gaussian elimination with pivoting). Entries below the
/// first sub-diagonal are zeroed on exit.
pub fn hessenberg(a: &mut [f64], n: usize) {
    let mut mult = vec![0.0; n];
    for m in 1..n.saturating_sub(1) {
        let col = m - 1;
        let mut x = 0.0f64;
        let mut piv = m;
        for j in m..n {
            if a[j + col * n].abs() > x.abs() {
                x = a[j + col * n];
                piv = j;
            }
        }
        if piv != m {
            for j in col..n {
                a.swap(piv + j * n, m + j * n);
            }
            for i in 0..n {
                a.swap(i + piv * n, i + m * n);
            }
        }
        if x == 0.0 {
            continue;
        }
        let mut any = false;
        for i in m + 1..n {
            let y = a[i + col * n];
            if y != 0.0 {
                let y = y / x;
                a[i + col * n] = y;
                mult[i] = y;
                any = true;
            } else {
                mult[i] = 0.0;
            }
        }
        if !any {
            continue;
        }
        // rows i -= y_i * row m, over columns m..n
        for j in m..n {
            let am = a[m + j * n];
            if am != 0.0 {
                let colj = &mut a[j * n..(j + 1) * n];
                for i in m + 1..n {
                    colj[i] -= mult[i] * am;
                }
            }
        }
        // column m += y_i * column i
        for i in m + 1..n {
            let y = mult[i];
            if y != 0.0 {
                let (lo, hi) = a.split_at_mut(i * n);
                let colm = &mut lo[m * n..(m + 1) * n];
                let coli = &hi[..n];
                for r in 0..n {
                    colm[r] += y * coli[r];
                }
            }
        }
    }
    for j in 0..n {
        for i in j + 2..n {
            a[i + j * n] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed).
///
/// At most `30 n` double-shift sweeps in total; an exceptional shift is used
/// after every 10 sweeps without deflation.
pub fn hessenberg_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<Complex64>> {
    hessenberg_eigenvalues_capped(a, n, 30 * n)
}

pub(crate) fn hessenberg_eigenvalues_capped(a: &mut [f64], n: usize, cap: usize) -> Result<Vec<Complex64>> {
    let idx = |i: usize, j: usize| i + j * n;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let mut total = 0usize;
    let mut t = 0.0;
    // nn: last row of the active block (inclusive), as isize to allow -1
    let mut nn = n as isize - 1;
    let (mut p, mut q, mut r): (f64, f64, f64);
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu_now = nn as usize;
            // look for a small sub-diagonal element
            let mut l = nu_now;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() + s == s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nn_u = nu_now;
            let mut x = a[idx(nn_u, nn_u)];
            if l == nn_u {
                wr[nn_u] = x + t;
                wi[nn_u] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[idx(nn_u - 1, nn_u - 1)];
            let mut w = a[idx(nn_u, nn_u - 1)] * a[idx(nn_u - 1, nn_u)];
            if l == nn_u - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn_u - 1] = x + z;
                    wr[nn_u] = x + z;
                    if z != 0.0 {
                        wr[nn_u] = x - w / z;
                    }
                    wi[nn_u - 1] = 0.0;
                    wi[nn_u] = 0.0;
                } else {
                    wr[nn_u - 1] = x + p;
                    wr[nn_u] = x + p;
                    wi[nn_u - 1] = -z;
                    wi[nn_u] = z;
                }
                nn -= 2;
                break;
            }
            if total >= cap {
                return Err(Error::NoConvergence {
                    n,
                    found: n - 1 - nn_u,
                    iterations: total,
                    block_start: l,
                    block_end: nn_u,
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nn_u {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nn_u, nn_u - 1)].abs() + a[idx(nn_u - 1, nn_u - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;
            // look for two consecutive small sub-diagonal elements
            let mut m = nn_u - 2;
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn_u {
                a[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[idx(i, i - 3)] = 0.0;
                }
            }
            // double-shift QR step on rows l..=nn and columns m..=nn
            let mut k = m;
            while k < nn_u {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = 0.0;
                    if k != nn_u - 1 {
                        r = a[idx(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    let last = k == nn_u - 1;
                    for j in k..=nn_u {
                        let base = j * n + k;
                        let mut pp = a[base] + q * a[base + 1];
                        if !last {
                            pp += r * a[base + 2];
                            a[base + 2] -= pp * z;
                        }
                        a[base + 1] -= pp * y;
                        a[base] -= pp * x;
                    }
                    let mmin = if nn_u < k + 3 { nn_u } else { k + 3 };
                    let (ck, ck1, ck2) = (k * n, (k + 1) * n, (k + 2) * n);
                    for i in l..=mmin {
                        let mut pp = x * a[ck + i] + y * a[ck1 + i];
                        if !last {
                            pp += z * a[ck2 + i];
                            a[ck2 + i] -= pp * r;
                        }
                        a[ck1 + i] -= pp * q;
                        a[ck + i] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// All eigenvalues of a dense real matrix (column-major, consumed).
pub fn eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(a.len(), n * n);
    balance(&mut a, n);
    hessenberg(&mut a, n);
    hessenberg_eigenvalues(&mut a, n)
}

//! Eigenvalues of general real matrices: power-of-two balancing, Householder
//! reduction to Hessenberg form and the Francis double-shift QR iteration.
//! Eigenvectors come from inverse iteration on the Hessenberg matrix, mapped
//! back through the orthogonal and balancing transforms.

use num_complex::Complex64;
use rayon::prelude::*;

use super::matrix::{norm2, CMat, Mat};
use crate::error::{Error, Result};

/// Average number of QR sweeps allowed per eigenvalue.
pub const QR_SWEEPS_PER_EIGENVALUE: usize = 40;

#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    pub values: Vec<Complex64>,
    /// Unit right eigenvectors as columns, when requested.
    pub vectors: Option<CMat>,
    /// `‖Mx − μx‖ / ‖M‖_F` for each eigenpair, when vectors were requested.
    pub residuals: Option<Vec<f64>>,
    /// `|Σμ − tr M| / (1 + |tr M|)`.
    pub trace_defect: f64,
}

pub fn nonsym_eig(m: &Mat, want_vectors: bool) -> Result<ComplexSpectrum> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!("nonsym_eig needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if m.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(ComplexSpectrum { values: vec![], vectors: None, residuals: None, trace_defect: 0.0 });
    }
    let mut h = m.clone();
    let scale = balance(&mut h);
    let q = hessenberg(&mut h);
    let hess = h.clone();
    let values = francis_qr(&mut h)?;

    let tr = m.trace();
    let sum: Complex64 = values.iter().sum();
    let trace_defect = (sum - tr).norm() / (1.0 + tr.abs());
    if trace_defect > 1e-8 {
        log::warn!("eigenvalue sum deviates from the trace by {trace_defect:e}");
    }
    if !want_vectors {
        return Ok(ComplexSpectrum { values, vectors: None, residuals: None, trace_defect });
    }

    let hnorm = hess.frobenius_norm().max(f64::MIN_POSITIVE);
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let y = hessenberg_inverse_iteration(&hess, values[k], hnorm);
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let row = q.row(i);
                let s: Complex64 = row.iter().zip(&y).map(|(a, b)| *b * *a).sum();
                x[i] = s * scale[i];
            }
            let nx = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            x
        })
        .collect();
    let mnorm = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mc = m.to_complex();
    let residuals = cols
        .par_iter()
        .zip(&values)
        .map(|(x, &mu)| {
            let mx = mc.matvec(x);
            let r: f64 = mx.iter().zip(x).map(|(a, b)| (a - mu * b).norm_sqr()).sum();
            r.sqrt() / mnorm
        })
        .collect();
    let mut vectors = CMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        vectors.set_col(j, c);
    }
    Ok(ComplexSpectrum { values, vectors: Some(vectors), residuals: Some(residuals), trace_defect })
}

/// Diagonal similarity `D⁻¹MD` with `D` a power of two per index. Returns
/// the diagonal of `D`.
fn balance(a: &mut Mat) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    scale
}

/// Reduces `h` in place to upper Hessenberg form and returns the orthogonal
/// `Q` with `M = Q H Qᵀ`.
fn hessenberg(h: &mut Mat) -> Mat {
    let n = h.rows();
    let mut ort = vec![0.0; n];
    if n > 2 {
        let high = n - 1;
        for m in 1..high {
            let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
            if scale == 0.0 {
                continue;
            }
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[(i, m - 1)] / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = hh.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;
            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[(i, j)];
                }
                f /= hh;
                for i in m..=high {
                    h[(i, j)] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let row = h.row_mut(i);
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * row[j];
                }
                f /= hh;
                for j in m..=high {
                    row[j] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[(m, m - 1)] = scale * g;
        }
    }
    let mut v = Mat::identity(n);
    if n > 2 {
        let high = n - 1;
        for m in (1..high).rev() {
            if h[(m, m - 1)] == 0.0 {
                continue;
            }
            for i in m + 1..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    v[(i, j)] += g * ort[i];
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            h[(i, j)] = 0.0;
        }
    }
    v
}

/// Eigenvalues of an upper Hessenberg matrix; `h` is overwritten.
fn francis_qr(h: &mut Mat) -> Result<Vec<Complex64>> {
    let nn = h.rows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let eps = f64::EPSILON;
    let budget = QR_SWEEPS_PER_EIGENVALUE * nn;
    let mut sweeps = 0usize;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            d[nu] = h[(nu, nu)] + exshift;
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            sweeps += 1;
            if sweeps > budget {
                return Err(Error::NoConvergence(format!(
                    "Francis QR exceeded {budget} sweeps with {} eigenvalues left",
                    nu + 1
                )));
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..=nu {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * z;
                    }
                    h[(k, j)] -= p * x;
                    h[(k + 1, j)] -= p * y;
                }
                for i in l..=nu.min(k + 3) {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k)] -= p;
                    h[(i, k + 1)] -= p * q;
                }
            }
        }
    }
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Inverse iteration with `H − μI` factored by adjacent-row pivoting, which
/// keeps each solve at `O(n²)`.
fn hessenberg_inverse_iteration(h: &Mat, mu: Complex64, hnorm: f64) -> Vec<Complex64> {
    let n = h.rows();
    let tiny = f64::EPSILON * hnorm;
    let mut u: Vec<Complex64> = h.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for i in 0..n {
        u[i * n + i] -= mu;
    }
    // Row swaps and multipliers, recorded to replay on the right-hand side.
    let mut swapped = vec![false; n];
    let mut mult = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        if u[(k + 1) * n + k].norm() > u[k * n + k].norm() {
            let (a, b) = u.split_at_mut((k + 1) * n);
            a[k * n + k..k * n + n].swap_with_slice(&mut b[k..n]);
            swapped[k] = true;
        }
        let piv = u[k * n + k];
        if piv.norm() == 0.0 {
            continue;
        }
        let l = u[(k + 1) * n + k] / piv;
        mult[k] = l;
        u[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
        if l.norm() != 0.0 {
            let (a, b) = u.split_at_mut((k + 1) * n);
            let rk = &a[k * n..k * n + n];
            for j in k + 1..n {
                b[j] -= l * rk[j];
            }
        }
    }
    for k in 0..n {
        if u[k * n + k].norm() < tiny {
            u[k * n + k] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
        }
    }
    let solve = |b: &mut Vec<Complex64>| {
        for k in 0..n.saturating_sub(1) {
            if swapped[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= mult[k] * t;
        }
        for i in (0..n).rev() {
            let row = &u[i * n..i * n + n];
            let mut s = b[i];
            for j in i + 1..n {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
    };
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    for (i, xi) in x.iter_mut().enumerate() {
        // A fixed, non-symmetric start avoids accidental orthogonality.
        *xi = Complex64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64, 0.0);
    }
    for _ in 0..3 {
        solve(&mut x);
        let nx = norm2(&x);
        if !nx.is_finite() || nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let mut res = 0.0;
        for i in 0..n {
            let row = h.row(i);
            let mut s = -mu * x[i];
            for j in i.saturating_sub(1)..n {
                s += x[j] * row[j];
            }
            res += s.norm_sqr();
        }
        if res.sqrt() <= 1e-14 * hnorm {
            break;
        }
    }
    x
}

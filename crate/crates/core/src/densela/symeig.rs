//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! the implicit QL iteration, plus the SPD square roots built on it.

use super::matrix::Mat;
use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest admissible `λ_min / λ_max` for the SPD roots.
pub const SPD_RATIO_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: Mat,
}

impl SymEig {
    /// `Q·diag(f(λ))·Qᵀ`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let q = &self.vectors;
        let fd: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let qf = Mat::from_fn(n, n, |i, j| q[(i, j)] * fd[j]);
        qf.matmul(&q.transpose()).symmetrized()
    }
}

pub fn sym_eig(s: &Mat) -> Result<SymEig> {
    if !s.is_square() {
        return Err(Error::InvalidArgument(format!("sym_eig needs a square matrix, got {}x{}", s.rows(), s.cols())));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::AsymmetryExceeded { name: "sym_eig input".into(), asymmetry: asym, limit: SYMMETRY_TOL });
    }
    let n = s.rows();
    if n == 0 {
        return Ok(SymEig { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let mut v: Vec<f64> = s.symmetrized().data().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    // Rows of `w` are the columns of the accumulated transform.
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[j * n + i] = v[i * n + j];
        }
    }
    ql_implicit(n, &mut w, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| w[order[j] * n + i]);
    Ok(SymEig { values, vectors })
}

fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// `w` holds the transform transposed: row `i` is column `i`.
fn ql_implicit(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let cap = 50 * n.max(1);
    let mut total_iter = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                total_iter += 1;
                if total_iter > cap {
                    return Err(Error::NoConvergence(format!("symmetric QL exceeded {cap} iterations")));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let wi = &mut lo[i * n..];
                    let wi1 = &mut hi[..n];
                    for k in 0..n {
                        let h = wi1[k];
                        wi1[k] = s * wi[k] + c * h;
                        wi[k] = c * wi[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// `S^{1/2}` and `S^{-1/2}` from one decomposition.
#[derive(Debug, Clone)]
pub struct SpdRoots {
    pub sqrt: Mat,
    pub inv_sqrt: Mat,
    pub eig: SymEig,
}

pub fn spd_roots(s: &Mat) -> Result<SpdRoots> {
    let eig = sym_eig(s)?;
    let (min, max) = match (eig.values.first(), eig.values.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidArgument("empty matrix".into())),
    };
    if max <= 0.0 || min <= SPD_RATIO_FLOOR * max {
        return Err(Error::NotPositiveDefinite(format!("eigenvalue range [{min:e}, {max:e}]")));
    }
    Ok(SpdRoots { sqrt: eig.apply_fn(f64::sqrt), inv_sqrt: eig.apply_fn(|l| 1.0 / l.sqrt()), eig })
}

pub fn spd_inv_sqrt(s: &Mat) -> Result<Mat> {
    spd_roots(s).map(|r| r.inv_sqrt)
}

pub fn spd_sqrt(s: &Mat) -> Result<Mat> {
    spd_roots(s).map(|r| r.sqrt)
}

/// Lower Cholesky factor; used as a positive-definiteness certificate.
pub fn cholesky(s: &Mat) -> Result<Mat> {
    let n = s.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} = {diag:e}")));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

//! Singular values: the normal-equations route for Schatten diagnostics and a
//! one-sided Jacobi SVD where small singular values must be resolved to full
//! relative accuracy (rank decisions).

use num_complex::Complex64;

use super::matrix::{CMat, Mat};
use super::symeig::sym_eig;
use crate::error::{Error, Result};

/// Square roots of the eigenvalues of `MᵀM`, descending.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    let mtm = m.transpose().matmul(m).symmetrized();
    let eig = sym_eig(&mtm)?;
    Ok(eig.values.iter().rev().map(|&l| l.max(0.0).sqrt()).collect())
}

#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors as columns, ordered like `sigma`.
    pub v: CMat,
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD of a complex matrix.
pub fn jacobi_svd(m: &CMat) -> Result<Svd> {
    let rows = m.rows();
    let n = m.cols();
    // Work on columns stored contiguously.
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let eps = f64::EPSILON;
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = a[i].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = a[j].iter().map(|x| x.norm_sqr()).sum();
                let gamma: Complex64 = a[i].iter().zip(&a[j]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s, phase);
                let (lo, hi) = v.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi SVD exceeded {JACOBI_SWEEPS} sweeps")));
    }
    let _ = rows;
    let norms: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| norms[q].total_cmp(&norms[p]));
    let sigma = order.iter().map(|&k| norms[k]).collect();
    let vm = CMat::from_fn(n, n, |r, c| v[order[c]][r]);
    Ok(Svd { sigma, v: vm })
}

/// `(x, y) ← (c·x − s·e^{-iφ}·y, s·x + c·e^{-iφ}·y)`; the phase is absorbed
/// into the second column so the pair becomes orthogonal.
fn rotate(x: &mut [Complex64], y: &mut [Complex64], c: f64, s: f64, phase: Complex64) {
    let ph = phase.conj();
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let b = ph * *yi;
        let a = *xi;
        *xi = a * c - b * s;
        *yi = a * s + b * c;
    }
}

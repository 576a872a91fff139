//! Jordan chains of the pencil `L(λ) = Ã − λB̃ + λ²` at a cluster of the
//! companion spectrum.

use num_complex::Complex64;
use serde::Serialize;

use super::{apply_pencil, inner, real_matvec, Cluster, CompanionSystem, Spectrum};
use crate::assembly::WhitenedSystem;
use crate::densela::{jacobi_svd, norm2, CMat};
use crate::error::{Error, Result};

/// Singular values below `RANK_REL_TOL · scale` count as zero.
pub const RANK_REL_TOL: f64 = 1e-8;
/// No singular value may sit within this factor of the threshold.
pub const RANK_GAP: f64 = 10.0;
/// Chains whose residual exceeds this are rejected.
pub const CHAIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct JordanChain {
    pub lambda: Complex64,
    /// `u_0` is an eigenvector; `u_j` are the associated vectors.
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// `ρ_j = ‖L(λ)u_j + L'(λ)u_{j−1} + u_{j−2}‖ / (max_i ‖u_i‖ · (‖Ã‖_F + |λ|‖B̃‖_F + |λ|²))`
/// with `L'(λ) = −B̃ + 2λ`.
pub fn jordan_chain_residual(w: &WhitenedSystem, lambda: Complex64, chain: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let n = w.size();
    if let Some(bad) = chain.iter().find(|u| u.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
    }
    let umax = chain.iter().map(|u| norm2(u)).fold(0.0, f64::max);
    if umax == 0.0 {
        return Err(Error::EmptyChain);
    }
    let scale = umax * (w.a.frobenius_norm() + lambda.norm() * w.b.frobenius_norm() + lambda.norm_sqr());
    let two_l = 2.0 * lambda;
    Ok((0..chain.len())
        .map(|j| {
            let mut r = apply_pencil(w, lambda, &chain[j]);
            if j >= 1 {
                let bu = real_matvec(&w.b, &chain[j - 1]);
                for i in 0..n {
                    r[i] += two_l * chain[j - 1][i] - bu[i];
                }
            }
            if j >= 2 {
                for i in 0..n {
                    r[i] += chain[j - 2][i];
                }
            }
            norm2(&r) / scale
        })
        .collect())
}

/// Kernel basis of `m` (columns of `V` with singular values under
/// `RANK_REL_TOL · scale`), refusing ambiguous gaps.
fn kernel(m: &CMat, scale: f64) -> Result<Vec<Vec<Complex64>>> {
    let svd = jacobi_svd(m)?;
    let thr = RANK_REL_TOL * scale;
    for &s in &svd.sigma {
        if s > thr / RANK_GAP && s < thr * RANK_GAP {
            return Err(Error::RankAmbiguous { ratio: s / scale, threshold: RANK_REL_TOL });
        }
    }
    Ok((0..svd.sigma.len()).filter(|&i| svd.sigma[i] <= thr).map(|i| svd.v.col(i)).collect())
}

/// Orthonormalizes `cands` against `base` (assumed orthonormal) and each
/// other, keeping at most `want` vectors.
fn extend_basis(base: &mut Vec<Vec<Complex64>>, cands: &[Vec<Complex64>], want: usize) -> Vec<Vec<Complex64>> {
    let mut picked = Vec::new();
    for c in cands {
        if picked.len() == want {
            break;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for b in base.iter() {
                let p = inner(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            base.push(v);
            picked.push(c.clone());
        }
    }
    picked
}

fn orthonormal(vs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut base = Vec::new();
    extend_basis(&mut base, vs, vs.len());
    base
}

/// Jordan chains for every eigenvalue in `cluster`.
///
/// The root subspace `Y` of `D` at the cluster centroid is the kernel of
/// `(D − μ̄)^r`. Restricted to `Y`, `R = (Yᴴ D Y)⁻¹` represents the
/// linearization, and the chains are those of the nilpotent part
/// `R − λ̄` with `λ̄ = tr R / r`.
pub fn jordan_chains(c: &CompanionSystem, spectrum: &Spectrum, cluster_id: usize) -> Result<Vec<JordanChain>> {
    let cluster: &Cluster = spectrum
        .clusters
        .get(cluster_id)
        .ok_or_else(|| Error::InvalidArgument(format!("no cluster {cluster_id}")))?;
    let n = c.size();
    let r = cluster.members.len();
    let d = c.d.to_complex();
    let dnorm = c.d.frobenius_norm();
    let shifted = d.add_scaled_identity(-cluster.mu_centroid);
    let mut power = shifted.clone();
    for _ in 1..r {
        power = power.matmul(&shifted);
    }
    let y = orthonormal(&kernel(&power, dnorm.powi(r as i32))?);
    if y.len() != r {
        return Err(Error::RankAmbiguous { ratio: y.len() as f64 / r as f64, threshold: RANK_REL_TOL });
    }
    let ymat = CMat::from_fn(2 * n, r, |i, j| y[j][i]);
    let restricted = ymat.adjoint().matmul(&d).matmul(&ymat);
    let rmat = crate::densela::inverse(&restricted)?;
    let lambda = rmat.trace() / r as f64;
    let nil = rmat.add_scaled_identity(-lambda);
    let rnorm = rmat.frobenius_norm();

    // Kernels of N^k until they fill the space.
    let mut kernels: Vec<Vec<Vec<Complex64>>> = vec![vec![]];
    let mut nk = CMat::identity(r);
    for k in 1..=r {
        nk = nk.matmul(&nil);
        let ker = kernel(&nk, rnorm.powi(k as i32))?;
        let full = ker.len() == r;
        kernels.push(ker);
        if full {
            break;
        }
    }
    let top = kernels.len() - 1;
    if kernels[top].len() != r {
        return Err(Error::RankAmbiguous { ratio: kernels[top].len() as f64 / r as f64, threshold: RANK_REL_TOL });
    }

    // Top-down: tops at level k complement ker N^{k−1} plus images of longer chains.
    let mut tops: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for k in (1..=top).rev() {
        let mut base = orthonormal(&kernels[k - 1]);
        let images: Vec<Vec<Complex64>> = tops
            .iter()
            .map(|(len, t)| {
                let mut v = t.clone();
                for _ in 0..(len - k) {
                    v = nil.matvec(&v);
                }
                v
            })
            .collect();
        extend_basis(&mut base, &images, images.len());
        let want = kernels[k].len().saturating_sub(base.len());
        for t in extend_basis(&mut base, &kernels[k], want) {
            tops.push((k, t));
        }
    }

    let mut chains = Vec::new();
    for (len, t) in tops {
        let mut xs = vec![t];
        for _ in 1..len {
            let next = nil.matvec(xs.last().unwrap());
            xs.push(next);
        }
        xs.reverse();
        let mut us: Vec<Vec<Complex64>> = xs
            .iter()
            .map(|x| {
                let z = ymat.matvec(x);
                real_matvec(&c.s, &z[..n])
            })
            .collect();
        let scale = norm2(&us[0]);
        if scale == 0.0 {
            return Err(Error::DegenerateState(0.0));
        }
        us.iter_mut().flatten().for_each(|x| *x /= scale);
        let residuals = jordan_chain_residual(&c.whitened, lambda, &us)?;
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        if worst > CHAIN_TOL {
            return Err(Error::ChainResidual { residual: worst, limit: CHAIN_TOL });
        }
        chains.push(JordanChain { lambda, vectors: us, residuals });
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()));
    Ok(chains)
}

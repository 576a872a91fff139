//! The companion matrix `D = [[K, −S], [S, 0]]` with `S = Ã^{−1/2}` and
//! `K = S B̃ S`. Its nonzero eigenvalues are the reciprocals of the
//! transmission eigenvalues.

mod jordan;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::WhitenedSystem;
use crate::densela::{dotc, norm2, nonsym_eig, spd_roots, CMat, Lu, Mat};
use crate::error::{Error, Result};
pub use jordan::{jordan_chain_residual, jordan_chains, JordanChain, CHAIN_TOL, RANK_GAP, RANK_REL_TOL};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-4;
pub const DEFAULT_MU_FLOOR: f64 = 1e-12;
/// Relative distance to the spectrum below which resolvents are refused.
pub const NEAR_SPECTRUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CompanionSystem {
    pub k: Mat,
    pub s: Mat,
    pub d: Mat,
    /// Eigenvalues of `S`, descending (these are also its singular values).
    pub s_values: Vec<f64>,
    pub whitened: Arc<WhitenedSystem>,
}

impl CompanionSystem {
    pub fn size(&self) -> usize {
        self.k.rows()
    }
}

pub fn build_companion(w: impl Into<Arc<WhitenedSystem>>) -> Result<CompanionSystem> {
    let w = w.into();
    let roots = spd_roots(&w.a).map_err(|_| Error::NotPositiveDefinite("A~".into()))?;
    let s = roots.inv_sqrt;
    let k = s.matmul(&w.b).matmul(&s).symmetrized();
    let n = k.rows();
    let z = Mat::zeros(n, n);
    let d = Mat::from_blocks(&k, &s.scale(-1.0), &s, &z);
    let s_values = roots.eig.values.iter().map(|&l| 1.0 / l.sqrt()).collect();
    Ok(CompanionSystem { k, s, d, s_values, whitened: w })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative distance in `μ` below which eigenvalues share a cluster.
    pub cluster_tol: f64,
    /// Eigenvalues of `D` with `|μ|` at or below this are discarded.
    pub mu_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { cluster_tol: DEFAULT_CLUSTER_TOL, mu_floor: DEFAULT_MU_FLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionEigenvalue {
    pub index: usize,
    pub lambda: Complex64,
    pub mu: Complex64,
    pub qep_residual: f64,
    pub cluster_id: usize,
    pub multiplicity: usize,
    /// `‖Dy − μy‖ / ‖D‖_F` of the eigenvector behind this value.
    pub eig_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    /// Indices into [`Spectrum::eigenvalues`].
    pub members: Vec<usize>,
    pub mu_centroid: Complex64,
    pub lambda_centroid: Complex64,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by `|λ|`, then `Re λ`, then `Im λ`.
    pub eigenvalues: Vec<TransmissionEigenvalue>,
    /// Unit eigenvectors of `D`, aligned with `eigenvalues`.
    pub vectors: Vec<Vec<Complex64>>,
    pub clusters: Vec<Cluster>,
    /// Every eigenvalue of `D`, including those under the floor.
    pub all_mu: Vec<Complex64>,
    pub discarded: usize,
    /// `|Σμ − tr D| / (1 + |tr D|)`.
    pub trace_defect: f64,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|e| e.lambda).collect()
    }

    /// Smallest positive real `λ` (imaginary part below `1e-8·|λ|`).
    pub fn first_real(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|e| e.lambda.re > 0.0 && e.lambda.im.abs() <= 1e-8 * e.lambda.norm())
            .map(|e| e.lambda.re)
            .min_by(f64::total_cmp)
    }

    pub fn mu_sum(&self) -> Complex64 {
        self.all_mu.iter().sum()
    }
}

/// `‖(Ã − λB̃ + λ²)u‖ / ((1 + |λ| + |λ|²)‖u‖)`.
pub fn qep_residual(w: &WhitenedSystem, lambda: Complex64, u: &[Complex64]) -> f64 {
    let lu = apply_pencil(w, lambda, u);
    norm2(&lu) / ((1.0 + lambda.norm() + lambda.norm_sqr()) * norm2(u))
}

/// `(Ã − λB̃ + λ²)u`.
pub fn apply_pencil(w: &WhitenedSystem, lambda: Complex64, u: &[Complex64]) -> Vec<Complex64> {
    let au = real_matvec(&w.a, u);
    let bu = real_matvec(&w.b, u);
    (0..u.len()).map(|i| au[i] - lambda * bu[i] + lambda * lambda * u[i]).collect()
}

pub(crate) fn real_matvec(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.rows()).map(|i| m.row(i).iter().zip(v).map(|(&a, &b)| b * a).sum()).collect()
}

pub fn extract_spectrum(c: &CompanionSystem, opts: &SolveOptions) -> Result<Spectrum> {
    if !(opts.cluster_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("cluster_tol must be positive, got {}", opts.cluster_tol)));
    }
    let n = c.size();
    let sp = nonsym_eig(&c.d, true)?;
    let vecs = sp.vectors.as_ref().expect("vectors requested");
    let res = sp.residuals.as_ref().expect("vectors requested");
    let mut keep: Vec<usize> = (0..sp.values.len()).filter(|&i| sp.values[i].norm() > opts.mu_floor).collect();
    let discarded = sp.values.len() - keep.len();
    let lam = |i: usize| 1.0 / sp.values[i];
    keep.sort_by(|&i, &j| {
        let (a, b) = (lam(i), lam(j));
        a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im))
    });

    let vectors: Vec<Vec<Complex64>> = keep.iter().map(|&i| vecs.col(i)).collect();
    let residuals: Vec<f64> = keep
        .par_iter()
        .zip(&vectors)
        .map(|(&i, y)| {
            let u0 = real_matvec(&c.s, &y[..n]);
            qep_residual(&c.whitened, lam(i), &u0)
        })
        .collect();

    let mus: Vec<Complex64> = keep.iter().map(|&i| sp.values[i]).collect();
    let labels = cluster_labels(&mus, opts.cluster_tol);
    let mut clusters: Vec<Cluster> = Vec::new();
    for (idx, &label) in labels.iter().enumerate() {
        if label == clusters.len() {
            clusters.push(Cluster { id: label, members: vec![], mu_centroid: Complex64::new(0.0, 0.0), lambda_centroid: Complex64::new(0.0, 0.0) });
        }
        clusters[label].members.push(idx);
    }
    for cl in &mut clusters {
        let r = cl.members.len() as f64;
        cl.mu_centroid = cl.members.iter().map(|&k| mus[k]).sum::<Complex64>() / r;
        cl.lambda_centroid = cl.members.iter().map(|&k| 1.0 / mus[k]).sum::<Complex64>() / r;
    }
    let eigenvalues = keep
        .iter()
        .enumerate()
        .map(|(idx, &i)| TransmissionEigenvalue {
            index: idx,
            lambda: lam(i),
            mu: sp.values[i],
            qep_residual: residuals[idx],
            cluster_id: labels[idx],
            multiplicity: clusters[labels[idx]].members.len(),
            eig_residual: res[i],
        })
        .collect();
    Ok(Spectrum { eigenvalues, vectors, clusters, all_mu: sp.values.clone(), discarded, trace_defect: sp.trace_defect })
}

/// Single-linkage grouping of `values` by relative distance; labels are
/// numbered in order of first appearance.
pub fn cluster_labels(values: &[Complex64], tol: f64) -> Vec<usize> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    // Sorting by real part bounds the pair search.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            let scale = values[i].norm().max(values[j].norm());
            if values[j].re - values[i].re > tol * scale {
                // Scales only grow by the gap, so nothing further can match
                // unless magnitudes are dominated by imaginary parts.
                if values[j].re.abs() >= values[j].im.abs() {
                    break;
                }
            }
            if (values[i] - values[j]).norm() <= tol * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut root_label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        let l = *root_label[r].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
        labels[i] = l;
    }
    labels
}

/// Largest relative distance from a conjugate to its nearest partner.
pub fn conjugate_pairing_defect(values: &[Complex64]) -> f64 {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    values
        .iter()
        .map(|v| values.iter().map(|w| (w - v.conj()).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        / scale
}

/// A recovered eigenstate in basis coordinates.
#[derive(Debug, Clone)]
pub struct Eigenstate {
    pub lambda: Complex64,
    /// Unit Euclidean norm.
    pub u: Vec<Complex64>,
    pub v: Option<Vec<Complex64>>,
    pub w: Option<Vec<Complex64>>,
    pub r_t: f64,
    pub r_v: Option<f64>,
    pub r_w: Option<f64>,
}

pub fn recover_state(c: &CompanionSystem, mu: Complex64, y: &[Complex64]) -> Result<Eigenstate> {
    recover_state_with_floor(c, mu, y, DEFAULT_MU_FLOOR)
}

pub fn recover_state_with_floor(c: &CompanionSystem, mu: Complex64, y: &[Complex64], mu_floor: f64) -> Result<Eigenstate> {
    let n = c.size();
    if y.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, actual: y.len() });
    }
    if mu.norm() <= mu_floor {
        return Err(Error::ZeroEigenvalue(mu.norm()));
    }
    let dy = real_matvec(&c.d, y);
    let ny = norm2(y);
    let defect: f64 = dy.iter().zip(y).map(|(a, b)| (a - mu * b).norm_sqr()).sum::<f64>().sqrt();
    let rel = defect / (c.d.frobenius_norm() * ny);
    if rel > 1e-6 {
        return Err(Error::NotAnEigenvector(rel));
    }
    let y1 = norm2(&y[..n]) / ny;
    if y1 < 1e-12 {
        return Err(Error::DegenerateState(y1));
    }
    let lambda = 1.0 / mu;
    let u_t = real_matvec(&c.s, &y[..n]);
    let r_t = qep_residual(&c.whitened, lambda, &u_t);
    let mut u = c.whitened.to_basis(&u_t);
    let nu = norm2(&u);
    u.iter_mut().for_each(|x| *x /= nu);

    let Some(disc) = c.whitened.discretization() else {
        return Ok(Eigenstate { lambda, u, v: None, w: None, r_t, r_v: None, r_w: None });
    };
    let src = c.whitened.source.as_ref().expect("discretization implies a source");
    let gi = c.whitened.g_inv_sqrt.as_ref().expect("discretization implies G^{-1/2}");
    let inv_l = 1.0 / lambda;
    let q = &src.c - &src.g;

    // Functionals ⟨w, ·φ_i⟩ with w = (1/λ) q (P₀ − λ) u.
    let qpu = real_matvec(&disc.qp, &u);
    let qptu = real_matvec(&disc.qp.transpose(), &u);
    let au = real_matvec(&src.a, &u);
    let qu = real_matvec(&q, &u);
    let gu = real_matvec(&src.g, &u);
    let pstu = real_matvec(&disc.p_strong.transpose(), &u);
    let psu = real_matvec(&disc.p_strong, &u);
    let w_p0: Vec<Complex64> = (0..n).map(|i| inv_l * (au[i] - lambda * qpu[i])).collect();
    let w_1: Vec<Complex64> = (0..n).map(|i| inv_l * (qptu[i] - lambda * qu[i])).collect();
    let w_v: Vec<Complex64> = (0..n).map(|i| inv_l * (pstu[i] - lambda * gu[i])).collect();

    let f_w: Vec<Complex64> = (0..n).map(|i| w_p0[i] - lambda * w_1[i] - lambda * w_v[i]).collect();
    let f_v: Vec<Complex64> = (0..n).map(|i| w_p0[i] - lambda * w_1[i] - (psu[i] - lambda * gu[i])).collect();

    let dual = |f: &[Complex64]| norm2(&real_matvec(gi, f));
    let bu = real_matvec(&src.b, &u);
    let cu = real_matvec(&src.c, &u);
    let scale = inv_l.norm() * (dual(&au) + lambda.norm() * dual(&bu) + lambda.norm_sqr() * dual(&cu));

    // L² projection of w onto the basis: G⁻¹⟨w, φ⟩.
    let g_inv_w1 = real_matvec(gi, &real_matvec(gi, &w_1));
    let w_coef = g_inv_w1;
    let v_coef: Vec<Complex64> = w_coef.iter().zip(&u).map(|(w, u)| w - u).collect();
    Ok(Eigenstate {
        lambda,
        u,
        v: Some(v_coef),
        w: Some(w_coef),
        r_t,
        r_v: Some(dual(&f_v) / scale),
        r_w: Some(dual(&f_w) / scale),
    })
}

/// `‖D(I − λD)⁻¹ − Φ(λ)‖_F / ‖Φ(λ)‖_F` where `Φ` is the block formula for the
/// resolvent of `𝒜 = [[0, I], [−Ã, B̃]]`, conjugated by `T = diag(Ã^{1/2}, I)`:
/// with `F = I − λK + λ²S² = S L_λ S`,
/// `Φ = [[F⁻¹(K − λS²), −F⁻¹S], [S F⁻¹, −λ S F⁻¹ S]]`.
pub fn resolvent_block_check(c: &CompanionSystem, lambda: Complex64, spectrum: &[Complex64]) -> Result<f64> {
    for &l in spectrum {
        let rel = (lambda - l).norm() / l.norm().max(f64::MIN_POSITIVE);
        if rel < NEAR_SPECTRUM_TOL {
            return Err(Error::NearSpectrum { re: lambda.re, im: lambda.im, rel });
        }
    }
    let n = c.size();
    let s = c.s.to_complex();
    let k = c.k.to_complex();
    let s2 = s.matmul(&s);
    let one = Complex64::new(1.0, 0.0);
    let f = &(&CMat::identity(n) - &k.scale(lambda)) + &s2.scale(lambda * lambda);
    let f_lu = Lu::new(&f)?;
    if f_lu.is_singular() {
        return Err(Error::NearSpectrum { re: lambda.re, im: lambda.im, rel: 0.0 });
    }
    let fi = f_lu.inverse()?;
    let b11 = fi.matmul(&(&k - &s2.scale(lambda)));
    let b12 = fi.matmul(&s).scale(-one);
    let b21 = s.matmul(&fi);
    let b22 = s.matmul(&fi).matmul(&s).scale(-lambda);
    let formula = CMat::from_blocks(&b11, &b12, &b21, &b22);

    let d = c.d.to_complex();
    let shifted = &CMat::identity(2 * n) - &d.scale(lambda);
    let direct = d.matmul(&Lu::new(&shifted)?.inverse()?);
    Ok((&direct - &formula).frobenius_norm() / formula.frobenius_norm())
}

/// Eigenvalues of the direct linearization `[[0, I], [−Ã, B̃]]`.
pub fn pencil_linearization_roots(w: &WhitenedSystem) -> Result<Vec<Complex64>> {
    let n = w.size();
    let a = Mat::from_blocks(&Mat::zeros(n, n), &Mat::identity(n), &w.a.scale(-1.0), &w.b);
    Ok(nonsym_eig(&a, false)?.values)
}

/// Matches two multisets after grouping each into clusters of relative
/// width `group_tol`; returns the largest relative gap between matched
/// cluster centroids, or `None` when the cluster structure differs.
pub fn match_multisets(a: &[Complex64], b: &[Complex64], group_tol: f64) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let groups = |v: &[Complex64]| -> Vec<(Complex64, usize)> {
        let labels = cluster_labels(v, group_tol);
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut acc = vec![(Complex64::new(0.0, 0.0), 0usize); k];
        for (x, &l) in v.iter().zip(&labels) {
            acc[l].0 += x;
            acc[l].1 += 1;
        }
        acc.into_iter().map(|(s, c)| (s / c as f64, c)).collect()
    };
    let ga = groups(a);
    let mut gb = groups(b);
    if ga.len() != gb.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (ca, na) in ga {
        let (pos, rel) = gb
            .iter()
            .enumerate()
            .filter(|(_, (_, nb))| *nb == na)
            .map(|(i, (cb, _))| (i, (ca - cb).norm() / ca.norm().max(f64::MIN_POSITIVE)))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        worst = worst.max(rel);
        gb.swap_remove(pos);
    }
    Some(worst)
}

/// Hermitian inner product helper re-exported for chain construction.
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    dotc(a, b)
}

#[cfg(test)]
mod tests;

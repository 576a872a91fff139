//! Galerkin matrices of the pencil `A − λB + λ²C` with
//! `A = P₀qP₀`, `B = qP₀ + P₀q + P₀`, `C = 1 + q`, `q = 1/V`, and the
//! congruence that whitens them.

pub mod basis;
pub mod quadrature;

use std::sync::Arc;

use serde::Serialize;

use crate::densela::{cholesky, spd_roots, Mat};
use crate::error::{Error, Result};
use crate::model::{check_positive, PotentialSpec, ProblemSpec};
pub use basis::{Basis1d, BasisFamily, BasisSet};
use quadrature::{check_budget, default_nodes, Rule1d};

/// Pre-symmetrization asymmetry that signals a quadrature failure.
pub const ASSEMBLY_ASYMMETRY_LIMIT: f64 = 1e-8;
/// Largest entry change (relative to the matrix max) accepted when the
/// quadrature is refined.
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Refinements attempted before giving up.
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum QuadraturePolicy {
    /// Default node count, refined until entries settle.
    #[default]
    Auto,
    /// Exactly this many nodes per dimension (per panel for grid potentials).
    Fixed(usize),
}

pub fn build_basis(problem: &ProblemSpec, per_dim: usize, family: BasisFamily) -> Result<BasisSet> {
    let factor = Basis1d::new(family, problem.order(), per_dim)?;
    let dim = problem.dim();
    let rule = Rule1d::gauss(default_nodes(per_dim, problem.order()));
    let t0 = factor.table(0, &rule.nodes);
    let g1 = Mat::weighted_gram(&t0, &rule.weights, &t0, true);
    let gram = match dim {
        1 => g1,
        _ => Mat::from_fn(per_dim * per_dim, per_dim * per_dim, |k, l| {
            g1[(k / per_dim, l / per_dim)] * g1[(k % per_dim, l % per_dim)]
        }),
    };
    Ok(BasisSet { dim, factor, per_dim, gram })
}

/// Quantities only a PDE discretization has; absent for synthetic pencils.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub problem: ProblemSpec,
    pub basis: BasisSet,
    /// Galerkin matrix of the symmetric Dirichlet form of `P₀`.
    pub dirichlet: Mat,
    /// `∫ (P₀φ_i) φ_j`, unsymmetrized.
    pub p_strong: Mat,
    /// `∫ q (P₀φ_i) φ_j`.
    pub qp: Mat,
    pub quad_nodes: usize,
    /// Largest pre-symmetrization asymmetry seen.
    pub asymmetry: f64,
    /// `‖p_strong − dirichlet‖_F / ‖dirichlet‖_F`.
    pub weak_strong_gap: f64,
}

#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub g: Mat,
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub disc: Option<Discretization>,
}

impl GalerkinSystem {
    /// A pencil given directly by its matrices.
    pub fn from_matrices(g: Mat, a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = g.rows();
        for (name, m) in [("G", &g), ("A", &a), ("B", &b), ("C", &c)] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: m.rows().max(m.cols()) });
            }
            let asym = m.asymmetry();
            if asym > ASSEMBLY_ASYMMETRY_LIMIT {
                return Err(Error::AsymmetryExceeded { name: name.into(), asymmetry: asym, limit: ASSEMBLY_ASYMMETRY_LIMIT });
            }
        }
        Ok(GalerkinSystem { g: g.symmetrized(), a: a.symmetrized(), b: b.symmetrized(), c: c.symmetrized(), disc: None })
    }

    pub fn size(&self) -> usize {
        self.g.rows()
    }
}

struct Tables {
    phi: Mat,
    p0: Mat,
    /// `(coefficient, ∂^β φ, ∂^{α−β} φ)` per operator term.
    split: Vec<(f64, Mat, Mat)>,
    weights: Vec<f64>,
    points: Vec<Vec<f64>>,
}

fn tensor_rule(rule: &Rule1d, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    match dim {
        1 => (rule.nodes.iter().map(|&x| vec![x]).collect(), rule.weights.clone()),
        _ => {
            let mut pts = Vec::with_capacity(rule.len() * rule.len());
            let mut w = Vec::with_capacity(pts.capacity());
            for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
                for (yj, wj) in rule.nodes.iter().zip(&rule.weights) {
                    pts.push(vec![*xi, *yj]);
                    w.push(wi * wj);
                }
            }
            (pts, w)
        }
    }
}

fn derivative_table(basis: &BasisSet, alpha: &[usize], rule: &Rule1d, cache: &mut Vec<Option<Mat>>) -> Mat {
    let mut get = |r: usize| -> Mat {
        if cache.len() <= r {
            cache.resize(r + 1, None);
        }
        cache[r].get_or_insert_with(|| basis.factor.table(r, &rule.nodes)).clone()
    };
    match basis.dim {
        1 => get(alpha[0]),
        _ => {
            let tx = get(alpha[0]);
            let ty = get(alpha[1]);
            let n1 = basis.per_dim;
            let nq = rule.len();
            Mat::from_fn(n1 * n1, nq * nq, |k, p| tx[(k / n1, p / nq)] * ty[(k % n1, p % nq)])
        }
    }
}

/// Splits `α` into `β ≤ α` with `|β| = |α|/2`: halves each coordinate when
/// possible, otherwise fills the first coordinate first.
fn half_split(alpha: &[usize]) -> (Vec<usize>, Vec<usize>) {
    if alpha.iter().all(|a| a % 2 == 0) {
        let beta: Vec<usize> = alpha.iter().map(|a| a / 2).collect();
        return (beta.clone(), beta);
    }
    let mut left = alpha.iter().sum::<usize>() / 2;
    let beta: Vec<usize> = alpha
        .iter()
        .map(|&a| {
            let b = a.min(left);
            left -= b;
            b
        })
        .collect();
    let rest = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
    (beta, rest)
}

fn build_tables(problem: &ProblemSpec, basis: &BasisSet, rule: &Rule1d) -> Tables {
    let dim = basis.dim;
    let mut cache = Vec::new();
    let zero = vec![0; dim];
    let phi = derivative_table(basis, &zero, rule, &mut cache);
    let mut p0 = Mat::zeros(phi.rows(), phi.cols());
    let mut split = Vec::new();
    for (alpha, a) in &problem.operator.terms {
        let k: usize = alpha.iter().sum();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let t = derivative_table(basis, alpha, rule, &mut cache);
        p0.data_mut().iter_mut().zip(t.data()).for_each(|(p, v)| *p += sign * a * v);
        let (beta, rest) = half_split(alpha);
        split.push((*a, derivative_table(basis, &beta, rule, &mut cache), derivative_table(basis, &rest, rule, &mut cache)));
    }
    let (points, weights) = tensor_rule(rule, dim);
    Tables { phi, p0, split, weights, points }
}

struct Assembled {
    g: Mat,
    a: Mat,
    b: Mat,
    c: Mat,
    dirichlet: Mat,
    p_strong: Mat,
    qp: Mat,
    asymmetry: f64,
}

fn assemble_with(problem: &ProblemSpec, basis: &BasisSet, rule: &Rule1d) -> Result<Assembled> {
    let t = build_tables(problem, basis, rule);
    check_positive(&problem.potential, t.points.iter().cloned())?;
    let q: Vec<f64> = t.points.iter().map(|x| problem.q_at(x)).collect();
    let wq: Vec<f64> = t.weights.iter().zip(&q).map(|(w, q)| w * q).collect();
    let w1q: Vec<f64> = t.weights.iter().zip(&q).map(|(w, q)| w * (1.0 + q)).collect();

    let g = Mat::weighted_gram(&t.phi, &t.weights, &t.phi, true);
    let c = Mat::weighted_gram(&t.phi, &w1q, &t.phi, true);
    let a = Mat::weighted_gram(&t.p0, &wq, &t.p0, true);
    let qp = Mat::weighted_gram(&t.p0, &wq, &t.phi, false);
    let p_strong = Mat::weighted_gram(&t.p0, &t.weights, &t.phi, false);
    let mut dirichlet = Mat::zeros(g.rows(), g.cols());
    for (coef, left, right) in &t.split {
        let part = Mat::weighted_gram(left, &t.weights, right, false);
        dirichlet = &dirichlet + &part.scale(*coef);
    }
    let mut asymmetry: f64 = 0.0;
    for (name, m) in [("dirichlet form", &dirichlet), ("strong form", &p_strong)] {
        let asym = m.asymmetry();
        asymmetry = asymmetry.max(asym);
        if asym > ASSEMBLY_ASYMMETRY_LIMIT {
            return Err(Error::AsymmetryExceeded { name: name.into(), asymmetry: asym, limit: ASSEMBLY_ASYMMETRY_LIMIT });
        }
    }
    let dirichlet = dirichlet.symmetrized();
    let b = &(&qp + &qp.transpose()) + &dirichlet;
    Ok(Assembled { g, a, b, c, dirichlet, p_strong, qp, asymmetry })
}

fn settled(old: &Assembled, new: &Assembled) -> bool {
    [(&old.g, &new.g), (&old.a, &new.a), (&old.b, &new.b), (&old.c, &new.c)]
        .iter()
        .all(|(x, y)| (*x - *y).max_abs() <= QUADRATURE_TOL * y.max_abs().max(f64::MIN_POSITIVE))
}

/// Breakpoints where the potential may have kinks.
fn panel_breaks(pot: &PotentialSpec, dim: usize) -> Vec<f64> {
    let mut breaks = vec![0.0, 1.0];
    fn collect(pot: &PotentialSpec, dim: usize, out: &mut Vec<f64>) {
        match pot {
            PotentialSpec::Grid1d { nodes, .. } if dim == 1 => out.extend(nodes.iter().copied().filter(|t| *t > 0.0 && *t < 1.0)),
            PotentialSpec::Grid2d { nx, ny, .. } => {
                for n in [nx, ny] {
                    out.extend((1..n - 1).map(|i| i as f64 / (n - 1) as f64));
                }
            }
            PotentialSpec::Affine { base, direction, .. } => {
                collect(base, dim, out);
                collect(direction, dim, out);
            }
            _ => {}
        }
    }
    collect(pot, dim, &mut breaks);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    breaks
}

/// Constant potential with the polynomial family: every integrand is a
/// polynomial of degree below the Gauss exactness limit, so refinement
/// cannot change anything.
fn exact_by_degree(problem: &ProblemSpec, basis: &BasisSet, nodes: usize) -> bool {
    basis.family() == BasisFamily::ClampedPolynomial
        && problem.potential.is_constant()
        && 2 * nodes > 2 * (basis.per_dim + 2 * basis.order())
}

pub fn assemble_system(problem: &ProblemSpec, basis: &BasisSet) -> Result<GalerkinSystem> {
    assemble_system_with(problem, basis, QuadraturePolicy::Auto)
}

pub fn assemble_system_with(problem: &ProblemSpec, basis: &BasisSet, policy: QuadraturePolicy) -> Result<GalerkinSystem> {
    if basis.order() != problem.order() || basis.dim != problem.dim() {
        return Err(Error::BasisOrderMismatch { family: basis.family().name().into(), order: problem.order() });
    }
    let dim = problem.dim();
    let breaks = panel_breaks(&problem.potential, dim);
    let panels = breaks.len() - 1;
    let (mut nodes, mut current) = match policy {
        QuadraturePolicy::Fixed(n) => {
            check_budget(n * panels, dim)?;
            let asm = assemble_with(problem, basis, &Rule1d::composite(&breaks, n))?;
            (n, asm)
        }
        QuadraturePolicy::Auto => {
            let mut n = default_nodes(basis.per_dim, problem.order());
            check_budget(n * panels, dim)?;
            let mut cur = assemble_with(problem, basis, &Rule1d::composite(&breaks, n))?;
            if !exact_by_degree(problem, basis, n) {
                let mut ok = false;
                for _ in 0..MAX_DOUBLINGS {
                    let next_n = 2 * n;
                    check_budget(next_n * panels, dim)?;
                    let next = assemble_with(problem, basis, &Rule1d::composite(&breaks, next_n))?;
                    let done = settled(&cur, &next);
                    cur = next;
                    n = next_n;
                    if done {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::QuadratureUnderflow { needed: 2 * n * panels, budget: n * panels });
                }
            }
            (n, cur)
        }
    };
    cholesky(&current.a).map_err(|_| Error::NotPositiveDefinite("A".into()))?;
    cholesky(&current.c).map_err(|_| Error::NotPositiveDefinite("C".into()))?;
    let scale = current.dirichlet.frobenius_norm().max(f64::MIN_POSITIVE);
    let weak_strong_gap = (&current.p_strong - &current.dirichlet).frobenius_norm() / scale;
    if weak_strong_gap > 1e-6 {
        log::warn!("strong and weak forms of P0 differ by {weak_strong_gap:e}");
    }
    nodes *= panels;
    let g = std::mem::replace(&mut current.g, Mat::zeros(0, 0));
    Ok(GalerkinSystem {
        g,
        a: current.a,
        b: current.b,
        c: current.c,
        disc: Some(Discretization {
            problem: problem.clone(),
            basis: basis.clone(),
            dirichlet: current.dirichlet,
            p_strong: current.p_strong,
            qp: current.qp,
            quad_nodes: nodes,
            asymmetry: current.asymmetry,
            weak_strong_gap,
        }),
    })
}

/// `Ã = Rᵀ A R`, `B̃ = Rᵀ B R` with `R = G^{−1/2} Č^{−1/2}` and
/// `Č = G^{−1/2} C G^{−1/2}`; coefficients map back as `u = R ũ`.
#[derive(Debug, Clone)]
pub struct WhitenedSystem {
    pub a: Mat,
    pub b: Mat,
    pub g_inv_sqrt: Option<Mat>,
    pub c_inv_sqrt: Option<Mat>,
    pub transform: Option<Mat>,
    pub source: Option<Arc<GalerkinSystem>>,
}

impl WhitenedSystem {
    /// A pencil already in whitened coordinates.
    pub fn synthetic(a: Mat, b: Mat) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || b.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: b.rows() });
        }
        for (name, m) in [("A~", &a), ("B~", &b)] {
            let asym = m.asymmetry();
            if asym > 1e-10 {
                return Err(Error::AsymmetryExceeded { name: name.into(), asymmetry: asym, limit: 1e-10 });
            }
        }
        cholesky(&a).map_err(|_| Error::NotPositiveDefinite("A~".into()))?;
        Ok(WhitenedSystem {
            a: a.symmetrized(),
            b: b.symmetrized(),
            g_inv_sqrt: None,
            c_inv_sqrt: None,
            transform: None,
            source: None,
        })
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }

    pub fn discretization(&self) -> Option<&Discretization> {
        self.source.as_ref().and_then(|s| s.disc.as_ref())
    }

    /// Whitened coordinates to basis coefficients.
    pub fn to_basis<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        match &self.transform {
            Some(r) => (0..r.rows()).map(|i| r.row(i).iter().zip(v).map(|(&rij, &vj)| vj * rij).sum()).collect(),
            None => v.to_vec(),
        }
    }
}

pub fn whiten(sys: impl Into<Arc<GalerkinSystem>>) -> Result<WhitenedSystem> {
    let sys = sys.into();
    let gi = spd_roots(&sys.g).map_err(|_| Error::NotPositiveDefinite("G".into()))?.inv_sqrt;
    let congruence = |r: &Mat, m: &Mat| r.transpose().matmul(m).matmul(r).symmetrized();
    let c_check = congruence(&gi, &sys.c);
    let ci = spd_roots(&c_check).map_err(|_| Error::NotPositiveDefinite("C".into()))?.inv_sqrt;
    let r = gi.matmul(&ci);
    let a = congruence(&r, &sys.a);
    let b = congruence(&r, &sys.b);
    cholesky(&a).map_err(|_| Error::NotPositiveDefinite("A~".into()))?;
    Ok(WhitenedSystem { a, b, g_inv_sqrt: Some(gi), c_inv_sqrt: Some(ci), transform: Some(r), source: Some(sys) })
}

/// Basis, assembly and whitening in one step.
pub fn whitened_problem(problem: &ProblemSpec, per_dim: usize, family: BasisFamily) -> Result<WhitenedSystem> {
    let basis = build_basis(problem, per_dim, family)?;
    whiten(assemble_system(problem, &basis)?)
}

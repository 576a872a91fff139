//! Clamped bases of `H₀ᵐ` on `[0,1]` and their tensor products on `[0,1]²`.

use serde::{Deserialize, Serialize};

use super::quadrature::Rule1d;
use crate::densela::Mat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    /// `x^m (1−x)^m · P_j^{(m,m)}(2x−1)`, unit `L²` norm.
    ClampedPolynomial,
    /// `sin(jπx) − j/(j+2)·sin((j+2)πx)`, unit `L²` norm; `m = 2` only.
    ClampedTrig,
}

impl BasisFamily {
    pub fn name(&self) -> &'static str {
        match self {
            BasisFamily::ClampedPolynomial => "clamped_polynomial",
            BasisFamily::ClampedTrig => "clamped_trig",
        }
    }
}

/// One-dimensional factor of a basis, with derivatives of every order.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis1d {
    pub family: BasisFamily,
    pub order: usize,
    pub size: usize,
    /// Coefficients of `x^m (1−x)^m`, lowest degree first.
    weight: Vec<f64>,
    norms: Vec<f64>,
}

impl Basis1d {
    pub fn new(family: BasisFamily, order: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::BasisTooSmall(size));
        }
        if family == BasisFamily::ClampedTrig && order != 2 {
            return Err(Error::BasisOrderMismatch { family: family.name().into(), order });
        }
        let mut weight = vec![0.0; 2 * order + 1];
        let mut binom = 1.0;
        for k in 0..=order {
            // x^m · C(m,k)(−x)^k
            weight[order + k] = if k % 2 == 0 { binom } else { -binom };
            binom = binom * (order - k) as f64 / (k + 1) as f64;
        }
        let mut b = Basis1d { family, order, size, weight, norms: vec![1.0; size] };
        b.norms = match family {
            BasisFamily::ClampedPolynomial => {
                // Exact for the degree-2(2m+N−1) integrand.
                let rule = Rule1d::gauss(size + 2 * order + 2);
                (0..size)
                    .map(|j| {
                        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, w)| w * b.raw(j, 0, x).powi(2)).sum();
                        s.sqrt()
                    })
                    .collect()
            }
            BasisFamily::ClampedTrig => (0..size)
                .map(|j| {
                    let k = (j + 1) as f64;
                    let c = k / (k + 2.0);
                    ((1.0 + c * c) / 2.0).sqrt()
                })
                .collect(),
        };
        Ok(b)
    }

    /// `r`-th derivative of the `j`-th function (0-based), normalized.
    pub fn eval(&self, j: usize, r: usize, x: f64) -> f64 {
        self.raw(j, r, x) / self.norms[j]
    }

    fn raw(&self, j: usize, r: usize, x: f64) -> f64 {
        match self.family {
            BasisFamily::ClampedPolynomial => {
                let a = self.order;
                let mut s = 0.0;
                let mut binom = 1.0;
                for i in 0..=r {
                    let wd = poly_derivative(&self.weight, i, x);
                    let pd = jacobi_derivative(j, a, r - i, x);
                    s += binom * wd * pd;
                    binom = binom * (r - i) as f64 / (i + 1) as f64;
                }
                s
            }
            BasisFamily::ClampedTrig => {
                let k = (j + 1) as f64;
                let c = k / (k + 2.0);
                sin_derivative(k * std::f64::consts::PI, r, x) - c * sin_derivative((k + 2.0) * std::f64::consts::PI, r, x)
            }
        }
    }

    /// `table[j][p]` = `r`-th derivative of function `j` at `nodes[p]`.
    pub fn table(&self, r: usize, nodes: &[f64]) -> Mat {
        Mat::from_fn(self.size, nodes.len(), |j, p| self.eval(j, r, nodes[p]))
    }
}

/// `d^r/dx^r sin(kx) = k^r sin(kx + rπ/2)`.
fn sin_derivative(k: f64, r: usize, x: f64) -> f64 {
    let phase = (r % 4) as f64 * std::f64::consts::FRAC_PI_2;
    k.powi(r as i32) * (k * x + phase).sin()
}

/// Horner evaluation of `Σ c_d · d!/(d−r)! · x^{d−r}`.
fn poly_derivative(coeffs: &[f64], r: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for (deg, &c) in coeffs.iter().enumerate().skip(r).rev() {
        let falling: f64 = (0..r).map(|t| (deg - t) as f64).product();
        acc = acc * x + c * falling;
    }
    acc
}

/// `P_n^{(a,a)}(t)` by the three-term recurrence.
pub fn jacobi(n: usize, a: usize, t: f64) -> f64 {
    let af = a as f64;
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = (af + 1.0) * t;
    for k in 2..=n {
        let kf = k as f64;
        let c = 2.0 * kf + 2.0 * af;
        let lhs = 2.0 * kf * (kf + 2.0 * af) * (c - 2.0);
        let p2 = ((c - 1.0) * c * (c - 2.0) * t * p1 - 2.0 * (kf + af - 1.0).powi(2) * c * p0) / lhs;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `d^r/dx^r P_n^{(a,a)}(2x−1) = (n+2a+1)_r · P_{n−r}^{(a+r,a+r)}(2x−1)`.
fn jacobi_derivative(n: usize, a: usize, r: usize, x: f64) -> f64 {
    if r > n {
        return 0.0;
    }
    let mut rising = 1.0;
    for i in 0..r {
        rising *= (n + 2 * a + 1 + i) as f64;
    }
    rising * jacobi(n - r, a + r, 2.0 * x - 1.0)
}

/// A tensor-product basis on `[0,1]ⁿ` with its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub dim: usize,
    pub factor: Basis1d,
    /// `φ_k = φ_a(x)·φ_b(y)` with `k = a·per_dim + b`.
    pub per_dim: usize,
    pub gram: Mat,
}

impl BasisSet {
    pub fn family(&self) -> BasisFamily {
        self.factor.family
    }

    pub fn order(&self) -> usize {
        self.factor.order
    }

    pub fn size(&self) -> usize {
        self.per_dim.pow(self.dim as u32)
    }

    /// Splits a flat index into per-dimension indices.
    pub fn split(&self, k: usize) -> Vec<usize> {
        match self.dim {
            1 => vec![k],
            _ => vec![k / self.per_dim, k % self.per_dim],
        }
    }

    /// `∂^α φ_k(x)`.
    pub fn eval(&self, k: usize, alpha: &[usize], x: &[f64]) -> f64 {
        self.split(k).iter().zip(alpha).zip(x).map(|((&j, &r), &t)| self.factor.eval(j, r, t)).product()
    }

    /// `∂^α` of the expansion `Σ c_k φ_k` at `x`.
    pub fn eval_expansion<T>(&self, coeffs: &[T], alpha: &[usize], x: &[f64]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    {
        coeffs.iter().enumerate().map(|(k, &c)| c * self.eval(k, alpha, x)).sum()
    }
}

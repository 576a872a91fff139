//! Gauss–Legendre rules on `[0,1]`, optionally composite over panels.

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A one-dimensional rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn gauss(n: usize) -> Self {
        Self::composite(&[0.0, 1.0], n)
    }

    /// `per_panel` Gauss nodes on each interval between consecutive breakpoints.
    pub fn composite(breaks: &[f64], per_panel: usize) -> Self {
        let (t, w) = gauss_legendre(per_panel);
        let mut nodes = Vec::with_capacity(per_panel * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let h = 0.5 * (b - a);
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(a + h * (ti + 1.0));
                weights.push(h * wi);
            }
        }
        Rule1d { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Default Gauss nodes per dimension (and per panel).
pub fn default_nodes(per_dim: usize, order: usize) -> usize {
    (2 * per_dim + 2 * order + 8).max(32)
}

/// Largest total node count per dimension the assembler accepts.
pub fn node_budget(dim: usize) -> usize {
    if dim == 1 {
        8192
    } else {
        512
    }
}

pub fn check_budget(needed: usize, dim: usize) -> Result<()> {
    let budget = node_budget(dim);
    if needed > budget {
        return Err(Error::QuadratureUnderflow { needed, budget });
    }
    Ok(())
}

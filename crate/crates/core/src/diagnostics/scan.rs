//! `t(s) = tr(B_{q_s} A_{q_s}⁻¹)` along `V_s = V₀ + s·W`.

use rayon::prelude::*;
use serde::Serialize;

use super::{trace_functional, TraceFunctional};
use crate::assembly::BasisFamily;
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, ProblemSpec};

pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub per_dim: usize,
    pub family: BasisFamily,
    /// Points with `|t| < zero_tol · max|t|` are reported as near zeros.
    pub zero_tol: f64,
    /// Also evaluate at grid midpoints to test continuity.
    pub refine: bool,
}

impl ScanOptions {
    pub fn new(per_dim: usize, family: BasisFamily) -> Self {
        ScanOptions { per_dim, family, zero_tol: DEFAULT_ZERO_TOL, refine: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub s_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub first_derivative: Vec<f64>,
    pub second_derivative: Vec<f64>,
    pub near_zeros: Vec<f64>,
    /// Grid intervals `[s_k, s_{k+1}]` across which `t` changes sign.
    pub sign_changes: Vec<[f64; 2]>,
    pub max_increment: f64,
    pub refined_max_increment: Option<f64>,
    /// `refined_max_increment / max_increment`; about ½ for a smooth `t`.
    pub refinement_ratio: Option<f64>,
    pub max_cyclicity_residual: f64,
}

fn evaluate(problem: &ProblemSpec, base: &PotentialSpec, direction: &PotentialSpec, s: &[f64], opts: &ScanOptions) -> Result<Vec<TraceFunctional>> {
    let problems: Vec<ProblemSpec> = s
        .iter()
        .map(|&si| {
            problem.with_potential(PotentialSpec::affine(base.clone(), direction.clone(), si)).map_err(|e| match e {
                Error::NonpositivePotential { value, .. } => Error::PotentialLeavesCone { s: si, value },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    problems.par_iter().map(|p| trace_functional(p, opts.per_dim, opts.family)).collect()
}

fn max_increment(t: &[f64]) -> f64 {
    t.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// Scans `problem` with its potential replaced by `base + s·direction`.
pub fn potential_scan(problem: &ProblemSpec, base: &PotentialSpec, direction: &PotentialSpec, s_grid: &[f64], opts: &ScanOptions) -> Result<ScanReport> {
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("scan grid needs at least two strictly increasing points".into()));
    }
    let coarse = evaluate(problem, base, direction, s_grid, opts)?;
    let t: Vec<f64> = coarse.iter().map(|f| f.value()).collect();
    let mut max_cyc = coarse.iter().map(|f| f.cyclicity_residual).fold(0.0, f64::max);

    let n = t.len();
    let s = s_grid;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for k in 0..n {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
        d1[k] = (t[b] - t[a]) / (s[b] - s[a]);
        if k > 0 && k + 1 < n {
            let (h1, h2) = (s[k] - s[k - 1], s[k + 1] - s[k]);
            d2[k] = 2.0 * ((t[k + 1] - t[k]) / h2 - (t[k] - t[k - 1]) / h1) / (h1 + h2);
        }
    }
    if n >= 3 {
        d2[0] = d2[1];
        d2[n - 1] = d2[n - 2];
    }

    let tmax = t.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let near_zeros = s.iter().zip(&t).filter(|(_, ti)| ti.abs() < opts.zero_tol * tmax).map(|(si, _)| *si).collect();
    let sign_changes = (0..n - 1).filter(|&k| t[k] * t[k + 1] < 0.0).map(|k| [s[k], s[k + 1]]).collect();
    let coarse_inc = max_increment(&t);

    let (refined_max_increment, refinement_ratio) = if opts.refine {
        let mids: Vec<f64> = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let fine_mid = evaluate(problem, base, direction, &mids, opts)?;
        max_cyc = fine_mid.iter().map(|f| f.cyclicity_residual).fold(max_cyc, f64::max);
        let mut fine = Vec::with_capacity(2 * n - 1);
        for k in 0..n {
            fine.push(t[k]);
            if k + 1 < n {
                fine.push(fine_mid[k].value());
            }
        }
        let inc = max_increment(&fine);
        (Some(inc), Some(if coarse_inc > 0.0 { inc / coarse_inc } else { 0.0 }))
    } else {
        (None, None)
    };

    Ok(ScanReport {
        s_values: s.to_vec(),
        t_values: t,
        first_derivative: d1,
        second_derivative: d2,
        near_zeros,
        sign_changes,
        max_increment: coarse_inc,
        refined_max_increment,
        refinement_ratio,
        max_cyclicity_residual: max_cyc,
    })
}

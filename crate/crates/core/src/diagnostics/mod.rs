//! Trace and Schatten diagnostics of the companion matrix, the numerical
//! range sampler and the trace functional with potential scans.

mod range;
mod scan;

use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{whitened_problem, BasisFamily, WhitenedSystem};
use crate::companion::{CompanionSystem, Spectrum};
use crate::densela::{nonsym_eig, singular_values, Lu, Mat};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
pub use range::{numerical_range, RangeReport, RANGE_DISCLAIMER};
pub use scan::{potential_scan, ScanOptions, ScanReport, DEFAULT_ZERO_TOL};

/// Largest power accepted by [`trace_power`].
pub const MAX_TRACE_POWER: usize = 8;
/// Cross-check tolerance between the whitened and raw trace routes.
pub const CYCLICITY_TOL: f64 = 1e-10;

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `tr(Dᵖ)` by repeated multiplication.
pub fn trace_power(c: &CompanionSystem, p: usize) -> Result<Complex64> {
    if p == 0 || p > MAX_TRACE_POWER {
        return Err(Error::InvalidArgument(format!("trace power p = {p} outside 1..={MAX_TRACE_POWER}")));
    }
    if let Some(disc) = c.whitened.discretization() {
        let ratio = disc.problem.dim() as f64 / disc.problem.order() as f64;
        if p as f64 <= ratio {
            log::warn!("p = {p} does not exceed n/m = {ratio}; D^p need not be trace class");
        }
    }
    let mut m = c.d.clone();
    for _ in 1..p {
        m = m.matmul(&c.d);
    }
    Ok(Complex64::new(m.trace(), 0.0))
}

/// Relative residuals of `tr D = tr(B̃Ã⁻¹)` and
/// `tr D² = tr(Ã^{−1/2}(B̃Ã⁻¹B̃ − 2)Ã^{−1/2})`. The right-hand sides go
/// through an LU factorization of `Ã`, independent of the square roots in `D`.
pub fn trace_identity_check(w: &WhitenedSystem, c: &CompanionSystem) -> Result<[f64; 2]> {
    let n = w.size();
    let a_inv = Lu::new(&w.a)?.inverse()?;
    let b_ainv = w.b.matmul(&a_inv);
    let rhs1 = b_ainv.trace();
    let tr_d = c.d.trace();
    let scale1 = (0..n).map(|i| b_ainv[(i, i)].abs()).sum::<f64>().max(tr_d.abs());
    let r1 = relative(tr_d, rhs1, scale1);

    // tr(S M S) = tr(M Ã⁻¹) with M = B̃Ã⁻¹B̃ − 2I.
    let m = b_ainv.matmul(&w.b).add_scaled_identity(-2.0);
    let rhs2 = m.matmul(&a_inv).trace();
    let d = &c.d;
    let tr_d2: f64 = (0..2 * n).map(|i| (0..2 * n).map(|j| d[(i, j)] * d[(j, i)]).sum::<f64>()).sum();
    let scale2 = b_ainv.matmul(&b_ainv).trace().abs() + 2.0 * a_inv.trace().abs();
    Ok([r1, relative(tr_d2, rhs2, scale2)])
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchattenProfile {
    /// Singular values of `S = Ã^{−1/2}`, descending.
    pub s_values: Vec<f64>,
    pub decay_exponent: f64,
    /// `−m/n` when the system comes from a PDE.
    pub decay_theory: Option<f64>,
}

/// Fits `log s_j` against `log j` over the middle third of indices.
pub fn schatten_profile(c: &CompanionSystem) -> Result<SchattenProfile> {
    let s = &c.s_values;
    let n = s.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("decay fit needs at least 3 singular values, got {n}")));
    }
    let (lo, hi) = (n / 3, (2 * n).div_ceil(3).max(n / 3 + 2).min(n));
    let xs: Vec<f64> = (lo..hi).map(|j| ((j + 1) as f64).ln()).collect();
    let ys: Vec<f64> = (lo..hi).map(|j| s[j].ln()).collect();
    let decay_theory = c.whitened.discretization().map(|d| -(d.problem.order() as f64) / d.problem.dim() as f64);
    Ok(SchattenProfile { s_values: s.clone(), decay_exponent: least_squares_slope(&xs, &ys), decay_theory })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub p: usize,
    pub trace_re: f64,
    pub trace_im: f64,
    pub schatten_1: f64,
    pub schatten_2: f64,
    /// `‖D‖_p` at the smallest admissible integer power, when known.
    pub schatten_p_min: Option<f64>,
    pub spectral_radius: f64,
    pub decay_exponent: f64,
    pub decay_theory: Option<f64>,
    pub identity_residuals: [f64; 2],
    pub s_values: Vec<f64>,
    /// `|Σμᵖ − tr Dᵖ| / (1 + |tr Dᵖ|)`.
    pub power_sum_residual: f64,
}

/// Everything the existence criterion reports at power `p`.
pub fn trace_report(c: &CompanionSystem, p: usize, spectrum: Option<&Spectrum>) -> Result<TraceReport> {
    let trace = trace_power(c, p)?;
    let sigma = singular_values(&c.d)?;
    let schatten = |q: f64| sigma.iter().map(|s| s.powf(q)).sum::<f64>().powf(1.0 / q);
    let p_min = c.whitened.discretization().map(|d| {
        let ratio = d.problem.dim() as f64 / d.problem.order() as f64;
        (ratio.floor() + 1.0).max(1.0)
    });
    let mus: Vec<Complex64> = match spectrum {
        Some(sp) => sp.all_mu.clone(),
        None => nonsym_eig(&c.d, false)?.values,
    };
    let spectral_radius = mus.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let power_sum: Complex64 = mus.iter().map(|m| m.powu(p as u32)).sum();
    let profile = schatten_profile(c)?;
    Ok(TraceReport {
        p,
        trace_re: trace.re,
        trace_im: trace.im,
        schatten_1: schatten(1.0),
        schatten_2: schatten(2.0),
        schatten_p_min: p_min.map(schatten),
        spectral_radius,
        decay_exponent: profile.decay_exponent,
        decay_theory: profile.decay_theory,
        identity_residuals: trace_identity_check(&c.whitened, c)?,
        s_values: profile.s_values,
        power_sum_residual: (power_sum - trace).norm() / (1.0 + trace.norm()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceFunctional {
    /// `tr(B̃Ã⁻¹)` in whitened coordinates.
    pub whitened: f64,
    /// `tr(BA⁻¹)` from the unwhitened matrices.
    pub raw: f64,
    pub cyclicity_residual: f64,
}

impl TraceFunctional {
    pub fn value(&self) -> f64 {
        self.whitened
    }
}

/// `tr(B̃Ã⁻¹)`, cross-checked against the raw route when the system has one.
pub fn trace_functional_of(w: &WhitenedSystem) -> Result<TraceFunctional> {
    let wt = Lu::new(&w.a)?.solve_mat(&w.b)?.trace();
    let raw = match &w.source {
        Some(src) => Lu::new(&src.a)?.solve_mat(&src.b)?.trace(),
        None => wt,
    };
    let cyclicity_residual = relative(wt, raw, wt.abs());
    if cyclicity_residual > CYCLICITY_TOL {
        log::warn!("trace routes disagree: whitened {wt}, raw {raw} (relative {cyclicity_residual:e})");
    }
    Ok(TraceFunctional { whitened: wt, raw, cyclicity_residual })
}

pub fn trace_functional(problem: &ProblemSpec, per_dim: usize, family: BasisFamily) -> Result<TraceFunctional> {
    trace_functional_of(&whitened_problem(problem, per_dim, family)?)
}

/// Relative defect of `Σσ_j(D)² = ‖D‖_F²`.
pub fn hilbert_schmidt_defect(c: &CompanionSystem) -> Result<f64> {
    let sigma = singular_values(&c.d)?;
    let hs: f64 = sigma.iter().map(|s| s * s).sum();
    let f2 = c.d.frobenius_norm().powi(2);
    Ok((hs - f2).abs() / f2)
}

/// `Ã = diag(values)` with `B̃ = 0`, for decay-fit checks.
pub fn diagonal_pencil(values: &[f64]) -> Result<WhitenedSystem> {
    let n = values.len();
    WhitenedSystem::synthetic(Mat::from_diag(values), Mat::zeros(n, n))
}

#[cfg(test)]
mod tests;

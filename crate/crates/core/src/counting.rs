//! Zero counting for `f(λ) = det(I − λK + λ²Ã⁻¹)`: argument principle on
//! circles, Jensen's bound and the growth of `N(R)`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::companion::CompanionSystem;
use crate::densela::{complex_det, wrap_angle, CMat, LogDet};
use crate::diagnostics::least_squares_slope;
use crate::error::{Error, Result};

pub const DEFAULT_CONTOUR_POINTS: usize = 512;
pub const MIN_CONTOUR_POINTS: usize = 256;
pub const MAX_CONTOUR_DOUBLINGS: usize = 4;
/// `|f|` below this on a contour makes the count unreliable.
pub const F_FLOOR: f64 = 1e-10;
/// Largest phase step accepted between neighbouring contour points.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;
/// Radii closer than this (relative) to some `|λ_j|` are nudged outward.
pub const RADIUS_CLEARANCE: f64 = 0.01;
/// Theoretical growth ceiling: `N(R) = O(R²)`.
pub const GROWTH_CEILING: f64 = 2.0;

/// `f(λ)` in log form; `f(0) = 1` exactly.
pub fn fredholm_det(c: &CompanionSystem, lambda: Complex64) -> LogDet {
    if lambda == Complex64::new(0.0, 0.0) {
        return LogDet::ONE;
    }
    let n = c.size();
    let s2 = c.s.matmul(&c.s);
    let m = CMat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - lambda * c.k[(i, j)] + lambda * lambda * s2[(i, j)]
    });
    complex_det(&m)
}

fn contour(c: &CompanionSystem, radius: f64, points: usize) -> Vec<LogDet> {
    let s2 = c.s.matmul(&c.s);
    let n = c.size();
    (0..points)
        .into_par_iter()
        .map(|k| {
            let lambda = Complex64::from_polar(radius, 2.0 * PI * k as f64 / points as f64);
            let m = CMat::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - lambda * c.k[(i, j)] + lambda * lambda * s2[(i, j)]
            });
            complex_det(&m)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub radius: f64,
    pub count: usize,
    /// Contour points actually used after doubling.
    pub points: usize,
    pub max_log_f: f64,
    pub min_log_f: f64,
}

pub fn winding_count(c: &CompanionSystem, radius: f64, points: usize) -> Result<Winding> {
    if points < MIN_CONTOUR_POINTS {
        return Err(Error::InvalidArgument(format!("contour needs at least {MIN_CONTOUR_POINTS} points, got {points}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut k = points;
    for _ in 0..=MAX_CONTOUR_DOUBLINGS {
        let vals = contour(c, radius, k);
        let min_log_f = vals.iter().map(|v| v.log_abs).fold(f64::INFINITY, f64::min);
        let max_log_f = vals.iter().map(|v| v.log_abs).fold(f64::NEG_INFINITY, f64::max);
        if !(min_log_f > F_FLOOR.ln()) {
            return Err(Error::ContourNearZero { radius });
        }
        let mut total = 0.0;
        let mut resolved = true;
        for i in 0..k {
            let step = wrap_angle(vals[(i + 1) % k].arg - vals[i].arg);
            if step.abs() >= MAX_PHASE_STEP {
                resolved = false;
                break;
            }
            total += step;
        }
        if resolved {
            let turns = (total / (2.0 * PI)).round();
            return Ok(Winding { radius, count: turns.max(0.0) as usize, points: k, max_log_f, min_log_f });
        }
        k *= 2;
    }
    Err(Error::PhaseUnresolved { radius, points: k / 2 })
}

/// `(1/ln 2)·max_{|λ|=R} log|f(λ)|`, which bounds `N(R/2)` since `log|f(0)| = 0`.
pub fn jensen_bound(c: &CompanionSystem, radius: f64, points: usize) -> Result<f64> {
    if points < MIN_CONTOUR_POINTS {
        return Err(Error::InvalidArgument(format!("contour needs at least {MIN_CONTOUR_POINTS} points, got {points}")));
    }
    let max = contour(c, radius, points).iter().map(|v| v.log_abs).fold(f64::NEG_INFINITY, f64::max);
    Ok(max / LN_2)
}

/// Moves `radius` outward in 1% steps until it clears every `|λ_j|` by
/// [`RADIUS_CLEARANCE`]; returns the new radius and whether it moved.
pub fn nudge_radius(radius: f64, lambdas: &[Complex64]) -> (f64, bool) {
    let clear = |r: f64| lambdas.iter().all(|l| (l.norm() - r).abs() / r > RADIUS_CLEARANCE);
    let mut r = radius;
    let mut moved = false;
    for _ in 0..1000 {
        if clear(r) {
            break;
        }
        r *= 1.0 + RADIUS_CLEARANCE;
        moved = true;
    }
    (r, moved)
}

#[derive(Debug, Clone, Serialize)]
pub struct CountRow {
    pub radius: f64,
    pub winding: usize,
    /// Bound on `N(R/2)`.
    pub jensen_bound: f64,
    pub max_log_f: f64,
    /// `#{λ computed : |λ| < R}`, when a spectrum was supplied.
    pub spectrum_count: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub rows: Vec<CountRow>,
    pub points: usize,
    /// Radii entering the fit: `3 ≤ N(R) ≤ size/2`.
    pub fit_radii: Vec<f64>,
    pub slope: f64,
    pub ceiling: f64,
    /// `max log|f| / R²` at the largest radius.
    pub growth_constant: f64,
}

pub fn count_row(c: &CompanionSystem, radius: f64, points: usize, lambdas: Option<&[Complex64]>) -> Result<CountRow> {
    let w = winding_count(c, radius, points)?;
    Ok(CountRow {
        radius,
        winding: w.count,
        jensen_bound: jensen_bound(c, radius, points)?,
        max_log_f: w.max_log_f,
        spectrum_count: lambdas.map(|ls| ls.iter().filter(|l| l.norm() < radius).count()),
    })
}

pub fn growth_profile(c: &CompanionSystem, radii: &[f64], points: usize, lambdas: Option<&[Complex64]>) -> Result<CountReport> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be strictly ascending".into()));
    }
    let rows = radii.iter().map(|&r| count_row(c, r, points, lambdas)).collect::<Result<Vec<_>>>()?;
    let cap = c.size() / 2;
    let fit: Vec<&CountRow> = rows.iter().filter(|r| r.winding >= 3 && r.winding <= cap).collect();
    if fit.len() < 3 {
        return Err(Error::InsufficientResolvedRange(fit.len()));
    }
    let xs: Vec<f64> = fit.iter().map(|r| r.radius.ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|r| (r.winding as f64).ln()).collect();
    let last = rows.last().expect("at least three rows");
    Ok(CountReport {
        fit_radii: fit.iter().map(|r| r.radius).collect(),
        slope: least_squares_slope(&xs, &ys),
        ceiling: GROWTH_CEILING,
        growth_constant: last.max_log_f / (last.radius * last.radius),
        rows,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{whitened_problem, BasisFamily};
    use crate::companion::{build_companion, extract_spectrum, SolveOptions};
    use crate::model::{validate_problem, DomainSpec, OperatorSpec, PotentialSpec};
    use crate::synthetic;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn helmholtz(n: usize, v: f64) -> CompanionSystem {
        let op = OperatorSpec::laplacian(1).unwrap();
        let p = validate_problem(&op, &DomainSpec::Interval, &PotentialSpec::Constant(v)).unwrap();
        build_companion(whitened_problem(&p, n, BasisFamily::ClampedPolynomial).unwrap()).unwrap()
    }

    #[test]
    fn toy_determinant_factors() {
        let cs = build_companion(synthetic::toy()).unwrap();
        assert_eq!(fredholm_det(&cs, c(0.0, 0.0)), LogDet::ONE);
        for l in [c(0.3, 0.0), c(2.0, 1.0), c(-3.0, 0.5), c(7.0, -2.0)] {
            let exact = (1.0 - l) * (1.0 - l / 4.0);
            let got = fredholm_det(&cs, l).value();
            assert!((got - exact).norm() < 1e-12 * (1.0 + exact.norm()), "{l}: {got} vs {exact}");
        }
        assert!(fredholm_det(&cs, c(1.0, 0.0)).is_zero() || fredholm_det(&cs, c(1.0, 0.0)).value().norm() < 1e-14);
    }

    #[test]
    fn toy_winding() {
        let cs = build_companion(synthetic::toy()).unwrap();
        assert_eq!(winding_count(&cs, 2.0, 512).unwrap().count, 1);
        assert_eq!(winding_count(&cs, 5.0, 512).unwrap().count, 2);
        assert_eq!(winding_count(&cs, 0.5, 512).unwrap().count, 0);
        assert!(matches!(winding_count(&cs, 1.0, 512), Err(Error::ContourNearZero { .. })));
        assert!(matches!(winding_count(&cs, 2.0, 100), Err(Error::InvalidArgument(_))));
        let jb = jensen_bound(&cs, 2.0, 512).unwrap();
        assert!(jb >= winding_count(&cs, 1.1, 512).unwrap().count as f64);
        // max over |λ|=2 of |(1−λ)(1−λ/4)| is attained at λ = −2.
        assert!((jb - (4.5f64).ln() / LN_2).abs() < 1e-9);
    }

    #[test]
    fn small_radius_bound_vanishes() {
        let cs = build_companion(synthetic::toy()).unwrap();
        let jb = jensen_bound(&cs, 1e-6, 256).unwrap();
        assert!(jb.abs() < 1e-5);
    }

    #[test]
    fn zeros_match_spectrum() {
        let cs = helmholtz(24, 3.0);
        let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
        for e in sp.eigenvalues.iter().take(6) {
            let f = fredholm_det(&cs, e.lambda);
            let scale = fredholm_det(&cs, e.lambda * 1.01);
            assert!(f.log_abs < scale.log_abs - 10.0, "{}: {} vs {}", e.lambda, f.log_abs, scale.log_abs);
        }
        let lambdas = sp.lambdas();
        for r0 in [30.0, 60.0, 150.0, 400.0, 900.0] {
            let (r, _) = nudge_radius(r0, &lambdas);
            let row = count_row(&cs, r, DEFAULT_CONTOUR_POINTS, Some(&lambdas)).unwrap();
            assert_eq!(Some(row.winding), row.spectrum_count, "R = {r}");
            let half = winding_count(&cs, nudge_radius(r / 2.0, &lambdas).0, DEFAULT_CONTOUR_POINTS).unwrap();
            assert!(row.jensen_bound >= half.count as f64);
        }
    }

    #[test]
    fn power_law_growth() {
        let cs = build_companion(synthetic::power_law(40)).unwrap();
        // Double zeros at j²: N(R) = 2·⌊√R⌋ away from the squares.
        let radii: Vec<f64> = [10.5, 30.5, 56.5, 110.5, 200.5, 380.5].to_vec();
        let rep = growth_profile(&cs, &radii, DEFAULT_CONTOUR_POINTS, None).unwrap();
        for row in &rep.rows {
            assert_eq!(row.winding, 2 * row.radius.sqrt().floor() as usize);
        }
        let xs: Vec<f64> = rep.fit_radii.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = rep.fit_radii.iter().map(|r| (2.0 * r.sqrt().floor()).ln()).collect();
        assert!((rep.slope - least_squares_slope(&xs, &ys)).abs() < 0.1);
        assert!(rep.slope < GROWTH_CEILING);
    }

    #[test]
    fn too_few_resolved_radii() {
        let cs = build_companion(synthetic::toy()).unwrap();
        assert!(matches!(growth_profile(&cs, &[2.0, 5.0], 256, None), Err(Error::InsufficientResolvedRange(_))));
    }

    #[test]
    fn nudging() {
        let ls = [c(10.0, 0.0)];
        assert_eq!(nudge_radius(5.0, &ls), (5.0, false));
        let (r, moved) = nudge_radius(10.0, &ls);
        assert!(moved && (r - 10.0) / r > RADIUS_CLEARANCE);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn conjugate_symmetry(seed in 0u64..1000, re in -5.0f64..5.0, im in -5.0f64..5.0) {
            let cs = build_companion(synthetic::random(6, seed).unwrap()).unwrap();
            let a = fredholm_det(&cs, c(re, im)).value();
            let b = fredholm_det(&cs, c(re, -im)).value();
            prop_assert!((a - b.conj()).norm() <= 1e-10 * a.norm().max(1e-300));
        }
    }
}

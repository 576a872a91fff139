//! Sampling the set `{⟨Ku₀,u₀⟩ − 2i·Im⟨Sv₀,u₀⟩ : ‖(u₀,v₀)‖ = 1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::companion::{real_matvec, CompanionSystem};
use crate::densela::dotc;
use crate::error::{Error, Result};

pub const MIN_RANGE_SAMPLES: usize = 100;

pub const RANGE_DISCLAIMER: &str =
    "random samples under-approximate the set: a violated angle condition is conclusive, a satisfied one is evidence only";

#[derive(Debug, Clone, Serialize)]
pub struct RangeReport {
    /// Number of draws; each contributes `z` and its conjugate.
    pub sample_count: usize,
    pub seed: u64,
    #[serde(skip)]
    pub samples: Vec<Complex64>,
    /// Largest `|arg z|` over nonzero samples, measured from the positive real axis.
    pub max_abs_arg: f64,
    /// Opening of the smallest conjugation-symmetric sector about the
    /// positive real axis holding every sample: `2·max_abs_arg`.
    pub sector_opening: f64,
    pub min_re: f64,
    pub p: usize,
    pub pi_over_p: f64,
    pub angle_condition_holds: bool,
    pub disclaimer: &'static str,
}

pub fn numerical_range(c: &CompanionSystem, draws: usize, seed: u64, p: usize) -> Result<RangeReport> {
    if draws < MIN_RANGE_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_RANGE_SAMPLES} samples, got {draws}")));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let n = c.size();
    let z: Vec<Complex64> = (0..draws)
        .into_par_iter()
        .map(|k| {
            // One stream per draw keeps the result independent of scheduling.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
            let mut x: Vec<Complex64> = (0..2 * n).map(|_| Complex64::new(g(), g())).collect();
            let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            let (u, v) = x.split_at(n);
            let ku = real_matvec(&c.k, u);
            let sv = real_matvec(&c.s, v);
            // ⟨a, b⟩ = bᴴa
            let quad = dotc(u, &ku).re;
            let cross = dotc(u, &sv).im;
            Complex64::new(quad, -2.0 * cross)
        })
        .collect();
    let mut samples = Vec::with_capacity(2 * draws);
    for s in z {
        samples.push(s);
        samples.push(s.conj());
    }
    let max_abs_arg = samples.iter().filter(|s| s.norm() > 0.0).map(|s| s.arg().abs()).fold(0.0, f64::max);
    let min_re = samples.iter().map(|s| s.re).fold(f64::INFINITY, f64::min);
    let pi_over_p = PI / p as f64;
    let sector_opening = 2.0 * max_abs_arg;
    Ok(RangeReport {
        sample_count: draws,
        seed,
        samples,
        max_abs_arg,
        sector_opening,
        min_re,
        p,
        pi_over_p,
        angle_condition_holds: sector_opening <= pi_over_p * (1.0 + 1e-12),
        disclaimer: RANGE_DISCLAIMER,
    })
}

//! Small pencils given directly in whitened coordinates, for tests and the
//! self-check suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::assembly::WhitenedSystem;
use crate::densela::Mat;
use crate::error::Result;

/// `Ã = [4]`, `B̃ = [5]`: transmission eigenvalues `{1, 4}`.
pub fn toy() -> WhitenedSystem {
    WhitenedSystem::synthetic(Mat::from_diag(&[4.0]), Mat::from_diag(&[5.0])).expect("toy system is valid")
}

/// `Ã = I`, `B̃ = 2I`, so `L_λ = (1 − λ)² I` and every vector chains at `λ = 1`.
pub fn defective(n: usize) -> WhitenedSystem {
    WhitenedSystem::synthetic(Mat::identity(n), Mat::identity(n).scale(2.0)).expect("defective system is valid")
}

/// `Ã = diag(j⁴)`, `B̃ = 2·diag(j²)`, `j = 1..=n`. Each factor
/// `(1 − λ/j²)²` of `f` puts a double root at `λ = j²`.
pub fn power_law(n: usize) -> WhitenedSystem {
    let a: Vec<f64> = (1..=n).map(|j| (j as f64).powi(4)).collect();
    let b: Vec<f64> = (1..=n).map(|j| 2.0 * (j as f64).powi(2)).collect();
    WhitenedSystem::synthetic(Mat::from_diag(&a), Mat::from_diag(&b)).expect("power-law system is valid")
}

/// Random SPD `Ã = MMᵀ/n + I` and symmetric `B̃`, Gaussian entries.
pub fn random(n: usize, seed: u64) -> Result<WhitenedSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r, c| Mat::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let m = draw(n, n);
    let a = m.matmul(&m.transpose()).scale(1.0 / n as f64).add_scaled_identity(1.0).symmetrized();
    let b = draw(n, n).symmetrized();
    WhitenedSystem::synthetic(a, b)
}

/// Random SPD `Ã` as above with positive semidefinite `B̃ = HHᵀ/n`.
pub fn random_psd(n: usize, seed: u64) -> Result<WhitenedSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r, c| Mat::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let m = draw(n, n);
    let h = draw(n, n);
    let a = m.matmul(&m.transpose()).scale(1.0 / n as f64).add_scaled_identity(1.0).symmetrized();
    let b = h.matmul(&h.transpose()).scale(1.0 / n as f64).symmetrized();
    WhitenedSystem::synthetic(a, b)
}

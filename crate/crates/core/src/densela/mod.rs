//! Self-contained dense linear algebra.

mod lu;
mod matrix;
mod nonsym;
mod svd;
mod symeig;

pub use lu::{complex_det, inverse, wrap_angle, LogDet, Lu};
pub use matrix::{dotc, norm2, CMat, Mat, Matrix, Scalar};
pub use nonsym::{nonsym_eig, ComplexSpectrum, QR_SWEEPS_PER_EIGENVALUE};
pub use svd::{jacobi_svd, singular_values, Svd};
pub use symeig::{cholesky, spd_inv_sqrt, spd_roots, spd_sqrt, sym_eig, SpdRoots, SymEig, SPD_RATIO_FLOOR, SYMMETRY_TOL};

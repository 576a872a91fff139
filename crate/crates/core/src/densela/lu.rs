//! Partially pivoted LU factorization, solves and log-scale determinants.

use num_complex::Complex64;

use super::matrix::{CMat, Matrix, Scalar};
use crate::error::{Error, Result};

/// A determinant carried as `exp(log_abs + i·arg)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    /// `-inf` for a singular matrix.
    pub log_abs: f64,
    /// Principal argument in `(-π, π]`.
    pub arg: f64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet { log_abs: 0.0, arg: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// Complex value; overflows to infinity (or underflows to zero) when not
    /// representable.
    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }

    pub fn mul(&self, other: &LogDet) -> LogDet {
        if self.is_zero() || other.is_zero() {
            return LogDet { log_abs: f64::NEG_INFINITY, arg: 0.0 };
        }
        LogDet { log_abs: self.log_abs + other.log_abs, arg: wrap_angle(self.arg + other.arg) }
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), actual: m.cols() });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs2();
            for i in k + 1..n {
                let v = lu[(i, k)].abs2();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            let pivot = lu[(k, k)];
            let (top, rest) = lu.data_mut().split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            for row in rest.chunks_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        row[j] = row[j] - l * pivot_row[j];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, swaps, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn log_det(&self) -> LogDet {
        if self.singular {
            return LogDet { log_abs: f64::NEG_INFINITY, arg: 0.0 };
        }
        let mut log_abs = 0.0;
        let mut arg = if self.swaps % 2 == 1 { std::f64::consts::PI } else { 0.0 };
        for k in 0..self.lu.rows() {
            let z = self.lu[(k, k)].to_c64();
            log_abs += z.norm().ln();
            arg += z.arg();
        }
        LogDet { log_abs, arg: wrap_angle(arg) }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
        }
        if self.singular {
            return Err(Error::Singular);
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s = s - row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s = s - row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        Ok(x)
    }

    /// Solves `M X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_col(j, &self.solve(&b.col(j))?);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve_mat(&Matrix::identity(self.lu.rows()))
    }
}

/// Determinant of a complex matrix in log-magnitude/argument form; a
/// singular input gives the `-inf` sentinel.
pub fn complex_det(m: &CMat) -> LogDet {
    if m.rows() == 0 {
        return LogDet::ONE;
    }
    match Lu::new(m) {
        Ok(lu) => lu.log_det(),
        Err(_) => LogDet { log_abs: f64::NEG_INFINITY, arg: 0.0 },
    }
}

pub fn inverse<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::new(m)?.inverse()
}

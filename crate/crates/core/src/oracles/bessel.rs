//! Bessel functions of the first kind for integer order.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 60;
pub const MAX_ARG: f64 = 200.0;
/// Below this the power series is used; above, Miller's recurrence.
pub const SERIES_LIMIT: f64 = 12.0;

fn check(l: usize, x: f64) -> Result<()> {
    if l > MAX_ORDER + 1 || !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::RangeExceeded(format!("J_{l}({x}) outside l <= {MAX_ORDER}, 0 <= x <= {MAX_ARG}")));
    }
    Ok(())
}

fn series(l: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=l {
        term *= h / i as f64;
    }
    let mut sum = term;
    let h2 = h * h;
    for k in 1..200 {
        term *= -h2 / (k as f64 * (k + l) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `J_0(x), …, J_{top}(x)` by backward recurrence normalized with
/// `J₀ + 2ΣJ_{2k} = 1`.
fn miller(top: usize, x: f64) -> Vec<f64> {
    let n = top.max(x as usize);
    let start = 2 * ((n + (160.0 * n as f64).sqrt() as usize + 10) / 2);
    let mut out = vec![0.0; top + 1];
    let (mut jp, mut j) = (0.0, 1e-30);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        // j now holds J_{k−1} up to scale.
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
        if k - 1 <= top {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// `J_l(x)` for `l ≤ 60`, `0 ≤ x ≤ 200`.
pub fn bessel_j(l: usize, x: f64) -> Result<f64> {
    if l > MAX_ORDER {
        return Err(Error::RangeExceeded(format!("order {l} exceeds {MAX_ORDER}")));
    }
    check(l, x)?;
    Ok(bessel_unchecked(l, x))
}

fn bessel_unchecked(l: usize, x: f64) -> f64 {
    if x < SERIES_LIMIT {
        series(l, x)
    } else {
        miller(l, x)[l]
    }
}

/// `J_0(x), …, J_top(x)`; `top` may reach `MAX_ORDER + 1` for derivatives.
pub fn bessel_j_all(top: usize, x: f64) -> Result<Vec<f64>> {
    check(top, x)?;
    Ok(if x < SERIES_LIMIT { (0..=top).map(|l| series(l, x)).collect() } else { miller(top, x) })
}

/// `J_l′(x) = (J_{l−1}(x) − J_{l+1}(x))/2`, with `J₀′ = −J₁`.
pub fn bessel_j_prime(l: usize, x: f64) -> Result<f64> {
    if l > MAX_ORDER {
        return Err(Error::RangeExceeded(format!("order {l} exceeds {MAX_ORDER}")));
    }
    let j = bessel_j_all(l + 1, x)?;
    Ok(derivative_from(&j, l))
}

pub(crate) fn derivative_from(j: &[f64], l: usize) -> f64 {
    if l == 0 {
        -j[1]
    } else {
        0.5 * (j[l - 1] - j[l + 1])
    }
}

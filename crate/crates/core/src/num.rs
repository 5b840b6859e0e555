//! Scalar helpers that `core` does not provide without `std`.

pub use libm::{atan2, cos, exp, log, sin, sqrt, tan};

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Integer power by repeated squaring (exact for small exponents).
pub fn powi(x: f64, n: i32) -> f64 {
    let mut e = n.unsigned_abs();
    let mut base = x;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

/// Largest absolute value in a slice, 0 for an empty slice. NaN wins so that
/// a broken residual can never pass a `< tol` test.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| max_nan(m, abs(*v)))
}

/// `max` that propagates NaN.
#[inline]
pub fn max_nan(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if b > a {
        b
    } else {
        a
    }
}

pub const PI: f64 = core::f64::consts::PI;

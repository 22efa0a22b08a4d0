//! Scalar math helpers shared across the engine.
//!
//! All transcendentals go through [`libm`] so the numeric path is identical on
//! `std` and `no_std` builds (and across platforms that differ in their libm).

/// Natural logarithm of 10, used to convert natural logs to base-10 logs.
pub const LN_10: f64 = core::f64::consts::LN_10;

/// Logistic sigmoid `1 / (1 + e^-x)`, computed in a form that avoids overflow
/// for large negative inputs.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Derivative of the sigmoid expressed through its value: `s * (1 - s)`.
#[inline]
pub fn sigmoid_deriv_from_value(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Base-10 logarithm via the natural log so every log in the engine shares one
/// libm code path.
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log(x) / LN_10
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `x^y` for the few places that need a real power (noise generation).
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

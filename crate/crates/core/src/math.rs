//! Scalar helpers on top of `libm`.

pub use libm::{cos, exp, expm1, fabs, fmod, log, log1p, pow, sin, sqrt, tanh};

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + log1p(exp(-x))
    } else {
        log1p(exp(x))
    }
}

/// Derivative of [`softplus`].
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for `y > 0`.
#[inline]
pub fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + log(-expm1(-y))
    } else {
        log(expm1(y))
    }
}

/// Log density of `N(mean, sd²)` at `y`.
#[inline]
pub fn gaussian_log_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    -0.5 * LN_2PI - log(sd) - 0.5 * z * z
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if fabs(self.sum) >= fabs(value) {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

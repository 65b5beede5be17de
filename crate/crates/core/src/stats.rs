//! Point estimates with first-order statistical errors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    /// Distance from `target` in units of the standard error. Zero when both
    /// the deviation and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = (self.value - target).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.stderr
        }
    }
}

/// Binomial standard error of a fraction `k / n`.
pub fn binomial_stderr(k: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return f64::NAN;
    }
    let p = k / n;
    (p * (1.0 - p) / n).sqrt()
}

/// Ratio `c / (2 s)` of Poisson-distributed counts with its first-order
/// variance `c / (4 s²) + c² / (4 s³)`.
pub(crate) fn normalized_rate(c: f64, s: f64) -> (f64, f64) {
    let r = c / (2.0 * s);
    let var = c / (4.0 * s * s) + c * c / (4.0 * s * s * s);
    (r, var)
}

//! Degree moments: closed-form truncated Pareto and empirical.

use serde::{Deserialize, Serialize};

/// Anything that can report E[d^s].
pub trait MomentProvider {
    fn moment(&self, s: f64) -> f64;
}

/// Continuous density f(d) = C d^{-alpha} on [d_min, d_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPareto {
    pub alpha: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl TruncatedPareto {
    pub fn new(alpha: f64, d_min: f64, d_max: f64) -> Self {
        TruncatedPareto { alpha, d_min, d_max }
    }

    fn degenerate(&self) -> bool {
        self.d_max <= self.d_min
    }

    /// ∫ d^p over the support, with the p = -1 branch taken exactly.
    fn power_integral(&self, p: f64) -> f64 {
        let e = p + 1.0;
        if e.abs() < 1e-12 {
            (self.d_max / self.d_min).ln()
        } else {
            (self.d_max.powf(e) - self.d_min.powf(e)) / e
        }
    }

    pub fn cdf(&self, d: f64) -> f64 {
        if self.degenerate() {
            return if d >= self.d_min { 1.0 } else { 0.0 };
        }
        if d <= self.d_min {
            return 0.0;
        }
        if d >= self.d_max {
            return 1.0;
        }
        let partial = TruncatedPareto { d_max: d, ..*self };
        partial.power_integral(-self.alpha) / self.power_integral(-self.alpha)
    }

    /// Inverse CDF of the continuous law.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.degenerate() {
            return self.d_min;
        }
        let a = 1.0 - self.alpha;
        if a.abs() < 1e-12 {
            return self.d_min * (self.d_max / self.d_min).powf(u);
        }
        let lo = self.d_min.powf(a);
        let hi = self.d_max.powf(a);
        (lo + u * (hi - lo)).powf(1.0 / a)
    }
}

impl MomentProvider for TruncatedPareto {
    fn moment(&self, s: f64) -> f64 {
        if self.degenerate() {
            return self.d_min.powf(s);
        }
        self.power_integral(s - self.alpha) / self.power_integral(-self.alpha)
    }
}

/// Sample moments (1/n) Σ d_i^s of a realized degree sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub degrees: Vec<f64>,
}

impl EmpiricalMoments {
    pub fn new(degrees: &[usize]) -> Self {
        EmpiricalMoments { degrees: degrees.iter().map(|&d| d as f64).collect() }
    }
}

impl MomentProvider for EmpiricalMoments {
    fn moment(&self, s: f64) -> f64 {
        let n = self.degrees.len() as f64;
        self.degrees.iter().map(|d| d.powf(s)).sum::<f64>() / n
    }
}

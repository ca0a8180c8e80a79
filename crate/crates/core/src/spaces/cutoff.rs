use crate::{Error, Result};

/// Smooth cutoff `f_R`: one on `[0, R]`, zero on `[2R, ∞)`, strictly
/// decreasing in between.
///
/// `f_R(x) = q(s₁) / (q(s₁) + q(s₂))` with `s₁ = (2R - x)/R`,
/// `s₂ = (x - R)/R` and `q(s) = exp(-1/s)` for `s > 0`, else `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    r: f64,
}

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl CutoffSpec {
    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && !r.is_nan() {
            Ok(Self { r })
        } else {
            Err(Error::invalid(format!("cutoff threshold R must be positive, got {r}")))
        }
    }

    /// A cutoff that never activates.
    pub fn inactive() -> Self {
        Self { r: f64::INFINITY }
    }

    pub fn threshold(&self) -> f64 {
        self.r
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.r {
            return 1.0;
        }
        if x >= 2.0 * self.r {
            return 0.0;
        }
        let a = bump((2.0 * self.r - x) / self.r);
        let b = bump((x - self.r) / self.r);
        a / (a + b)
    }
}

/// `cutoff_eval(x, spec)`.
pub fn cutoff_eval(x: f64, spec: &CutoffSpec) -> f64 {
    spec.eval(x)
}

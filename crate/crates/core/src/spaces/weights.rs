use super::Space;
use crate::{Error, Result};

/// Per-mode weights of the triple: `w_U = 1`, `w_H = 1 + |k|²`,
/// `w_V = (1 + |k|²)²`, `w_H* = 1 / w_H`, `w_H̄ = w_H`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TripleWeights;

impl TripleWeights {
    #[inline]
    pub fn weight(space: Space, kx: i32, ky: i32) -> f64 {
        let h = 1.0 + f64::from(kx * kx + ky * ky);
        match space {
            Space::U => 1.0,
            Space::H | Space::HBar => h,
            Space::V => h * h,
            Space::HStar => 1.0 / h,
        }
    }

    /// `μ_n = min_{|k|∞ > n} sqrt(w_H / w_U) = sqrt(1 + (n+1)²)`.
    pub fn mu(n: usize) -> f64 {
        let m = (n + 1) as f64;
        (1.0 + m * m).sqrt()
    }

    /// Largest `w_H` on the band `|k|∞ ≤ n`.
    pub fn max_h_weight(n: usize) -> f64 {
        let m = n as f64;
        1.0 + 2.0 * m * m
    }
}

/// Exponent `p` of the growth functions `K(φ) = 1 + ‖φ‖^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthProfile {
    p: f64,
}

impl GrowthProfile {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 0.0 {
            Ok(Self { p })
        } else {
            Err(Error::invalid(format!("growth exponent must be non-negative, got {p}")))
        }
    }

    pub fn exponent(self) -> f64 {
        self.p
    }

    /// `x^p` with the convention `0^0 = 1`.
    pub fn power(self, x: f64) -> f64 {
        x.powf(self.p)
    }
}

impl Default for GrowthProfile {
    fn default() -> Self {
        Self { p: 2.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_ordered() {
        for kx in -5..=5 {
            for ky in -5..=5 {
                let u = TripleWeights::weight(Space::U, kx, ky);
                let h = TripleWeights::weight(Space::H, kx, ky);
                let v = TripleWeights::weight(Space::V, kx, ky);
                assert!(u <= h && h <= v);
                assert!((TripleWeights::weight(Space::HStar, kx, ky) * h - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mu_is_increasing_and_matches_brute_force() {
        let mut last = 0.0;
        for n in 1..20usize {
            let mu = TripleWeights::mu(n);
            assert!(mu > last);
            last = mu;
            let lim = n as i32 + 3;
            let brute = (-lim..=lim)
                .flat_map(|kx| (-lim..=lim).map(move |ky| (kx, ky)))
                .filter(|&(kx, ky)| kx.unsigned_abs().max(ky.unsigned_abs()) as usize > n)
                .map(|(kx, ky)| TripleWeights::weight(Space::H, kx, ky).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(mu, brute);
        }
    }
}

//! Shared fixtures for the kernel benchmarks.

use spde_core::engine::InitialCondition;
use spde_core::{OperatorPair, SaltCoefficients, SpectralField};

/// Levels the benchmarks sweep.
pub const LEVELS: [usize; 3] = [4, 8, 16];

/// The default salt-ns pair: `ν = 0.1`, four library fields.
pub fn salt_pair() -> OperatorPair {
    OperatorPair::salt_ns(0.1, SaltCoefficients::trigonometric(4, 0.2, 0.5)).expect("valid pair")
}

/// A smooth random state on `level`.
pub fn state(level: usize, seed: u64) -> SpectralField {
    InitialCondition::random(level, 4.0, 2.0, 0.0, 6.0).expect("valid initial condition").sample(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_live_on_their_level() {
        for n in LEVELS {
            let s = state(n, 1);
            assert_eq!(s.band(), n);
            assert!((s.norm(spde_core::Space::U) - 2.0).abs() < 1e-12);
        }
        assert_eq!(salt_pair().noise_count(), 4);
    }
}

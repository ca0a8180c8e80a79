//! Seeded Gaussian increments, one ChaCha stream per noise index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64 finaliser; used to derive per-path seeds from a master seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index` in an ensemble with `master` seed.
pub fn path_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Stream reserved for initial-condition sampling.
pub(crate) const INITIAL_STREAM: u64 = u64::MAX;

/// Brownian increments `ΔW^i ~ N(0, dt)`, independent across `i`.
///
/// With `substeps > 1` each increment is the sum of `substeps` finer
/// increments of size `dt / substeps`; a driver with the same seed and
/// `substeps = 1` at the finer step produces exactly those finer increments,
/// which couples runs at `dt` and `dt / substeps`.
#[derive(Debug, Clone)]
pub struct BrownianDriver {
    seed: u64,
    dt: f64,
    substeps: usize,
    streams: Vec<ChaCha8Rng>,
    steps: u64,
}

impl BrownianDriver {
    pub fn new(seed: u64, m: usize, dt: f64) -> Self {
        Self::with_substeps(seed, m, dt, 1)
    }

    pub fn with_substeps(seed: u64, m: usize, dt: f64, substeps: usize) -> Self {
        assert!(substeps >= 1, "substeps must be positive");
        let streams = (0..m as u64)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i);
                r
            })
            .collect();
        Self { seed, dt, substeps, streams, steps: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn noise_count(&self) -> usize {
        self.streams.len()
    }

    /// Number of steps drawn so far.
    pub fn position(&self) -> u64 {
        self.steps
    }

    /// Fills `out[i]` with the next increment of `W^i`.
    pub fn next_increments(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.streams.len(), "increment buffer length");
        let sd = (self.dt / self.substeps as f64).sqrt();
        for (o, r) in out.iter_mut().zip(&mut self.streams) {
            let mut s = 0.0;
            for _ in 0..self.substeps {
                let z: f64 = StandardNormal.sample(r);
                s += z;
            }
            *o = sd * s;
        }
        self.steps += 1;
    }

    pub fn increments(&mut self) -> Vec<f64> {
        let mut v = vec![0.0; self.streams.len()];
        self.next_increments(&mut v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::MeanEstimate;

    #[test]
    fn identical_seeds_give_identical_streams() {
        let mut a = BrownianDriver::new(42, 3, 1e-3);
        let mut b = BrownianDriver::new(42, 3, 1e-3);
        for _ in 0..100 {
            assert_eq!(a.increments(), b.increments());
        }
        assert_eq!(a.position(), 100);
        let mut c = BrownianDriver::new(43, 3, 1e-3);
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn streams_do_not_depend_on_noise_count() {
        let mut a = BrownianDriver::new(7, 2, 0.5);
        let mut b = BrownianDriver::new(7, 5, 0.5);
        for _ in 0..20 {
            assert_eq!(a.increments()[..2], b.increments()[..2]);
        }
    }

    #[test]
    fn coarse_increments_are_sums_of_fine_ones() {
        let mut coarse = BrownianDriver::with_substeps(9, 2, 0.2, 2);
        let mut fine = BrownianDriver::new(9, 2, 0.1);
        for _ in 0..50 {
            let c = coarse.increments();
            let (f1, f2) = (fine.increments(), fine.increments());
            for i in 0..2 {
                assert!((c[i] - (f1[i] + f2[i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn increments_have_the_right_law() {
        let dt = 0.01;
        let mut d = BrownianDriver::new(1, 2, dt);
        let draws: Vec<Vec<f64>> = (0..20_000).map(|_| d.increments()).collect();
        for i in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|v| v[i]).collect();
            let m = MeanEstimate::from_samples(&xs);
            assert!(m.mean.abs() < 4.0 * m.std_error);
            let sq: Vec<f64> = xs.iter().map(|x| x * x / dt).collect();
            let v = MeanEstimate::from_samples(&sq);
            assert!((v.mean - 1.0).abs() < 4.0 * v.std_error, "{v:?}");
        }
        let cross: Vec<f64> = draws.iter().map(|v| v[0] * v[1] / dt).collect();
        let c = MeanEstimate::from_samples(&cross);
        assert!(c.mean.abs() < 4.0 * c.std_error);
    }

    #[test]
    fn path_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| path_seed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}

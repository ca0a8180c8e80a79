//! Deterministic and seeded random initial states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::driver::INITIAL_STREAM;
use crate::spaces::{ModeIndex, Space, SpectralField};
use crate::{Error, Result};

/// Random solenoidal field with spectrum `∝ (1+|k|²)^{-exponent/2}` on
/// `band`, whose U-norm is `norm_u·(1 + spread·Z)` clipped to `[0, clip]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomInitial {
    pub band: usize,
    pub exponent: f64,
    pub norm_u: f64,
    pub spread: f64,
    pub clip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `a · k⊥/|k|` on the mode pair `±k`.
    Mode { k: ModeIndex, amplitude: f64 },
    Field(SpectralField),
    Random(RandomInitial),
}

impl InitialCondition {
    pub fn mode(kx: i32, ky: i32, amplitude: f64) -> Result<Self> {
        let k = ModeIndex::new(kx, ky).ok_or_else(|| Error::invalid("initial mode must be non-zero"))?;
        Ok(InitialCondition::Mode { k, amplitude })
    }

    pub fn random(band: usize, exponent: f64, norm_u: f64, spread: f64, clip: f64) -> Result<Self> {
        if band == 0 || !(norm_u >= 0.0) || !(spread >= 0.0) || !(clip > 0.0) || !exponent.is_finite() {
            return Err(Error::invalid("random initial condition needs band ≥ 1, norm ≥ 0, spread ≥ 0, clip > 0"));
        }
        Ok(InitialCondition::Random(RandomInitial { band, exponent, norm_u, spread, clip }))
    }

    /// Largest U-norm the condition can produce.
    pub fn bound(&self) -> f64 {
        match self {
            InitialCondition::Zero => 0.0,
            InitialCondition::Mode { amplitude, .. } => amplitude.abs(),
            InitialCondition::Field(f) => f.norm(Space::U),
            InitialCondition::Random(r) => r.clip,
        }
    }

    /// The initial state of the path with seed `seed` (deterministic kinds ignore it).
    pub fn sample(&self, seed: u64) -> SpectralField {
        match self {
            InitialCondition::Zero => SpectralField::zeros(1),
            InitialCondition::Mode { k, amplitude } => {
                SpectralField::solenoidal_mode(k.sup_norm(), *k, Complex64::new(*amplitude, 0.0))
            }
            InitialCondition::Field(f) => f.clone(),
            InitialCondition::Random(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(INITIAL_STREAM);
                let mut f = SpectralField::random_solenoidal(r.band, r.exponent, 1.0, &mut rng);
                let z: f64 = StandardNormal.sample(&mut rng);
                let a = (r.norm_u * (1.0 + r.spread * z)).clamp(0.0, r.clip);
                f.scale(a);
                f
            }
        }
    }
}

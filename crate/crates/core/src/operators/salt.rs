//! Correlation fields `ξ_i` of the SALT noise and their spectrum-file format.
//!
//! Spectrum files are plain text, one coefficient per line:
//!
//! ```text
//! # i kx ky re_x im_x re_y im_y amplitude
//! 0 1 0 0.0 0.0 0.5 0.0 0.2
//! ```
//!
//! Line `i kx ky …` sets `ξ̂_i(k) = (re_x + i im_x, re_y + i im_y)`; the
//! partner `-k` receives the complex conjugate. `amplitude` is the scalar
//! weight of `ξ_i` and must agree on every line of the same `i`. Indices are
//! zero-based and contiguous. `k = (0, 0)` encodes a spatially constant part
//! and must be real.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rustfft::num_complex::Complex64;

use crate::spaces::{ModeIndex, SpectralField};
use crate::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Wavevectors of the built-in correlation library, lowest first.
const LIBRARY: [(i32, i32); 10] =
    [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1), (1, 2), (2, -1), (1, -2)];

/// The fields `ξ_i` (each scaled by its amplitude weight).
#[derive(Debug, Clone)]
pub struct SaltCoefficients {
    fields: Vec<SpectralField>,
    weights: Vec<f64>,
    id: u64,
}

impl PartialEq for SaltCoefficients {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields && self.weights == other.weights
    }
}

impl SaltCoefficients {
    pub fn new(fields: Vec<SpectralField>, weights: Vec<f64>) -> Result<Self> {
        if fields.len() != weights.len() {
            return Err(Error::invalid("one amplitude weight per correlation field is required"));
        }
        for (i, (f, w)) in fields.iter().zip(&weights).enumerate() {
            if !w.is_finite() {
                return Err(Error::invalid(format!("xi_{i}: non-finite amplitude")));
            }
            if f.reality_defect() > 1e-12 || f.get(0, 0).iter().any(|z| z.im != 0.0) {
                return Err(Error::invalid(format!("xi_{i} is not a real field")));
            }
            if f.divergence_defect() > 1e-12 {
                return Err(Error::invalid(format!("xi_{i} is not divergence-free")));
            }
        }
        Ok(Self { fields, weights, id: fresh_id() })
    }

    pub fn empty() -> Self {
        Self { fields: Vec::new(), weights: Vec::new(), id: fresh_id() }
    }

    /// `m` trigonometric modes `ξ_i = a rⁱ (q⊥/|q|) cos(q·x)` from the built-in library.
    pub fn trigonometric(m: usize, amplitude: f64, ratio: f64) -> Self {
        Self::library(m, amplitude, ratio, |_| 0.0)
    }

    /// As [`SaltCoefficients::trigonometric`] with seeded uniform phases.
    pub fn trigonometric_random_phases(m: usize, amplitude: f64, ratio: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = {
            let dist = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
            (0..m).map(|_| dist.sample(&mut rng)).collect()
        };
        Self::library(m, amplitude, ratio, |i| phases[i])
    }

    fn library(m: usize, amplitude: f64, ratio: f64, phase: impl Fn(usize) -> f64) -> Self {
        let band = LIBRARY.iter().take(m).map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(1) as usize;
        let mut fields = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            let (kx, ky) = LIBRARY[i % LIBRARY.len()];
            let q = ModeIndex::new(kx, ky).expect("non-zero");
            let half = Complex64::from_polar(0.5, phase(i));
            fields.push(SpectralField::solenoidal_mode(band, q, half));
            weights.push(amplitude * ratio.powi(i as i32));
        }
        Self { fields, weights, id: fresh_id() }
    }

    /// Spatially constant fields `ξ_i = c_i`.
    pub fn constant(vectors: &[[f64; 2]]) -> Self {
        let fields = vectors.iter().map(|&c| SpectralField::constant(1, c)).collect();
        Self { fields, weights: vec![1.0; vectors.len()], id: fresh_id() }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    /// Largest storage band among the fields.
    pub fn band(&self) -> usize {
        self.fields.iter().map(SpectralField::band).max().unwrap_or(0)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `ξ_i` including its amplitude weight.
    pub fn field(&self, i: usize) -> SpectralField {
        self.fields[i].scaled(self.weights[i])
    }

    /// Constant part of `ξ_i`, if the field is spatially constant.
    pub fn constant_part(&self, i: usize) -> [f64; 2] {
        let m = self.fields[i].mean();
        [m[0] * self.weights[i], m[1] * self.weights[i]]
    }

    /// `(Σ_k (1+|k|)² |ξ̂_i(k)|)²`, a proxy for `‖ξ_i‖²_{W^{2,∞}}`.
    pub fn w2inf_proxy(&self, i: usize) -> f64 {
        let f = self.field(i);
        let s: f64 = f
            .iter()
            .map(|((kx, ky), c)| {
                let k = f64::from(kx * kx + ky * ky).sqrt();
                (1.0 + k).powi(2) * (c[0].norm_sqr() + c[1].norm_sqr()).sqrt()
            })
            .sum();
        s * s
    }

    /// `Σ_i proxy_i`; finite by construction, reported for the summability check.
    pub fn summability(&self) -> f64 {
        (0..self.len()).map(|i| self.w2inf_proxy(i)).sum()
    }

    pub fn parse_spectrum(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, ModeOrMean, [Complex64; 2], f64, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::SpectrumFile { line: lineno + 1, message };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 8 {
                return Err(err(format!("expected 8 columns, found {}", cols.len())));
            }
            let i: usize = cols[0].parse().map_err(|_| err(format!("bad index `{}`", cols[0])))?;
            let kx: i32 = cols[1].parse().map_err(|_| err(format!("bad kx `{}`", cols[1])))?;
            let ky: i32 = cols[2].parse().map_err(|_| err(format!("bad ky `{}`", cols[2])))?;
            let mut nums = [0.0f64; 5];
            for (slot, s) in nums.iter_mut().zip(&cols[3..]) {
                *slot = s.parse().map_err(|_| err(format!("bad number `{s}`")))?;
                if !slot.is_finite() {
                    return Err(err(format!("non-finite number `{s}`")));
                }
            }
            let v = [Complex64::new(nums[0], nums[1]), Complex64::new(nums[2], nums[3])];
            let key = match ModeIndex::new(kx, ky) {
                Some(k) => {
                    let div = v[0] * f64::from(kx) + v[1] * f64::from(ky);
                    if div.norm() > 1e-12 * (v[0].norm() + v[1].norm()).max(1.0) {
                        return Err(err("coefficient is not divergence-free".into()));
                    }
                    ModeOrMean::Mode(k)
                }
                None => {
                    if nums[1] != 0.0 || nums[3] != 0.0 {
                        return Err(err("constant part must be real".into()));
                    }
                    ModeOrMean::Mean
                }
            };
            entries.push((i, key, v, nums[4], lineno + 1));
        }
        let m = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let mut weights = vec![f64::NAN; m];
        let mut bands = vec![1usize; m];
        for &(i, key, _, w, line) in &entries {
            if weights[i].is_nan() {
                weights[i] = w;
            } else if weights[i] != w {
                return Err(Error::SpectrumFile { line, message: format!("amplitude of xi_{i} disagrees") });
            }
            if let ModeOrMean::Mode(k) = key {
                bands[i] = bands[i].max(k.sup_norm());
            }
        }
        if let Some(i) = weights.iter().position(|w| w.is_nan()) {
            return Err(Error::SpectrumFile { line: 0, message: format!("xi_{i} has no coefficients") });
        }
        let mut fields: Vec<SpectralField> = bands.iter().map(|&b| SpectralField::zeros(b)).collect();
        let mut seen = std::collections::HashSet::new();
        for &(i, key, v, _, line) in &entries {
            let canon = match key {
                ModeOrMean::Mode(k) if !k.is_canonical() => ModeOrMean::Mode(k.neg()),
                other => other,
            };
            if !seen.insert((i, canon)) {
                return Err(Error::SpectrumFile { line, message: "duplicate mode".into() });
            }
            match key {
                ModeOrMean::Mode(k) => fields[i].set(k, v),
                ModeOrMean::Mean => fields[i].set_mean([v[0].re, v[1].re]),
            }
        }
        Self::new(fields, weights)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse_spectrum(&std::fs::read_to_string(path)?)
    }

    /// Renders the canonical spectrum-file form (one line per mode pair).
    pub fn to_spectrum_text(&self) -> String {
        let mut s = String::from("# i kx ky re_x im_x re_y im_y amplitude\n");
        for (i, f) in self.fields.iter().enumerate() {
            let m = f.mean();
            if m != [0.0, 0.0] {
                let _ = writeln!(s, "{i} 0 0 {:?} 0 {:?} 0 {:?}", m[0], m[1], self.weights[i]);
            }
            for k in ModeIndex::band(f.band()).filter(|k| k.is_canonical()) {
                let c = f.coeff(k);
                if c.iter().any(|z| z.norm_sqr() > 0.0) {
                    let _ = writeln!(
                        s,
                        "{i} {} {} {:?} {:?} {:?} {:?} {:?}",
                        k.kx, k.ky, c[0].re, c[0].im, c[1].re, c[1].im, self.weights[i]
                    );
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ModeOrMean {
    Mode(ModeIndex),
    Mean,
}

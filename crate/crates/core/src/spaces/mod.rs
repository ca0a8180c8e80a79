//! Weighted Fourier-coefficient spaces on the 2-torus `[0, 2π)²`.
//!
//! A real, mean-zero, divergence-free vector field is stored through its
//! complex coefficients `û(k) ∈ ℂ²` on the square band `|k|∞ ≤ n`. The
//! coefficient array is dense and holds both `k` and `-k`; the reality
//! condition `û(-k) = conj(û(k))` is maintained by every constructor and
//! operator in the crate.
//!
//! Inner products are normalised as `⟨f, g⟩ = ½ Σ_k w(k) Re(f̂(k)·conj ĝ(k))`,
//! i.e. one term per independent mode pair `{k, -k}`. With this convention a
//! single mode `k` carrying coefficient `v` has `U`-norm `|v|`.

mod cutoff;
mod functional;
mod weights;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::{Error, Result};

pub use cutoff::{cutoff_eval, CutoffSpec};
pub use functional::NormSeries;
pub use weights::{GrowthProfile, TripleWeights};

/// Coefficient of one Fourier mode: the two velocity components.
pub type Vec2c = [Complex64; 2];

pub(crate) const ZERO2: Vec2c = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];

/// Relative tolerance used by the solenoidality check.
pub const SOLENOIDAL_TOL: f64 = 1e-12;

/// Non-zero wavenumber of the Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub kx: i32,
    pub ky: i32,
}

impl ModeIndex {
    /// Returns `None` for the excluded mean mode `(0, 0)`.
    pub fn new(kx: i32, ky: i32) -> Option<Self> {
        (kx != 0 || ky != 0).then_some(Self { kx, ky })
    }

    pub fn norm_sq(self) -> f64 {
        f64::from(self.kx * self.kx + self.ky * self.ky)
    }

    pub fn sup_norm(self) -> usize {
        self.kx.unsigned_abs().max(self.ky.unsigned_abs()) as usize
    }

    pub fn neg(self) -> Self {
        Self { kx: -self.kx, ky: -self.ky }
    }

    /// Representative of the pair `{k, -k}` in the upper half plane.
    pub fn is_canonical(self) -> bool {
        self.ky > 0 || (self.ky == 0 && self.kx > 0)
    }

    /// Unit vector perpendicular to `k`; the solenoidal direction of the mode.
    pub fn perp_unit(self) -> [f64; 2] {
        let norm = self.norm_sq().sqrt();
        [-f64::from(self.ky) / norm, f64::from(self.kx) / norm]
    }

    /// All non-zero modes with `|k|∞ ≤ band`, in storage order.
    pub fn band(band: usize) -> impl Iterator<Item = ModeIndex> {
        let n = band as i32;
        (-n..=n).flat_map(move |ky| (-n..=n).filter_map(move |kx| ModeIndex::new(kx, ky)))
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.kx, self.ky)
    }
}

/// Tag selecting one of the weighted norms of the triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    U,
    H,
    V,
    HStar,
    HBar,
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U" | "u" => Ok(Space::U),
            "H" | "h" => Ok(Space::H),
            "V" | "v" => Ok(Space::V),
            "Hstar" | "H*" | "hstar" => Ok(Space::HStar),
            "Hbar" | "hbar" => Ok(Space::HBar),
            other => Err(Error::UnknownSpace(other.to_string())),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Space::U => "U",
            Space::H => "H",
            Space::V => "V",
            Space::HStar => "Hstar",
            Space::HBar => "Hbar",
        };
        f.write_str(s)
    }
}

/// Band-limited real vector field in Fourier coordinates.
///
/// States of the Galerkin system keep the mean slot `k = 0` empty; the slot is
/// used by pre-projection intermediates (for instance the output of the SALT
/// operator) and by spatially constant correlation fields.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    band: usize,
    coeffs: Vec<Vec2c>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let active = self.coeffs.iter().filter(|c| c.iter().any(|z| z.norm_sqr() > 0.0)).count();
        f.debug_struct("SpectralField")
            .field("band", &self.band)
            .field("active_coeffs", &active)
            .field("norm_u", &self.norm(Space::U))
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(band: usize) -> Self {
        let side = 2 * band + 1;
        Self { band, coeffs: vec![ZERO2; side * side] }
    }

    /// Field holding the single mode pair `{k, -k}` with `û(k) = v`.
    pub fn mode(band: usize, k: ModeIndex, v: Vec2c) -> Self {
        let mut f = Self::zeros(band);
        f.set(k, v);
        f
    }

    /// Solenoidal single mode `û(k) = a · k⊥/|k|`.
    pub fn solenoidal_mode(band: usize, k: ModeIndex, a: Complex64) -> Self {
        let e = k.perp_unit();
        Self::mode(band, k, [a * e[0], a * e[1]])
    }

    /// Spatially constant field `c`, stored in the mean slot.
    pub fn constant(band: usize, c: [f64; 2]) -> Self {
        let mut f = Self::zeros(band);
        f.set_mean(c);
        f
    }

    pub fn band(&self) -> usize {
        self.band
    }

    #[inline]
    fn side(&self) -> usize {
        2 * self.band + 1
    }

    #[inline]
    pub(crate) fn index(&self, kx: i32, ky: i32) -> Option<usize> {
        let n = self.band as i32;
        if kx.abs() > n || ky.abs() > n {
            return None;
        }
        Some((ky + n) as usize * self.side() + (kx + n) as usize)
    }

    #[inline]
    pub(crate) fn wavenumber(&self, idx: usize) -> (i32, i32) {
        let n = self.band as i32;
        let side = self.side();
        ((idx % side) as i32 - n, (idx / side) as i32 - n)
    }

    /// Coefficient at `(kx, ky)`; zero outside the band.
    pub fn get(&self, kx: i32, ky: i32) -> Vec2c {
        self.index(kx, ky).map_or(ZERO2, |i| self.coeffs[i])
    }

    pub fn coeff(&self, k: ModeIndex) -> Vec2c {
        self.get(k.kx, k.ky)
    }

    /// Sets `û(k) = v` and `û(-k) = conj(v)`. Panics outside the band.
    pub fn set(&mut self, k: ModeIndex, v: Vec2c) {
        let i = self.index(k.kx, k.ky).expect("mode outside band");
        let j = self.index(-k.kx, -k.ky).expect("mode outside band");
        self.coeffs[i] = v;
        self.coeffs[j] = [v[0].conj(), v[1].conj()];
    }

    pub fn mean(&self) -> [f64; 2] {
        let c = self.get(0, 0);
        [c[0].re, c[1].re]
    }

    pub fn set_mean(&mut self, c: [f64; 2]) {
        let i = self.index(0, 0).expect("mean slot");
        self.coeffs[i] = [Complex64::new(c[0], 0.0), Complex64::new(c[1], 0.0)];
    }

    pub(crate) fn raw(&self) -> &[Vec2c] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Vec2c] {
        &mut self.coeffs
    }

    /// Iterates over `((kx, ky), coefficient)` for every stored slot, mean included.
    pub fn iter(&self) -> impl Iterator<Item = ((i32, i32), &Vec2c)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.wavenumber(i), c))
    }

    /// Copy with a different storage band, truncating or zero-padding.
    pub fn with_band(&self, band: usize) -> Self {
        let mut out = Self::zeros(band);
        let m = self.band.min(band) as i32;
        for ky in -m..=m {
            for kx in -m..=m {
                let (i, j) = (out.index(kx, ky).unwrap(), self.index(kx, ky).unwrap());
                out.coeffs[i] = self.coeffs[j];
            }
        }
        out
    }

    /// `P_n`: zero every coefficient with `|k|∞ > n` and the mean slot.
    pub fn project(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.project_in_place(n);
        out
    }

    pub fn project_in_place(&mut self, n: usize) {
        let n = n as i32;
        for i in 0..self.coeffs.len() {
            let (kx, ky) = self.wavenumber(i);
            if kx.abs() > n || ky.abs() > n || (kx == 0 && ky == 0) {
                self.coeffs[i] = ZERO2;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// `self += a * x`. Bands must agree.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        assert_eq!(self.band, x.band, "band mismatch in axpy");
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            c[0] += d[0] * a;
            c[1] += d[1] * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            c[0] *= a;
            c[1] *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// Difference `self - other`, computed on the larger of the two bands.
    pub fn difference(&self, other: &SpectralField) -> Self {
        let band = self.band.max(other.band);
        let mut out = self.with_band(band);
        out.axpy(-1.0, &other.with_band(band));
        out
    }

    pub fn sum(&self, other: &SpectralField) -> Self {
        let band = self.band.max(other.band);
        let mut out = self.with_band(band);
        out.axpy(1.0, &other.with_band(band));
        out
    }

    /// Applies a real Fourier multiplier `c(k) ↦ m(k) c(k)`.
    pub fn map_multiplier(&self, m: impl Fn(i32, i32) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            let (kx, ky) = out.wavenumber(i);
            let s = m(kx, ky);
            out.coeffs[i][0] *= s;
            out.coeffs[i][1] *= s;
        }
        out
    }

    /// Weighted squared norm `½ Σ_k w(k)|û(k)|²`.
    pub fn norm_sq(&self, space: Space) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (kx, ky) = self.wavenumber(i);
            let m = c[0].norm_sqr() + c[1].norm_sqr();
            if m != 0.0 {
                acc += TripleWeights::weight(space, kx, ky) * m;
            }
        }
        0.5 * acc
    }

    pub fn norm(&self, space: Space) -> f64 {
        self.norm_sq(space).sqrt()
    }

    /// Weighted inner product; bands may differ.
    pub fn inner(&self, other: &SpectralField, space: Space) -> f64 {
        let m = self.band.min(other.band) as i32;
        let mut acc = 0.0;
        for ky in -m..=m {
            for kx in -m..=m {
                let a = self.get(kx, ky);
                let b = other.get(kx, ky);
                let re = (a[0] * b[0].conj()).re + (a[1] * b[1].conj()).re;
                if re != 0.0 {
                    acc += TripleWeights::weight(space, kx, ky) * re;
                }
            }
        }
        0.5 * acc
    }

    /// Largest violation of `û(-k) = conj(û(k))`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (kx, ky) = self.wavenumber(i);
            let d = self.get(-kx, -ky);
            worst = worst.max((c[0] - d[0].conj()).norm()).max((c[1] - d[1].conj()).norm());
        }
        worst
    }

    /// Largest `|k·û(k)| / |k|`, relative to the largest coefficient.
    pub fn divergence_defect(&self) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .map(|c| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (kx, ky) = self.wavenumber(i);
            if kx == 0 && ky == 0 {
                continue;
            }
            let kn = f64::from(kx * kx + ky * ky).sqrt();
            let div = (c[0] * f64::from(kx) + c[1] * f64::from(ky)).norm() / kn;
            worst = worst.max(div);
        }
        worst / scale
    }

    /// Checks the state-space invariants: reality, solenoidality, zero mean.
    pub fn validate_state(&self) -> Result<()> {
        let scale = self.coeffs.iter().map(|c| c[0].norm().max(c[1].norm())).fold(0.0, f64::max);
        if self.reality_defect() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("field violates the reality condition"));
        }
        if self.divergence_defect() > SOLENOIDAL_TOL {
            return Err(Error::invalid("field is not divergence-free"));
        }
        let m = self.get(0, 0);
        if m[0].norm() != 0.0 || m[1].norm() != 0.0 {
            return Err(Error::invalid("state field has a non-zero mean"));
        }
        Ok(())
    }

    /// Random solenoidal field on `band` with amplitude spectrum `(1+|k|²)^(-exponent/2)`
    /// times independent complex Gaussians, rescaled to the given `U`-norm.
    pub fn random_solenoidal<R: Rng + ?Sized>(
        band: usize,
        exponent: f64,
        norm_u: f64,
        rng: &mut R,
    ) -> Self {
        let mut f = Self::zeros(band);
        for k in ModeIndex::band(band).filter(|k| k.is_canonical()) {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let amp = (1.0 + k.norm_sq()).powf(-0.5 * exponent);
            let e = k.perp_unit();
            let a = Complex64::new(re, im) * amp;
            f.set(k, [a * e[0], a * e[1]]);
        }
        let n = f.norm(Space::U);
        if n > 0.0 {
            f.scale(norm_u / n);
        }
        f
    }
}

/// `norm(field, space)`.
pub fn norm(field: &SpectralField, space: Space) -> f64 {
    field.norm(space)
}

/// `P_n f`; `n` must be at least 1.
pub fn project_n(field: &SpectralField, n: usize) -> Result<SpectralField> {
    if n == 0 {
        return Err(Error::invalid("projection level must be at least 1"));
    }
    Ok(field.project(n))
}

/// Ratio `‖(I - P_n) f‖_U · μ_n / ‖f‖_H̄`; bounded by one, zero for the zero field.
pub fn tail_bound_check(field: &SpectralField, n: usize) -> f64 {
    let total = field.norm(Space::HBar);
    if total == 0.0 {
        return 0.0;
    }
    let tail = field.difference(&field.project(n)).project(field.band());
    tail.norm(Space::U) * TripleWeights::mu(n) / total
}

/// `K_space(f₁, …) = 1 + Σ ‖f_i‖^p`.
pub fn growth_k(fields: &[&SpectralField], space: Space, profile: GrowthProfile) -> f64 {
    1.0 + fields.iter().map(|f| profile.power(f.norm(space))).sum::<f64>()
}

/// `H*×H` duality pairing of `f ∈ U` with `g ∈ H`.
pub fn duality_pairing(f: &SpectralField, g: &SpectralField) -> f64 {
    // w_Hstar(k) · w_H(k) = w_U(k)
    f.inner(g, Space::U)
}

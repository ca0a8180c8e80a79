//! Dealiased pseudo-spectral transforms on an `N × N` collocation grid.
//!
//! Real-space arrays are stored x-major: the value at `(x_a, y_b)` with
//! `x_a = 2πa/N` lives at index `a * N + b`. Two real fields are always
//! transformed together as the real and imaginary parts of one complex
//! array, which halves the number of FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::spaces::{SpectralField, Vec2c};

/// Smallest `N = 2^a 3^b 5^c` with `N ≥ min`.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Grid size that evaluates quadratic products of band-`band` fields, and
/// products with coefficients of band `coeff_band`, without aliasing into
/// the output band `band`.
pub fn grid_size_for(band: usize, coeff_band: usize) -> usize {
    smooth_size((3 * band + 1).max(2 * band + coeff_band + 1))
}

pub struct PseudoSpectral {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for PseudoSpectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PseudoSpectral").field("size", &self.size).finish()
    }
}

#[inline]
fn wrap(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for i0 in (0..n).step_by(B) {
        for j0 in (0..n).step_by(B) {
            for i in i0..(i0 + B).min(n) {
                for j in j0..(j0 + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

impl PseudoSpectral {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            size,
            fwd,
            inv,
            buf: vec![zero; size * size],
            tmp: vec![zero; size * size],
            scratch: vec![zero; scratch_len],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn points(&self) -> usize {
        self.size * self.size
    }

    /// Collocation coordinate of grid index `a`.
    pub fn coordinate(&self, a: usize) -> f64 {
        std::f64::consts::TAU * a as f64 / self.size as f64
    }

    fn band_rows(&self, band: usize) -> impl Iterator<Item = usize> {
        let n = self.size;
        (0..=band).chain(n - band..n).filter(move |&r| r < n)
    }

    /// Evaluates two real fields from their Hermitian spectra on `|k|∞ ≤ band`.
    pub fn synthesize(
        &mut self,
        band: usize,
        spec: impl Fn(i32, i32) -> (Complex64, Complex64),
        out_a: &mut [f64],
        out_b: &mut [f64],
    ) {
        let n = self.size;
        assert!(2 * band < n, "grid too small for band");
        let zero = Complex64::new(0.0, 0.0);
        self.buf.fill(zero);
        let b = band as i32;
        let i = Complex64::new(0.0, 1.0);
        for ky in -b..=b {
            let row = wrap(ky, n) * n;
            for kx in -b..=b {
                let (a, c) = spec(kx, ky);
                self.buf[row + wrap(kx, n)] = a + i * c;
            }
        }
        // along x for the non-empty ky rows
        for r in self.band_rows(band).collect::<Vec<_>>() {
            self.inv.process_with_scratch(&mut self.buf[r * n..(r + 1) * n], &mut self.scratch);
        }
        transpose(&self.buf, &mut self.tmp, n);
        // along y, now contiguous
        self.inv.process_with_scratch(&mut self.tmp, &mut self.scratch);
        for (k, z) in self.tmp.iter().enumerate() {
            out_a[k] = z.re;
            out_b[k] = z.im;
        }
    }

    /// Fourier coefficients of two real fields, restricted to `|k|∞ ≤ band`.
    /// `sink(kx, ky, â(k), b̂(k))` receives every mode of the band.
    pub fn analyze(
        &mut self,
        a: &[f64],
        b: &[f64],
        band: usize,
        mut sink: impl FnMut(i32, i32, Complex64, Complex64),
    ) {
        let n = self.size;
        assert!(2 * band < n, "grid too small for band");
        for (k, z) in self.tmp.iter_mut().enumerate() {
            *z = Complex64::new(a[k], b[k]);
        }
        // along y (contiguous in x-major layout)
        self.fwd.process_with_scratch(&mut self.tmp, &mut self.scratch);
        transpose(&self.tmp, &mut self.buf, n);
        for r in self.band_rows(band).collect::<Vec<_>>() {
            self.fwd.process_with_scratch(&mut self.buf[r * n..(r + 1) * n], &mut self.scratch);
        }
        let norm = 1.0 / (n * n) as f64;
        let bi = band as i32;
        for ky in -bi..=bi {
            for kx in -bi..=bi {
                let z = self.buf[wrap(ky, n) * n + wrap(kx, n)];
                let zm = self.buf[wrap(-ky, n) * n + wrap(-kx, n)].conj();
                let ah = (z + zm) * (0.5 * norm);
                let bh = (z - zm) * Complex64::new(0.0, -0.5 * norm);
                sink(kx, ky, ah, bh);
            }
        }
    }

    /// Fourier coefficients of the real vector field `(a, b)` as a [`SpectralField`].
    pub fn analyze_vector(&mut self, a: &[f64], b: &[f64], band: usize) -> SpectralField {
        let mut out = SpectralField::zeros(band);
        {
            let raw = out.raw_mut();
            let side = 2 * band as i32 + 1;
            let bi = band as i32;
            self.analyze(a, b, band, |kx, ky, ah, bh| {
                raw[((ky + bi) * side + kx + bi) as usize] = [ah, bh];
            });
        }
        out
    }
}

/// Which real quantity of a vector field to evaluate on the grid.
#[derive(Debug, Clone, Copy)]
pub enum Component {
    /// `u^l`
    Value(usize),
    /// `∂_j u^l` as `(l, j)`
    Derivative(usize, usize),
}

impl Component {
    #[inline]
    fn apply(self, c: &Vec2c, kx: i32, ky: i32) -> Complex64 {
        match self {
            Component::Value(l) => c[l],
            Component::Derivative(l, j) => {
                let k = if j == 0 { kx } else { ky };
                c[l] * Complex64::new(0.0, f64::from(k))
            }
        }
    }
}

/// Real-space values and gradient of a vector field: `grad[l][j] = ∂_j u^l`.
#[derive(Debug, Clone)]
pub struct RealVectorField {
    pub value: [Vec<f64>; 2],
    pub grad: [[Vec<f64>; 2]; 2],
}

impl RealVectorField {
    pub fn zeros(points: usize) -> Self {
        let z = || vec![0.0; points];
        Self { value: [z(), z()], grad: [[z(), z()], [z(), z()]] }
    }

    /// Fills values and the full gradient with three packed transforms.
    pub fn fill(&mut self, ps: &mut PseudoSpectral, f: &SpectralField) {
        let band = f.band();
        let get = |c: Component, d: Component| {
            move |kx: i32, ky: i32| {
                let v = f.get(kx, ky);
                (c.apply(&v, kx, ky), d.apply(&v, kx, ky))
            }
        };
        let [v0, v1] = &mut self.value;
        ps.synthesize(band, get(Component::Value(0), Component::Value(1)), v0, v1);
        let [g0, g1] = &mut self.grad;
        let [g00, g01] = g0;
        ps.synthesize(band, get(Component::Derivative(0, 0), Component::Derivative(0, 1)), g00, g01);
        let [g10, g11] = g1;
        ps.synthesize(band, get(Component::Derivative(1, 0), Component::Derivative(1, 1)), g10, g11);
    }

    /// Fills only the values.
    pub fn fill_values(&mut self, ps: &mut PseudoSpectral, f: &SpectralField) {
        let [v0, v1] = &mut self.value;
        ps.synthesize(
            f.band(),
            |kx, ky| {
                let v = f.get(kx, ky);
                (v[0], v[1])
            },
            v0,
            v1,
        );
    }
}

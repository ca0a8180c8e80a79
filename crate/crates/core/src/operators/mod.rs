//! Drift and noise operators in spectral coordinates.
//!
//! Products are evaluated pseudo-spectrally on a grid large enough that every
//! retained output mode is alias-free (see [`crate::transform::grid_size_for`]).
//! Every operator returns a field on the band of its input, so the operators
//! are exactly the Galerkin operators `P_n A`, `P_n G_i` of that band.

pub mod assumptions;
mod salt;

use std::collections::HashMap;

use rustfft::num_complex::Complex64;

use crate::spaces::SpectralField;
use crate::transform::{grid_size_for, PseudoSpectral, RealVectorField};
use crate::{Error, Result};

pub use salt::SaltCoefficients;

/// Which stochastic calculus the drift is written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calculus {
    /// Itô form: the SALT drift carries `½ Σ P B_i² u`.
    Ito,
    /// Stratonovich form: no corrector.
    Stratonovich,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    /// `ν Δu`
    Heat { nu: f64 },
    /// `-u`
    OrnsteinUhlenbeck,
    /// `-P(u·∇)u + ν Δu`
    SaltNs { nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    None,
    /// State-independent columns `G_i = P_n g_i`.
    Additive(Vec<SpectralField>),
    /// `G_i(u) = P B_i u`.
    Salt(SaltCoefficients),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Zero,
    Heat,
    AdditiveOu,
    SaltNs,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Zero => "zero",
            OperatorKind::Heat => "heat",
            OperatorKind::AdditiveOu => "additive-ou",
            OperatorKind::SaltNs => "salt-ns",
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => OperatorKind::Zero,
            "heat" => OperatorKind::Heat,
            "additive-ou" | "ou" => OperatorKind::AdditiveOu,
            "salt-ns" => OperatorKind::SaltNs,
            other => return Err(Error::invalid(format!("unknown operator kind `{other}`"))),
        })
    }
}

/// A drift `A` together with its noise columns `G_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPair {
    drift: Drift,
    noise: Noise,
}

/// Drift and all noise columns at one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub drift: SpectralField,
    pub columns: Vec<SpectralField>,
}

impl OperatorPair {
    pub fn new(drift: Drift, noise: Noise) -> Result<Self> {
        let positive = |nu: f64| nu.is_finite() && nu > 0.0;
        match drift {
            Drift::Heat { nu } | Drift::SaltNs { nu } if !positive(nu) => {
                return Err(Error::invalid(format!("viscosity must be positive, got {nu}")))
            }
            _ => {}
        }
        if let Noise::Additive(cols) = &noise {
            for (i, g) in cols.iter().enumerate() {
                if g.reality_defect() > 1e-12 || g.divergence_defect() > 1e-12 {
                    return Err(Error::invalid(format!("additive column {i} is not a real solenoidal field")));
                }
            }
        }
        Ok(Self { drift, noise })
    }

    pub fn zero() -> Self {
        Self { drift: Drift::Zero, noise: Noise::None }
    }

    pub fn heat(nu: f64) -> Result<Self> {
        Self::new(Drift::Heat { nu }, Noise::None)
    }

    pub fn heat_additive(nu: f64, columns: Vec<SpectralField>) -> Result<Self> {
        Self::new(Drift::Heat { nu }, Noise::Additive(columns))
    }

    pub fn additive_ou(columns: Vec<SpectralField>) -> Result<Self> {
        Self::new(Drift::OrnsteinUhlenbeck, Noise::Additive(columns))
    }

    pub fn salt_ns(nu: f64, xi: SaltCoefficients) -> Result<Self> {
        Self::new(Drift::SaltNs { nu }, Noise::Salt(xi))
    }

    pub fn kind(&self) -> OperatorKind {
        match self.drift {
            Drift::Zero => OperatorKind::Zero,
            Drift::Heat { .. } => OperatorKind::Heat,
            Drift::OrnsteinUhlenbeck => OperatorKind::AdditiveOu,
            Drift::SaltNs { .. } => OperatorKind::SaltNs,
        }
    }

    pub fn drift_spec(&self) -> &Drift {
        &self.drift
    }

    pub fn noise_spec(&self) -> &Noise {
        &self.noise
    }

    pub fn salt(&self) -> Option<&SaltCoefficients> {
        match &self.noise {
            Noise::Salt(xi) => Some(xi),
            _ => None,
        }
    }

    pub fn viscosity(&self) -> Option<f64> {
        match self.drift {
            Drift::Heat { nu } | Drift::SaltNs { nu } => Some(nu),
            _ => None,
        }
    }

    pub fn noise_count(&self) -> usize {
        match &self.noise {
            Noise::None => 0,
            Noise::Additive(c) => c.len(),
            Noise::Salt(xi) => xi.len(),
        }
    }

    /// True when the noise columns do not depend on the state.
    pub fn is_additive(&self) -> bool {
        !matches!(self.noise, Noise::Salt(_))
    }

    /// Drift and noise columns at `u`; the SALT corrector is included only for [`Calculus::Ito`].
    pub fn evaluate(&self, _t: f64, u: &SpectralField, ws: &mut Workspace, calculus: Calculus) -> Evaluation {
        let n = u.band();
        let mut drift = match self.drift {
            Drift::Zero => SpectralField::zeros(n),
            Drift::Heat { nu } => laplacian(u, nu),
            Drift::OrnsteinUhlenbeck => u.scaled(-1.0),
            Drift::SaltNs { nu } => laplacian(u, nu),
        };
        let columns = match &self.noise {
            Noise::None => Vec::new(),
            Noise::Additive(cols) => cols.iter().map(|g| galerkin_column(g, n)).collect(),
            Noise::Salt(xi) => {
                let grid = ws.grid(n, Some(xi));
                grid.u.fill(&mut grid.ps, u);
                let mut corr = SpectralField::zeros(n);
                let mut cols = Vec::with_capacity(xi.len());
                for i in 0..xi.len() {
                    let b = grid.salt_filled(i, n);
                    if calculus == Calculus::Ito {
                        let bb = grid.salt_of(i, &b);
                        corr.axpy(0.5, &bb);
                    }
                    cols.push(leray_project(&b));
                }
                if calculus == Calculus::Ito {
                    leray_in_place(&mut corr);
                    drift.axpy(1.0, &corr);
                }
                cols
            }
        };
        if matches!(self.drift, Drift::SaltNs { .. }) {
            let adv = advection(u, ws);
            drift.axpy(-1.0, &adv);
        }
        Evaluation { drift, columns }
    }

    /// Itô drift `A(t, u)`.
    pub fn drift(&self, t: f64, u: &SpectralField, ws: &mut Workspace) -> SpectralField {
        self.evaluate(t, u, ws, Calculus::Ito).drift
    }

    /// Noise column `G_i(t, u)`.
    pub fn noise_column(&self, _t: f64, u: &SpectralField, i: usize, ws: &mut Workspace) -> Result<SpectralField> {
        let count = self.noise_count();
        if i >= count {
            return Err(Error::NoiseIndex { index: i, count });
        }
        Ok(match &self.noise {
            Noise::None => unreachable!("no columns"),
            Noise::Additive(cols) => galerkin_column(&cols[i], u.band()),
            Noise::Salt(xi) => salt_noise_column(u, i, xi, ws)?,
        })
    }
}

/// `P_n g` stored on band `n`, whatever the band of `g`.
fn galerkin_column(g: &SpectralField, n: usize) -> SpectralField {
    let mut c = g.with_band(n);
    c.project_in_place(n);
    c
}

fn laplacian(u: &SpectralField, nu: f64) -> SpectralField {
    u.map_multiplier(|kx, ky| -nu * f64::from(kx * kx + ky * ky))
}

/// `drift_eval`: the Itô drift of `pair` at `u`.
pub fn drift_eval(pair: &OperatorPair, t: f64, u: &SpectralField, ws: &mut Workspace) -> SpectralField {
    pair.drift(t, u, ws)
}

/// Per mode `v ↦ v - k (k·v)/|k|²`; the mean slot is cleared.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_in_place(&mut out);
    out
}

pub(crate) fn leray_in_place(f: &mut SpectralField) {
    let n = f.band() as i32;
    let side = (2 * n + 1) as usize;
    let raw = f.raw_mut();
    for ky in -n..=n {
        for kx in -n..=n {
            let c = &mut raw[(ky + n) as usize * side + (kx + n) as usize];
            if kx == 0 && ky == 0 {
                *c = [Complex64::new(0.0, 0.0); 2];
                continue;
            }
            let (x, y) = (f64::from(kx), f64::from(ky));
            let s = (c[0] * x + c[1] * y) / (x * x + y * y);
            c[0] -= s * x;
            c[1] -= s * y;
        }
    }
}

/// `P (u·∇)u` on the band of `u`.
pub fn advection(u: &SpectralField, ws: &mut Workspace) -> SpectralField {
    let n = u.band();
    let grid = ws.grid(n, None);
    grid.u.fill(&mut grid.ps, u);
    let mut out = grid.advect_filled(n);
    leray_in_place(&mut out);
    out
}

/// `B_i φ = ξ_i·∇φ + Σ_j φ^j ∇ξ_i^j` before projection, on the band of `φ`.
pub fn salt_apply(phi: &SpectralField, i: usize, xi: &SaltCoefficients, ws: &mut Workspace) -> Result<SpectralField> {
    check_index(i, xi)?;
    let grid = ws.grid(phi.band(), Some(xi));
    Ok(grid.salt_of(i, phi))
}

/// Transport part `ξ_i·∇φ` of `B_i`, on the band of `φ`.
pub fn transport_apply(phi: &SpectralField, i: usize, xi: &SaltCoefficients, ws: &mut Workspace) -> Result<SpectralField> {
    check_index(i, xi)?;
    let grid = ws.grid(phi.band(), Some(xi));
    grid.w.fill(&mut grid.ps, phi);
    let (x, w) = (&grid.xi[i], &grid.w);
    for l in 0..2 {
        let o = &mut grid.out[l];
        for p in 0..o.len() {
            o[p] = x.value[0][p] * w.grad[l][0][p] + x.value[1][p] * w.grad[l][1][p];
        }
    }
    Ok(grid.ps.analyze_vector(&grid.out[0], &grid.out[1], phi.band()))
}

/// `G_i(u) = P B_i u`.
pub fn salt_noise_column(u: &SpectralField, i: usize, xi: &SaltCoefficients, ws: &mut Workspace) -> Result<SpectralField> {
    let mut b = salt_apply(u, i, xi, ws)?;
    leray_in_place(&mut b);
    Ok(b)
}

/// `½ Σ_i P B_i (B_i u)`, the inner application truncated to the band of `u`.
pub fn salt_corrector(u: &SpectralField, xi: &SaltCoefficients, ws: &mut Workspace) -> SpectralField {
    let n = u.band();
    let grid = ws.grid(n, Some(xi));
    let mut corr = SpectralField::zeros(n);
    for i in 0..xi.len() {
        let b = grid.salt_of(i, u);
        corr.axpy(0.5, &grid.salt_of(i, &b));
    }
    leray_in_place(&mut corr);
    corr
}

fn check_index(i: usize, xi: &SaltCoefficients) -> Result<()> {
    if i >= xi.len() {
        return Err(Error::NoiseIndex { index: i, count: xi.len() });
    }
    Ok(())
}

/// Per-worker transform scratch, keyed by band and correlation ensemble.
#[derive(Default)]
pub struct Workspace {
    grids: HashMap<(usize, u64), Grid>,
}

impl std::fmt::Debug for Workspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workspace").field("grids", &self.grids.len()).finish()
    }
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn grid(&mut self, band: usize, xi: Option<&SaltCoefficients>) -> &mut Grid {
        let key = (band, xi.map_or(0, SaltCoefficients::id));
        self.grids.entry(key).or_insert_with(|| Grid::new(band, xi))
    }
}

struct Grid {
    ps: PseudoSpectral,
    u: RealVectorField,
    w: RealVectorField,
    out: [Vec<f64>; 2],
    xi: Vec<RealVectorField>,
}

impl Grid {
    fn new(band: usize, xi: Option<&SaltCoefficients>) -> Self {
        let xi_band = xi.map_or(0, SaltCoefficients::band);
        let mut ps = PseudoSpectral::new(grid_size_for(band, xi_band));
        let points = ps.points();
        let fields = xi
            .map(|xi| {
                (0..xi.len())
                    .map(|i| {
                        let mut r = RealVectorField::zeros(points);
                        r.fill(&mut ps, &xi.field(i));
                        r
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            ps,
            u: RealVectorField::zeros(points),
            w: RealVectorField::zeros(points),
            out: [vec![0.0; points], vec![0.0; points]],
            xi: fields,
        }
    }

    /// `(u·∇)u` from the values already in `self.u`.
    fn advect_filled(&mut self, band: usize) -> SpectralField {
        let u = &self.u;
        let [o0, o1] = &mut self.out;
        for p in 0..o0.len() {
            let (a, b) = (u.value[0][p], u.value[1][p]);
            o0[p] = a * u.grad[0][0][p] + b * u.grad[0][1][p];
            o1[p] = a * u.grad[1][0][p] + b * u.grad[1][1][p];
        }
        self.ps.analyze_vector(&self.out[0], &self.out[1], band)
    }

    /// `B_i` applied to the field already in `self.u`.
    fn salt_filled(&mut self, i: usize, band: usize) -> SpectralField {
        apply_b(&self.xi[i], &self.u, &mut self.out);
        self.ps.analyze_vector(&self.out[0], &self.out[1], band)
    }

    fn salt_of(&mut self, i: usize, phi: &SpectralField) -> SpectralField {
        self.w.fill(&mut self.ps, phi);
        apply_b(&self.xi[i], &self.w, &mut self.out);
        self.ps.analyze_vector(&self.out[0], &self.out[1], phi.band())
    }
}

fn apply_b(xi: &RealVectorField, phi: &RealVectorField, out: &mut [Vec<f64>; 2]) {
    for l in 0..2 {
        let o = &mut out[l];
        for p in 0..o.len() {
            o[p] = xi.value[0][p] * phi.grad[l][0][p]
                + xi.value[1][p] * phi.grad[l][1][p]
                + phi.value[0][p] * xi.grad[0][l][p]
                + phi.value[1][p] * xi.grad[1][l][p];
        }
    }
}

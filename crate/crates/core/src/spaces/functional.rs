use super::{Space, SpectralField};
use crate::{Error, Result};

/// Squared `U`, `H` and `V` norms of a path on a uniform grid.
///
/// The path functionals use the supremum over grid points `r ≤ t` and a
/// left-Riemann sum for the time integral.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormSeries {
    dt: f64,
    u: Vec<f64>,
    h: Vec<f64>,
    v: Vec<f64>,
}

impl NormSeries {
    pub fn new(dt: f64) -> Self {
        Self { dt, ..Default::default() }
    }

    pub fn from_squared(dt: f64, u: Vec<f64>, h: Vec<f64>, v: Vec<f64>) -> Self {
        assert!(u.len() == h.len() && h.len() == v.len());
        Self { dt, u, h, v }
    }

    pub fn push(&mut self, field: &SpectralField) {
        self.u.push(field.norm_sq(Space::U));
        self.h.push(field.norm_sq(Space::H));
        self.v.push(field.norm_sq(Space::V));
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn squared(&self, space: Space) -> &[f64] {
        match space {
            Space::U => &self.u,
            Space::H | Space::HBar => &self.h,
            Space::V => &self.v,
            Space::HStar => panic!("H* norms are not tracked along paths"),
        }
    }

    /// Grid index of the last point `r ≤ t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let end = self.end_time();
        if !(t >= 0.0) || t > end + 1e-9 * self.dt.max(1.0) || self.is_empty() {
            return Err(Error::OffGrid { t, end });
        }
        let j = (t / self.dt + 1e-9).floor() as usize;
        Ok(j.min(self.len() - 1))
    }

    fn sup_plus_integral(sup: &[f64], int: &[f64], dt: f64, j: usize) -> f64 {
        let s = sup[..=j].iter().copied().fold(0.0, f64::max);
        let i: f64 = crate::stats::pairwise_sum(&int[..j]) * dt;
        s + i
    }

    /// `sup_{r ≤ t_j} ‖Ψ_r‖²_U + Σ_{i<j} ‖Ψ_{t_i}‖²_H dt`.
    pub fn uh_at(&self, j: usize) -> f64 {
        Self::sup_plus_integral(&self.u, &self.h, self.dt, j)
    }

    /// `sup_{r ≤ t_j} ‖Ψ_r‖²_H + Σ_{i<j} ‖Ψ_{t_i}‖²_V dt`.
    pub fn hv_at(&self, j: usize) -> f64 {
        Self::sup_plus_integral(&self.h, &self.v, self.dt, j)
    }

    pub fn uh(&self, t: f64) -> Result<f64> {
        Ok(self.uh_at(self.index_at(t)?))
    }

    pub fn hv(&self, t: f64) -> Result<f64> {
        Ok(self.hv_at(self.index_at(t)?))
    }

    /// Running UH functional at every grid point.
    pub fn uh_running(&self) -> Vec<f64> {
        running(&self.u, &self.h, self.dt)
    }

    pub fn hv_running(&self) -> Vec<f64> {
        running(&self.h, &self.v, self.dt)
    }
}

fn running(sup: &[f64], int: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(sup.len());
    let mut s: f64 = 0.0;
    let mut acc = 0.0;
    for j in 0..sup.len() {
        if j > 0 {
            acc += int[j - 1] * dt;
        }
        s = s.max(sup[j]);
        out.push(s + acc);
    }
    out
}

//! Growth, coercivity and continuity inequalities imposed on `(A, G)`, evaluated
//! on sample fields.
//!
//! Every inequality is written as `lhs ≤ c·majorant − γ·gamma_weight + ε·eps_weight`
//! and a witness reports `margin = rhs − lhs`. Fitting picks the smallest `c`
//! that makes every sampled margin nonnegative and, for the coercive
//! inequalities, the largest `γ` compatible with twice that `c`. `H̄` is taken
//! to be `H` on the torus.

use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::{Calculus, OperatorPair, Workspace};
use crate::spaces::{GrowthProfile, ModeIndex, Space, SpectralField};
use crate::stats::slope;
use crate::{Error, Result};

/// `ε` of the last inequality of set 3.
pub const EPSILON: f64 = 0.1;
/// Exponent on `‖·‖_H` in the first tightness inequality.
pub const TIGHTNESS_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AssumptionId {
    A1_1a,
    A1_1b,
    A1_1c,
    A1_2a,
    A1_2b,
    A1_3a,
    A1_3b,
    A1_4a,
    A1_4b,
    A2_1,
    A2_2a,
    A2_2b,
    A3_1,
    A3_2a,
    A3_2b,
}

use AssumptionId::*;

impl AssumptionId {
    pub const ALL: [AssumptionId; 15] =
        [A1_1a, A1_1b, A1_1c, A1_2a, A1_2b, A1_3a, A1_3b, A1_4a, A1_4b, A2_1, A2_2a, A2_2b, A3_1, A3_2a, A3_2b];

    pub fn set(self) -> u8 {
        match self {
            A2_1 | A2_2a | A2_2b => 2,
            A3_1 | A3_2a | A3_2b => 3,
            _ => 1,
        }
    }

    pub fn in_set(set: u8) -> impl Iterator<Item = AssumptionId> {
        Self::ALL.into_iter().filter(move |a| a.set() == set)
    }

    /// True for the inequalities carrying a `−γ` term.
    pub fn is_coercive(self) -> bool {
        matches!(self, A1_2a | A2_2a | A3_2a)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            A1_1a => "A1.1a",
            A1_1b => "A1.1b",
            A1_1c => "A1.1c",
            A1_2a => "A1.2a",
            A1_2b => "A1.2b",
            A1_3a => "A1.3a",
            A1_3b => "A1.3b",
            A1_4a => "A1.4a",
            A1_4b => "A1.4b",
            A2_1 => "A2.1",
            A2_2a => "A2.2a",
            A2_2b => "A2.2b",
            A3_1 => "A3.1",
            A3_2a => "A3.2a",
            A3_2b => "A3.2b",
        }
    }
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssumptionId {
    type Err = Error;

    /// Accepts the exact tags and, for single-part displays, the bare tag (`A1.2` → `A1.2a`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(a) = Self::ALL.into_iter().find(|a| a.as_str() == s) {
            return Ok(a);
        }
        let with_a = format!("{s}a");
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == with_a)
            .ok_or_else(|| Error::UnknownAssumption(s.to_string()))
    }
}

/// The pieces of one inequality at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Terms {
    pub lhs: f64,
    pub majorant: f64,
    pub gamma_weight: f64,
    pub eps_weight: f64,
}

impl Terms {
    pub fn rhs(&self, c: f64, gamma: f64) -> f64 {
        c * self.majorant - gamma * self.gamma_weight + EPSILON * self.eps_weight
    }

    pub fn margin(&self, c: f64, gamma: f64) -> f64 {
        self.rhs(c, gamma) - self.lhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub id: AssumptionId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Three fields `(x, y, z)` on a common band with the operator evaluated at each.
#[derive(Debug, Clone)]
pub struct EvaluatedSample {
    pub fields: [SpectralField; 3],
    pub amplitude: f64,
    drift: Vec<SpectralField>,
    cols: Vec<Vec<SpectralField>>,
}

impl EvaluatedSample {
    pub fn new(pair: &OperatorPair, fields: [SpectralField; 3], amplitude: f64, ws: &mut Workspace) -> Self {
        let mut drift = Vec::with_capacity(3);
        let mut cols = Vec::with_capacity(3);
        for f in &fields {
            let ev = pair.evaluate(0.0, f, ws, Calculus::Ito);
            drift.push(ev.drift);
            cols.push(ev.columns);
        }
        Self { fields, amplitude, drift, cols }
    }

    pub fn terms(&self, id: AssumptionId, profile: GrowthProfile) -> Terms {
        let [x, y, z] = &self.fields;
        let (ax, ay, az) = (&self.drift[0], &self.drift[1], &self.drift[2]);
        let (gx, gy, gz) = (&self.cols[0], &self.cols[1], &self.cols[2]);
        let n = |f: &SpectralField, s: Space| f.norm(s);
        let k = |s: Space, fs: &[&SpectralField]| 1.0 + fs.iter().map(|f| profile.power(n(f, s))).sum::<f64>();
        let sum_sq = |cols: &[SpectralField], s: Space| cols.iter().map(|g| g.norm_sq(s)).sum::<f64>();
        let diff_sq = |a: &[SpectralField], b: &[SpectralField], s: Space| {
            a.iter().zip(b).map(|(p, q)| p.difference(q).norm_sq(s)).sum::<f64>()
        };
        let pair_sq = |cols: &[SpectralField], w: &SpectralField, s: Space| {
            cols.iter().map(|g| g.inner(w, s).powi(2)).sum::<f64>()
        };
        let plain = |lhs: f64, majorant: f64| Terms { lhs, majorant, gamma_weight: 0.0, eps_weight: 0.0 };
        let q = TIGHTNESS_EXPONENT;
        match id {
            A1_1a => plain(n(ax, Space::HStar) + sum_sq(gx, Space::U), k(Space::U, &[x]) * (1.0 + x.norm_sq(Space::H))),
            A1_1b => plain(ax.difference(ay).norm_sq(Space::U), k(Space::V, &[x, y]) * x.difference(y).norm_sq(Space::V)),
            A1_1c => plain(diff_sq(gx, gy, Space::U), k(Space::V, &[x, y]) * x.difference(y).norm_sq(Space::H)),
            A1_2a => Terms {
                lhs: 2.0 * ax.inner(x, Space::U) + sum_sq(gx, Space::U),
                majorant: 1.0 + x.norm_sq(Space::U),
                gamma_weight: x.norm_sq(Space::H),
                eps_weight: 0.0,
            },
            A1_2b => plain(pair_sq(gx, x, Space::U), 1.0 + x.norm_sq(Space::U).powi(2)),
            A1_3a => plain(
                ax.inner(z, Space::U).abs(),
                (k(Space::U, &[x]) + n(x, Space::H).powf(q)) * (k(Space::U, &[z]) + n(z, Space::H).powf(q)),
            ),
            A1_3b => plain(pair_sq(gx, z, Space::U), k(Space::U, &[x]) * k(Space::H, &[z])),
            A1_4a => plain(
                ax.difference(az).inner(y, Space::U).abs(),
                k(Space::V, &[y]) * (1.0 + n(x, Space::H) + n(z, Space::H)) * x.difference(z).norm(Space::U),
            ),
            A1_4b => {
                let lhs = gx.iter().zip(gz).map(|(p, r)| p.difference(r).inner(y, Space::U).powi(2)).sum();
                plain(lhs, k(Space::V, &[y]) * x.difference(z).norm_sq(Space::U))
            }
            A2_1 => plain(ax.norm_sq(Space::HStar), k(Space::U, &[x]) * (1.0 + x.norm_sq(Space::H))),
            A2_2a => {
                let d = x.difference(y);
                Terms {
                    lhs: 2.0 * ax.difference(ay).inner(&d, Space::U) + diff_sq(gx, gy, Space::U),
                    majorant: k(Space::U, &[x, y])
                        * (1.0 + x.norm_sq(Space::H) + y.norm_sq(Space::H))
                        * d.norm_sq(Space::U),
                    gamma_weight: d.norm_sq(Space::H),
                    eps_weight: 0.0,
                }
            }
            A2_2b => {
                let d = x.difference(y);
                let lhs = gx.iter().zip(gy).map(|(p, r)| p.difference(r).inner(&d, Space::U).powi(2)).sum();
                plain(
                    lhs,
                    k(Space::U, &[x, y]) * (1.0 + x.norm_sq(Space::H) + y.norm_sq(Space::H)) * d.norm_sq(Space::U).powi(2),
                )
            }
            A3_1 => plain(
                ax.norm_sq(Space::U) + sum_sq(gx, Space::HBar),
                k(Space::U, &[x]) * (1.0 + x.norm_sq(Space::H).powi(2) + x.norm_sq(Space::V)),
            ),
            A3_2a => Terms {
                lhs: 2.0 * ax.inner(x, Space::H) + sum_sq(gx, Space::H),
                majorant: k(Space::U, &[x]) * (1.0 + x.norm_sq(Space::H).powi(2)),
                gamma_weight: x.norm_sq(Space::V),
                eps_weight: 0.0,
            },
            A3_2b => Terms {
                lhs: pair_sq(gx, x, Space::H),
                majorant: k(Space::U, &[x]) * (1.0 + x.norm_sq(Space::H).powi(3)),
                gamma_weight: 0.0,
                eps_weight: x.norm_sq(Space::V),
            },
        }
    }
}

/// `assumption_witness`: `rhs − lhs` of inequality `id` at `(c, γ)` for the given fields.
///
/// Missing fields default to the first one (so single-field inequalities need one).
pub fn assumption_witness(
    pair: &OperatorPair,
    id: AssumptionId,
    fields: &[&SpectralField],
    c: f64,
    gamma: f64,
    profile: GrowthProfile,
    ws: &mut Workspace,
) -> Result<Witness> {
    let first = fields.first().ok_or_else(|| Error::invalid("at least one sample field is required"))?;
    let band = first.band();
    if fields.iter().any(|f| f.band() != band) {
        return Err(Error::invalid("sample fields must share one band"));
    }
    for f in fields {
        f.validate_state()?;
    }
    let pick = |i: usize| (*fields.get(i).unwrap_or(first)).clone();
    let sample = EvaluatedSample::new(pair, [pick(0), pick(1), pick(2)], first.norm(Space::U), ws);
    let t = sample.terms(id, profile);
    Ok(Witness { id, lhs: t.lhs, rhs: t.rhs(c, gamma), margin: t.margin(c, gamma) })
}

/// Result of fitting one inequality over a sample set.
#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub id: AssumptionId,
    pub c: f64,
    pub gamma: f64,
    pub worst_margin: f64,
    /// Slope of log(largest needed `c`) against log amplitude over the upper half of the amplitude range.
    pub growth_slope: f64,
    pub finite: bool,
    pub samples: usize,
}

/// Slope above which the needed constant is deemed to grow without bound.
pub const GROWTH_SLOPE_LIMIT: f64 = 0.25;

pub fn fit(id: AssumptionId, samples: &[EvaluatedSample], profile: GrowthProfile) -> Result<Fit> {
    let amplitudes: Vec<f64> = samples.iter().map(|s| s.amplitude).collect();
    let terms: Vec<Terms> = samples.iter().map(|s| s.terms(id, profile)).collect();
    fit_terms(id, &amplitudes, &terms)
}

/// [`fit`] on precomputed terms, one amplitude per sample.
pub fn fit_terms(id: AssumptionId, amplitudes: &[f64], terms: &[Terms]) -> Result<Fit> {
    if terms.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let needed = |t: &Terms| {
        let excess = t.lhs - EPSILON * t.eps_weight;
        if t.majorant > 0.0 {
            excess / t.majorant
        } else if excess > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let c0 = terms.iter().map(needed).fold(0.0, f64::max);
    let (c, gamma) = if id.is_coercive() {
        let c = 2.0 * c0;
        let gamma = terms
            .iter()
            .filter(|t| t.gamma_weight > 0.0)
            .map(|t| (c * t.majorant - t.lhs) / t.gamma_weight)
            .fold(f64::INFINITY, f64::min);
        (c, if gamma.is_finite() { gamma.max(0.0) } else { 0.0 })
    } else {
        (c0, 0.0)
    };
    let worst_margin = terms.iter().map(|t| t.margin(c, gamma)).fold(f64::INFINITY, f64::min);

    // growth of the needed constant with amplitude: the largest need at each
    // distinct amplitude, regressed over the upper half of the log range.
    // With paired shapes (see `sample_fields`) only the scaling moves the
    // per-amplitude maximum, not which shapes happened to be drawn.
    let mut pts: Vec<(f64, f64)> = amplitudes.iter().zip(terms).map(|(a, t)| (a.ln(), needed(t))).collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (x, v) in pts {
        match groups.last_mut() {
            Some(g) if g.0 == x => g.1 = g.1.max(v),
            _ => groups.push((x, v)),
        }
    }
    let mid = 0.5 * (groups[0].0 + groups[groups.len() - 1].0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = groups
        .into_iter()
        .filter(|&(x, v)| x >= mid && v > 0.0 && v.is_finite())
        .map(|(x, v)| (x, v.ln()))
        .unzip();
    let growth_slope = if xs.len() >= 2 { slope(&xs, &ys) } else { 0.0 };
    let finite = c.is_finite() && gamma.is_finite() && growth_slope <= GROWTH_SLOPE_LIMIT;
    Ok(Fit { id, c, gamma, worst_margin, growth_slope, finite, samples: terms.len() })
}

/// Amplitudes per sample shape, log-spaced over `[1e-2, 1e2]`.
pub const AMPLITUDE_LADDER: usize = 9;

/// Random sample triples over `levels`.
///
/// Each shape (a triple of unit fields) is drawn once and reused at every
/// rung of a log-spaced amplitude ladder on `[1e-2, 1e2]`, so growth in
/// amplitude is measured on identical shapes. Broadband fields alternate with
/// sparse ones (a few random modes, single modes, and single modes at
/// `|k| = 1`), so both ends of the spectrum are represented.
pub fn sample_fields(count: usize, levels: &[usize], seed: u64) -> Vec<([SpectralField; 3], f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape: Option<[SpectralField; 3]> = None;
    (0..count)
        .map(|j| {
            let (s, rung) = (j / AMPLITUDE_LADDER, j % AMPLITUDE_LADDER);
            if rung == 0 {
                let band = levels[s % levels.len()];
                let draw = |rng: &mut ChaCha8Rng| match s % 4 {
                    0 => SpectralField::random_solenoidal(band, 1.0, 1.0, rng),
                    1 => sparse(band, 1 + rng.random_range(0..3), 1.0, rng),
                    2 => sparse(band, 1, 1.0, rng),
                    _ => {
                        let k = if rng.random::<bool>() { ModeIndex::new(1, 0) } else { ModeIndex::new(0, 1) };
                        let phase = rng.random_range(0.0..std::f64::consts::TAU);
                        SpectralField::solenoidal_mode(band, k.expect("unit mode"), Complex64::from_polar(1.0, phase))
                    }
                };
                shape = Some([draw(&mut rng), draw(&mut rng), draw(&mut rng)]);
            }
            let amplitude = 10f64.powf(-2.0 + 4.0 * rung as f64 / (AMPLITUDE_LADDER - 1) as f64);
            let [x, y, z] = shape.as_ref().expect("drawn at rung 0");
            ([x.scaled(amplitude), y.scaled(amplitude), z.scaled(amplitude)], amplitude)
        })
        .collect()
}

fn sparse(band: usize, modes: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let b = band as i32;
    let mut f = SpectralField::zeros(band);
    let mut placed = 0;
    while placed < modes {
        let k = match ModeIndex::new(rng.random_range(-b..=b), rng.random_range(-b..=b)) {
            Some(k) => k,
            None => continue,
        };
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let add = SpectralField::solenoidal_mode(band, k, Complex64::new(re, im));
        f.axpy(1.0, &add);
        placed += 1;
    }
    let n = f.norm(Space::U);
    if n > 0.0 {
        f.scale(amplitude / n);
    }
    f
}

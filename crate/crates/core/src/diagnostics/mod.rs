//! Seeded Monte-Carlo studies of the uniform estimates behind the Galerkin
//! construction.
//!
//! Every study fans paths out over a rayon pool. Path `i` always uses the
//! seed `path_seed(master_seed, i)`, whatever the level, so estimates at
//! different levels are paired and the result does not depend on scheduling.
//! Per-path values are kept in index order and reduced with pairwise sums.

mod audit;
mod checks;
mod report;
mod studies;

use rayon::prelude::*;
use serde_json::json;

use crate::engine::{path_seed, steps_for, CutoffPolicy, InitialCondition, Scheme};
use crate::operators::{OperatorPair, Workspace};
use crate::spaces::ModeIndex;
use crate::stats::MeanEstimate;
use crate::{Error, Result};

pub use audit::{assumption_audit, AuditConfig};
pub use checks::{energy_check, paired_terminal_means, strat_ito_check, PairedTerminal};
pub use report::{EstimateReport, ReportRow, CSV_HEADER};
pub use studies::{
    cauchy_convergence_study, equicontinuity_study, functional_tightness_study, hitting_probability_study,
    cauchy_lambda, hv_bound_study, increment_tightness_study, moment_bound_study,
};

/// Which stopping time a functional or equicontinuity increment starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// `τ ∧ T`, the path's own hitting time.
    HitTime,
    /// `θ ∧ τ ∧ T` for a deterministic `θ`.
    Fixed(f64),
}

impl StoppingRule {
    pub fn describe(&self) -> String {
        match self {
            StoppingRule::HitTime => "hit".to_string(),
            StoppingRule::Fixed(t) => format!("fixed:{t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub pair: OperatorPair,
    pub initial: InitialCondition,
    /// Galerkin levels the "sup over n" runs over.
    pub levels: Vec<usize>,
    pub paths: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// `M` for the stopped studies.
    pub threshold: f64,
    /// Cutoff level `R` of the stopped runs.
    pub cutoff: CutoffPolicy,
    /// `M` list of the hitting study, increasing.
    pub thresholds: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Coarse levels `m` of the Cauchy study.
    pub cauchy_levels: Vec<usize>,
    /// Partner levels are `factor · m`.
    pub cauchy_factors: Vec<usize>,
    pub probe: ModeIndex,
    pub stopping: StoppingRule,
    /// Ceiling on `sup_n P(τ ≤ T)` at the largest `M`.
    pub hit_ceiling: f64,
    /// Allowed relative spread around the median for the uniform bounds.
    pub uniformity: f64,
    /// Largest tolerated fraction of blown-up paths.
    pub blowup_tolerance: f64,
}

impl EnsembleConfig {
    /// Defaults for everything but the model.
    pub fn new(pair: OperatorPair, initial: InitialCondition) -> Self {
        Self {
            pair,
            initial,
            levels: vec![4, 8, 16],
            paths: 100,
            master_seed: 0,
            dt: 1e-3,
            horizon: 0.5,
            scheme: Scheme::EulerIto,
            threshold: 16.0,
            cutoff: CutoffPolicy::Auto,
            thresholds: vec![2.0, 4.0, 8.0, 16.0],
            deltas: vec![0.08, 0.04, 0.02, 0.01],
            cauchy_levels: vec![4, 8, 16],
            cauchy_factors: vec![2],
            probe: ModeIndex::new(1, 0).expect("non-zero mode"),
            stopping: StoppingRule::Fixed(0.25),
            hit_ceiling: 0.05,
            uniformity: 0.10,
            blowup_tolerance: 0.01,
        }
    }

    pub fn steps(&self) -> Result<usize> {
        steps_for(self.horizon, self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::invalid(format!("an ensemble needs at least 2 paths, got {}", self.paths)));
        }
        self.steps()?;
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::invalid("levels must be a non-empty list of positive integers"));
        }
        if !(self.threshold > 1.0) {
            return Err(Error::invalid(format!("threshold M must satisfy M > 1, got {}", self.threshold)));
        }
        if self.thresholds.iter().any(|m| !(*m > 1.0)) {
            return Err(Error::invalid("every M in the threshold list must satisfy M > 1"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("the threshold list must be strictly increasing"));
        }
        if let CutoffPolicy::Fixed(r) = self.cutoff {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("cutoff level R must be positive, got {r}")));
            }
        }
        for &d in &self.deltas {
            self.delta_steps(d)?;
        }
        if self.cauchy_levels.windows(2).any(|w| w[0] >= w[1]) || self.cauchy_levels.contains(&0) {
            return Err(Error::invalid("Cauchy levels must be positive and strictly increasing"));
        }
        if self.cauchy_factors.iter().any(|&f| f < 1) {
            return Err(Error::invalid("Cauchy factors must be at least 1"));
        }
        if let StoppingRule::Fixed(t) = self.stopping {
            if !(t >= 0.0) {
                return Err(Error::invalid(format!("stopping time θ must be nonnegative, got {t}")));
            }
            self.grid_index(t.min(self.horizon))?;
        }
        Ok(())
    }

    /// `δ / dt`, requiring `δ ∈ (0, T)` on the time grid.
    pub fn delta_steps(&self, delta: f64) -> Result<usize> {
        if !(delta > 0.0 && delta < self.horizon) {
            return Err(Error::invalid(format!("δ = {delta} must lie in (0, T = {})", self.horizon)));
        }
        self.grid_index(delta).map_err(|_| Error::invalid(format!("δ = {delta} is not a multiple of dt = {}", self.dt)))
    }

    fn grid_index(&self, t: f64) -> Result<usize> {
        let r = t / self.dt;
        if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::invalid(format!("time {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(r.round() as usize)
    }

    /// Scalar parameters, echoed into every report.
    pub fn echo(&self) -> serde_json::Value {
        json!({
            "kind": self.pair.kind().as_str(),
            "viscosity": self.pair.viscosity(),
            "noise_modes": self.pair.noise_count(),
            "levels": self.levels,
            "paths": self.paths,
            "master_seed": self.master_seed,
            "dt": self.dt,
            "T": self.horizon,
            "scheme": self.scheme.as_str(),
            "M": self.threshold,
            "R": match self.cutoff {
                CutoffPolicy::Auto => json!("auto"),
                CutoffPolicy::Inactive => json!("inactive"),
                CutoffPolicy::Fixed(r) => json!(r),
            },
            "M_list": self.thresholds,
            "deltas": self.deltas,
            "cauchy_levels": self.cauchy_levels,
            "cauchy_factors": self.cauchy_factors,
            "probe": [self.probe.kx, self.probe.ky],
            "stopping": self.stopping.describe(),
            "initial_bound": self.initial.bound(),
        })
    }
}

/// Per-path values of one ensemble, blown-up paths removed and counted.
#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    /// `(path index, value)` in index order.
    pub values: Vec<(usize, T)>,
    pub blowups: usize,
    pub paths: usize,
}

impl<T> Ensemble<T> {
    pub fn blowup_fraction(&self) -> f64 {
        self.blowups as f64 / self.paths as f64
    }
}

/// Runs `f(seed, workspace)` for paths `0..paths` in parallel.
///
/// Blow-ups are counted; any other error aborts the ensemble.
pub fn run_ensemble<T, F>(paths: usize, master_seed: u64, f: F) -> Result<Ensemble<T>>
where
    T: Send,
    F: Fn(u64, &mut Workspace) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..paths)
        .into_par_iter()
        .map_init(Workspace::new, |ws, i| f(path_seed(master_seed, i as u64), ws))
        .collect();
    let mut values = Vec::with_capacity(paths);
    let mut blowups = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push((i, v)),
            Err(Error::Blowup { .. }) => blowups += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(Ensemble { values, blowups, paths })
}

/// Mean and standard error of `pick` over an ensemble.
pub(crate) fn estimate<T>(e: &Ensemble<T>, pick: impl Fn(&T) -> f64) -> MeanEstimate {
    let xs: Vec<f64> = e.values.iter().map(|(_, v)| pick(v)).collect();
    MeanEstimate::from_samples(&xs)
}

/// Mean and standard error of `b − a` over the paths present in both ensembles.
pub(crate) fn paired_difference(a: &[(usize, f64)], b: &[(usize, f64)]) -> MeanEstimate {
    let mut d = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                d.push(b[j].1 - a[i].1);
                i += 1;
                j += 1;
            }
        }
    }
    MeanEstimate::from_samples(&d)
}

/// Monotone contract with a 2-standard-error slack: moving from `a` to `b`
/// must not be a significant increase. Returns the slack left.
pub(crate) fn nonincreasing_margin(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let d = paired_difference(a, b);
    let se = if d.std_error.is_finite() { d.std_error } else { 0.0 };
    2.0 * se - d.mean
}

#[cfg(test)]
mod tests;

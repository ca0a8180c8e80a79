use rayon::prelude::*;
use serde_json::json;

use super::{EstimateReport, ReportRow};
use crate::operators::assumptions::{fit, sample_fields, AssumptionId, EvaluatedSample, Fit, GROWTH_SLOPE_LIMIT};
use crate::operators::{OperatorPair, Workspace};
use crate::spaces::GrowthProfile;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Assumption sets to sweep, each in `{1, 2, 3}`.
    pub sets: Vec<u8>,
    pub samples: usize,
    pub levels: Vec<usize>,
    pub seed: u64,
    pub profile: GrowthProfile,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { sets: vec![1, 2, 3], samples: 500, levels: vec![4, 8, 16], seed: 0, profile: GrowthProfile::default() }
    }
}

/// Fits every inequality of the requested sets over random sample fields.
///
/// CSV rows carry the inequality id as `parameter`, the fitted `γ` as
/// `value` and the fitted `c` as `estimate`; `pass` means a finite fit.
pub fn assumption_audit(pair: &OperatorPair, audit: &AuditConfig) -> Result<EstimateReport> {
    if audit.samples == 0 {
        return Err(Error::invalid("the assumption audit needs a non-empty sample set"));
    }
    if audit.samples < 100 {
        return Err(Error::invalid(format!("the assumption audit needs at least 100 samples, got {}", audit.samples)));
    }
    if audit.sets.is_empty() || audit.sets.iter().any(|s| !(1..=3).contains(s)) {
        return Err(Error::invalid("assumption sets must be drawn from {1, 2, 3}"));
    }
    if audit.levels.is_empty() || audit.levels.contains(&0) {
        return Err(Error::invalid("audit levels must be positive"));
    }
    let evaluated: Vec<EvaluatedSample> = sample_fields(audit.samples, &audit.levels, audit.seed)
        .into_par_iter()
        .map_init(Workspace::new, |ws, (f, a)| EvaluatedSample::new(pair, f, a, ws))
        .collect();
    let fits: Vec<Fit> = audit
        .sets
        .iter()
        .flat_map(|&s| AssumptionId::in_set(s))
        .map(|id| fit(id, &evaluated, audit.profile))
        .collect::<Result<_>>()?;
    let rows = fits
        .iter()
        .map(|f| ReportRow {
            level: 0,
            parameter: f.id.to_string(),
            value: f.gamma,
            estimate: f.c,
            std_error: f64::NAN,
            paths: f.samples,
            pass: f.finite,
        })
        .collect();
    let pass = fits.iter().all(|f| f.finite);
    let max_c = fits.iter().map(|f| f.c).fold(0.0, f64::max);
    let steepest = fits.iter().map(|f| f.growth_slope).fold(f64::NEG_INFINITY, f64::max);
    Ok(EstimateReport {
        estimator: "assumption_audit".to_string(),
        estimate: max_c,
        std_error: f64::NAN,
        paths: audit.samples,
        blowups: 0,
        levels: audit.levels.clone(),
        rows,
        pass,
        margin: GROWTH_SLOPE_LIMIT - steepest,
        extra: json!({
            "kind": pair.kind().as_str(),
            "sets": audit.sets,
            "growth_exponent": audit.profile.exponent(),
            "seed": audit.seed,
            "fits": fits,
        }),
        config: json!({
            "kind": pair.kind().as_str(),
            "viscosity": pair.viscosity(),
            "noise_modes": pair.noise_count(),
            "samples": audit.samples,
            "levels": audit.levels,
        }),
    })
}

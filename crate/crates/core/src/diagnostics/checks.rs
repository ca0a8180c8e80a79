//! Scheme-level checks: the discrete Itô energy balance and the agreement of
//! the Stratonovich Heun scheme with the Itô scheme plus corrector.
//!
//! Both run every path at `dt` and `dt/2` on one Brownian path: the coarse
//! run sums pairs of the fine increments.

use serde_json::json;

use super::{run_ensemble, EnsembleConfig, EstimateReport, ReportRow};
use crate::engine::{energy_identity_residual, simulate_path, CutoffPolicy, PathConfig, Scheme};
use crate::spaces::{Space, SpectralField};
use crate::stats::{pairwise_sum, MeanEstimate};
use crate::{Error, Result};

/// Accepted range of `rms(dt) / rms(dt/2)` for an `O(dt)` residual.
pub const ENERGY_RATIO_RANGE: (f64, f64) = (1.7, 2.3);

fn plain_config(cfg: &EnsembleConfig, level: usize, dt: f64, substeps: usize) -> Result<PathConfig> {
    let pc = PathConfig::new(level, dt, cfg.horizon)?;
    let steps = pc.steps;
    Ok(pc.with_cutoff(CutoffPolicy::Inactive).with_substeps(substeps).with_stride(steps)?)
}

/// `energy_check`: RMS over paths of the terminal energy-identity residual
/// at `dt` and `dt/2`, and their ratio.
pub fn energy_check(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let (lo, hi) = ENERGY_RATIO_RANGE;
    let mut rows = Vec::new();
    let mut per_level = Vec::new();
    let mut margin = f64::INFINITY;
    let mut blowups = 0;
    let mut paths = usize::MAX;
    let mut first = None;
    for &n in &cfg.levels {
        let coarse = plain_config(cfg, n, cfg.dt, 2)?.with_energy();
        let fine = plain_config(cfg, n, 0.5 * cfg.dt, 1)?.with_energy();
        let e = run_ensemble(cfg.paths, cfg.master_seed, |seed, ws| {
            let initial = cfg.initial.sample(seed);
            let mut last = [0.0; 2];
            for (slot, pc) in last.iter_mut().zip([&coarse, &fine]) {
                let rec = simulate_path(&cfg.pair, pc, &initial, seed, ws)?;
                *slot = *energy_identity_residual(&rec, &cfg.pair, ws)?.last().expect("non-empty");
            }
            Ok(last)
        })?;
        blowups += e.blowups;
        paths = paths.min(e.values.len());
        let rms = |i: usize| {
            let sq: Vec<f64> = e.values.iter().map(|(_, v)| v[i] * v[i]).collect();
            let ms = MeanEstimate::from_samples(&sq);
            let r = ms.mean.sqrt();
            let se = if r > 0.0 { ms.std_error / (2.0 * r) } else { 0.0 };
            MeanEstimate { mean: r, std_error: se, count: ms.count }
        };
        let (a, b) = (rms(0), rms(1));
        let ratio = a.mean / b.mean;
        let ratio_se = ratio * ((a.std_error / a.mean).powi(2) + (b.std_error / b.mean).powi(2)).sqrt();
        let ok = (lo..=hi).contains(&ratio);
        margin = margin.min((ratio - lo).min(hi - ratio));
        for (dt, est) in [(cfg.dt, a), (0.5 * cfg.dt, b)] {
            rows.push(ReportRow {
                level: n,
                parameter: "dt".to_string(),
                value: dt,
                estimate: est.mean,
                std_error: est.std_error,
                paths: est.count,
                pass: ok,
            });
        }
        first.get_or_insert((ratio, ratio_se));
        per_level.push(json!({ "level": n, "rms_dt": a.mean, "rms_half_dt": b.mean, "ratio": ratio, "ratio_se": ratio_se }));
    }
    if margin.is_nan() {
        margin = f64::NEG_INFINITY;
    }
    let (ratio, ratio_se) = first.expect("levels validated non-empty");
    Ok(EstimateReport {
        estimator: "energy_identity".to_string(),
        estimate: ratio,
        std_error: ratio_se,
        paths,
        blowups,
        levels: cfg.levels.clone(),
        rows,
        pass: margin >= 0.0 && blowups as f64 <= cfg.blowup_tolerance * (cfg.paths * cfg.levels.len()) as f64,
        margin,
        extra: json!({ "ratio_range": [lo, hi], "per_level": per_level }),
        config: cfg.echo(),
    })
}

/// Terminal means of the two schemes on paired seeds.
#[derive(Debug, Clone)]
pub struct PairedTerminal {
    pub ito_mean: SpectralField,
    pub heun_mean: SpectralField,
    /// Vector standard errors `sqrt(Σ‖X_i − X̄‖²_U / (N(N−1)))`.
    pub ito_se: f64,
    pub heun_se: f64,
    /// `‖E Ψ^{heun}_T − E Ψ^{ito}_T‖_U`.
    pub gap: f64,
    /// Vector standard error of the paired difference.
    pub gap_se: f64,
    pub paths: usize,
    pub blowups: usize,
}

fn vector_mean(xs: &[&SpectralField]) -> (SpectralField, f64) {
    let n = xs.len();
    let mut mean = SpectralField::zeros(xs[0].band());
    for x in xs {
        mean.axpy(1.0 / n as f64, x);
    }
    let dev: Vec<f64> = xs.iter().map(|x| x.difference(&mean).norm_sq(Space::U)).collect();
    let se = if n > 1 { (pairwise_sum(&dev) / (n * (n - 1)) as f64).sqrt() } else { 0.0 };
    (mean, se)
}

/// Runs Euler–Itô and Heun–Stratonovich on the same seeds and compares terminal means.
pub fn paired_terminal_means(cfg: &EnsembleConfig, level: usize, dt: f64, substeps: usize) -> Result<PairedTerminal> {
    let ito = plain_config(cfg, level, dt, substeps)?;
    let heun = ito.clone().with_scheme(Scheme::HeunStratonovich);
    let e = run_ensemble(cfg.paths, cfg.master_seed, |seed, ws| {
        let initial = cfg.initial.sample(seed);
        let a = simulate_path(&cfg.pair, &ito, &initial, seed, ws)?;
        let b = simulate_path(&cfg.pair, &heun, &initial, seed, ws)?;
        Ok((a.terminal().clone(), b.terminal().clone()))
    })?;
    if e.values.len() < 2 {
        return Err(Error::invalid("fewer than two paths survived"));
    }
    let ito_t: Vec<&SpectralField> = e.values.iter().map(|(_, v)| &v.0).collect();
    let heun_t: Vec<&SpectralField> = e.values.iter().map(|(_, v)| &v.1).collect();
    let diffs: Vec<SpectralField> = e.values.iter().map(|(_, v)| v.1.difference(&v.0)).collect();
    let (ito_mean, ito_se) = vector_mean(&ito_t);
    let (heun_mean, heun_se) = vector_mean(&heun_t);
    let (d, gap_se) = vector_mean(&diffs.iter().collect::<Vec<_>>());
    Ok(PairedTerminal {
        ito_mean,
        heun_mean,
        ito_se,
        heun_se,
        gap: d.norm(Space::U),
        gap_se,
        paths: e.values.len(),
        blowups: e.blowups,
    })
}

/// `strat_ito_check`: paired-seed terminal-mean gap between the schemes at
/// `dt` and `dt/2`. Passes when both gaps are within three standard errors
/// of zero and the halved gap is within three standard errors of half the
/// coarse one or below.
pub fn strat_ito_check(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    if cfg.pair.salt().is_none() {
        return Err(Error::invalid("strat-ito-check needs the salt-ns kind"));
    }
    let mut rows = Vec::new();
    let mut per_level = Vec::new();
    let mut margin = f64::INFINITY;
    let mut blowups = 0;
    let mut paths = usize::MAX;
    let mut first = None;
    for &n in &cfg.levels {
        let a = paired_terminal_means(cfg, n, cfg.dt, 2)?;
        let b = paired_terminal_means(cfg, n, 0.5 * cfg.dt, 1)?;
        blowups += a.blowups + b.blowups;
        paths = paths.min(a.paths).min(b.paths);
        let m = (3.0 * a.gap_se - a.gap).min(3.0 * b.gap_se - b.gap).min(0.5 * a.gap + 3.0 * b.gap_se - b.gap);
        margin = margin.min(m);
        for (dt, p) in [(cfg.dt, &a), (0.5 * cfg.dt, &b)] {
            rows.push(ReportRow {
                level: n,
                parameter: "dt".to_string(),
                value: dt,
                estimate: p.gap,
                std_error: p.gap_se,
                paths: p.paths,
                pass: p.gap <= 3.0 * p.gap_se,
            });
        }
        first.get_or_insert((a.gap, a.gap_se));
        per_level.push(json!({
            "level": n,
            "gap_dt": a.gap,
            "gap_half_dt": b.gap,
            "se_dt": a.gap_se,
            "se_half_dt": b.gap_se,
            "ito_mean_norm": a.ito_mean.norm(Space::U),
            "heun_mean_norm": a.heun_mean.norm(Space::U),
        }));
    }
    let (gap, se) = first.expect("levels validated non-empty");
    Ok(EstimateReport {
        estimator: "strat_ito".to_string(),
        estimate: gap,
        std_error: se,
        paths,
        blowups,
        levels: cfg.levels.clone(),
        rows,
        pass: margin >= 0.0 && blowups as f64 <= cfg.blowup_tolerance * (2 * cfg.paths * cfg.levels.len()) as f64,
        margin,
        extra: json!({ "per_level": per_level }),
        config: cfg.echo(),
    })
}

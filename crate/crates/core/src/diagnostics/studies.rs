//! Ensemble studies over the level list: uniform moment bounds, hitting
//! probabilities, increment tightness, Cauchy convergence and equicontinuity.

use serde_json::json;

use super::{estimate, nonincreasing_margin, run_ensemble, EnsembleConfig, Ensemble, EstimateReport, ReportRow, StoppingRule};
use crate::engine::{coupled_pair, simulate_path, CutoffPolicy, PathConfig, PathRecord};
use crate::spaces::{Space, SpectralField, TripleWeights};
use crate::stats::{median, MeanEstimate};
use crate::{Error, Result};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Path settings shared by the studies. `threshold = None` runs the plain
/// Galerkin system with the cutoff switched off.
fn path_config(cfg: &EnsembleConfig, level: usize, threshold: Option<f64>, stride: usize) -> Result<PathConfig> {
    let pc = PathConfig::new(level, cfg.dt, cfg.horizon)?.with_scheme(cfg.scheme).with_stride(stride)?;
    match threshold {
        Some(m) => Ok(pc.with_threshold(m)?.with_cutoff(cfg.cutoff)),
        None => Ok(pc.with_cutoff(CutoffPolicy::Inactive)),
    }
}

fn blowups_ok(cfg: &EnsembleConfig, blowups: usize, paths: usize) -> bool {
    blowups as f64 <= cfg.blowup_tolerance * paths as f64
}

fn row(level: usize, parameter: &str, value: f64, e: MeanEstimate, pass: bool) -> ReportRow {
    ReportRow {
        level,
        parameter: parameter.to_string(),
        value,
        estimate: e.mean,
        std_error: e.std_error,
        paths: e.count,
        pass,
    }
}

fn run_paths<T: Send>(
    cfg: &EnsembleConfig,
    pc: &PathConfig,
    f: impl Fn(&PathRecord) -> T + Sync,
) -> Result<Ensemble<T>> {
    run_ensemble(cfg.paths, cfg.master_seed, |seed, ws| {
        let initial = cfg.initial.sample(seed);
        simulate_path(&cfg.pair, pc, &initial, seed, ws).map(|r| f(&r))
    })
}

/// Shared body of the two uniform-in-`n` bounds: per level, the mean of
/// `value(record)` and of the initial squared norm in `space`.
fn uniform_bound(
    cfg: &EnsembleConfig,
    estimator: &str,
    threshold: Option<f64>,
    space: Space,
    value: impl Fn(&PathRecord) -> f64 + Sync,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let steps = cfg.steps()?;
    let mut ests = Vec::new();
    let mut initial = Vec::new();
    let mut blowups = 0;
    let mut paths = usize::MAX;
    for &n in &cfg.levels {
        let pc = path_config(cfg, n, threshold, steps)?;
        let e = run_paths(cfg, &pc, |r| (value(r), r.norms.squared(space)[0]))?;
        blowups += e.blowups;
        paths = paths.min(e.values.len());
        ests.push(estimate(&e, |v| v.0));
        initial.push(estimate(&e, |v| v.1).mean);
    }
    let means: Vec<f64> = ests.iter().map(|e| e.mean).collect();
    let med = median(&means);
    let spread = means.iter().map(|m| (m - med).abs()).fold(0.0, f64::max);
    let margin = cfg.uniformity * med - spread;
    let blow_ok = blowups_ok(cfg, blowups, cfg.paths * cfg.levels.len());
    let rows = cfg
        .levels
        .iter()
        .zip(&ests)
        .map(|(&n, e)| row(n, "T", cfg.horizon, *e, (e.mean - med).abs() <= cfg.uniformity * med))
        .collect();
    let (worst, worst_se) = ests
        .iter()
        .map(|e| (e.mean, e.std_error))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let constant: Vec<f64> = means.iter().zip(&initial).map(|(m, i)| m / (i + 1.0)).collect();
    Ok(EstimateReport {
        estimator: estimator.to_string(),
        estimate: worst,
        std_error: worst_se,
        paths,
        blowups,
        levels: cfg.levels.clone(),
        rows,
        pass: margin >= 0.0 && blow_ok,
        margin,
        extra: json!({
            "median": med,
            "max_deviation": spread,
            "initial_mean_sq": initial,
            "initial_space": space.to_string(),
            "implied_constant": constant,
            "threshold": threshold,
        }),
        config: cfg.echo(),
    })
}

/// `moment_bound_study`: `E‖Ψ^n‖²_{UH,T}` per level, for the untruncated Galerkin system.
pub fn moment_bound_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    let steps = cfg.steps()?;
    uniform_bound(cfg, "moment_bound", None, Space::U, move |r| r.norms.uh_at(steps))
}

/// `hv_bound_study`: `E‖Ψ^n‖²_{HV,τ∧T}` per level, `τ` the first hit of `M + ‖Ψ_0‖²_U`.
pub fn hv_bound_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    uniform_bound(cfg, "hv_bound", Some(cfg.threshold), Space::H, |r| r.norms.hv_at(r.stop_index()))
}

/// `hitting_probability_study`: frequency of `{τ^M ≤ T}` per `(n, M)`.
///
/// Each path is simulated once with the largest `M`. Below `τ^{M_max}` the
/// cutoff is inactive for every listed `M`, so the smaller hitting times are
/// read off the same UH series.
pub fn hitting_probability_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    if cfg.thresholds.is_empty() {
        return Err(Error::invalid("the hitting study needs a non-empty M list"));
    }
    let steps = cfg.steps()?;
    let m_max = *cfg.thresholds.last().expect("non-empty");
    let mut rows = Vec::new();
    let mut blowups = 0;
    let mut paths = usize::MAX;
    let mut margin = f64::INFINITY;
    let mut top = (f64::NEG_INFINITY, 0.0);
    let mut per_level = Vec::new();
    for &n in &cfg.levels {
        let pc = path_config(cfg, n, Some(m_max), steps)?;
        let e = run_paths(cfg, &pc, |r| {
            let stop = r.stop_index();
            let uh: Vec<f64> = (0..=stop).map(|j| r.norms.uh_at(j)).collect();
            cfg.thresholds
                .iter()
                .map(|m| if uh.iter().any(|&v| v >= m + r.baseline) { 1.0 } else { 0.0 })
                .collect::<Vec<f64>>()
        })?;
        blowups += e.blowups;
        paths = paths.min(e.values.len());
        let column = |i: usize| -> Vec<(usize, f64)> { e.values.iter().map(|(p, v)| (*p, v[i])).collect() };
        let mut freqs = Vec::new();
        for (i, &m) in cfg.thresholds.iter().enumerate() {
            let est = estimate(&e, |v| v[i]);
            let mono = if i == 0 { f64::INFINITY } else { nonincreasing_margin(&column(i - 1), &column(i)) };
            margin = margin.min(mono);
            rows.push(row(n, "M", m, est, mono >= 0.0));
            freqs.push(est.mean);
            if i + 1 == cfg.thresholds.len() && est.mean > top.0 {
                top = (est.mean, est.std_error);
            }
        }
        per_level.push(json!({ "level": n, "frequency": freqs }));
    }
    let ceiling_margin = cfg.hit_ceiling - top.0;
    let monotone = margin >= 0.0;
    Ok(EstimateReport {
        estimator: "hitting_probability".to_string(),
        estimate: top.0,
        std_error: top.1,
        paths,
        blowups,
        levels: cfg.levels.clone(),
        rows,
        pass: monotone && ceiling_margin > 0.0 && blowups_ok(cfg, blowups, cfg.paths * cfg.levels.len()),
        margin: ceiling_margin.min(margin),
        extra: json!({
            "ceiling": cfg.hit_ceiling,
            "largest_M": m_max,
            "monotone_margin": margin,
            "per_level": per_level,
        }),
        config: cfg.echo(),
    })
}

/// δ list sorted from largest to smallest, with step counts.
fn deltas_desc(cfg: &EnsembleConfig) -> Result<Vec<(f64, usize)>> {
    if cfg.deltas.is_empty() {
        return Err(Error::invalid("the study needs a non-empty δ list"));
    }
    let mut out = cfg
        .deltas
        .iter()
        .map(|&d| cfg.delta_steps(d).map(|s| (d, s)))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.1.cmp(&a.1));
    Ok(out)
}

/// Common reduction for the δ-indexed increment studies: per-path vectors of
/// one value per δ (largest δ first).
fn delta_report(
    cfg: &EnsembleConfig,
    estimator: &str,
    deltas: &[(f64, usize)],
    per_level: Vec<(usize, Ensemble<Vec<f64>>)>,
    extra: serde_json::Value,
) -> EstimateReport {
    let mut rows = Vec::new();
    let mut margin = f64::INFINITY;
    let mut blowups = 0;
    let mut paths = usize::MAX;
    let mut sup_first = (f64::NEG_INFINITY, 0.0);
    let mut sup_last = (f64::NEG_INFINITY, 0.0);
    for (n, e) in &per_level {
        blowups += e.blowups;
        paths = paths.min(e.values.len());
        let column = |i: usize| -> Vec<(usize, f64)> { e.values.iter().map(|(p, v)| (*p, v[i])).collect() };
        for (i, &(d, _)) in deltas.iter().enumerate() {
            let est = estimate(e, |v| v[i]);
            let mono = if i == 0 { f64::INFINITY } else { nonincreasing_margin(&column(i - 1), &column(i)) };
            margin = margin.min(mono);
            rows.push(row(*n, "delta", d, est, mono >= 0.0));
            if i == 0 && est.mean > sup_first.0 {
                sup_first = (est.mean, est.std_error);
            }
            if i + 1 == deltas.len() && est.mean > sup_last.0 {
                sup_last = (est.mean, est.std_error);
            }
        }
    }
    let sup_margin = sup_first.0 - sup_last.0;
    let mut extra = extra;
    extra["sup_largest_delta"] = json!(sup_first.0);
    extra["sup_smallest_delta"] = json!(sup_last.0);
    extra["monotone_margin"] = json!(margin);
    EstimateReport {
        estimator: estimator.to_string(),
        estimate: sup_last.0,
        std_error: sup_last.1,
        paths,
        blowups,
        levels: cfg.levels.clone(),
        rows,
        pass: margin >= 0.0 && sup_margin >= 0.0 && blowups_ok(cfg, blowups, cfg.paths * cfg.levels.len()),
        margin: margin.min(sup_margin),
        extra,
        config: cfg.echo(),
    }
}

/// `increment_tightness_study`: `E∫_0^{T-δ} ‖Ψ^{n,M}_{s+δ} − Ψ^{n,M}_s‖²_U ds`
/// per `(n, δ)`, by the trapezoid rule on the snapshot grid (spacing
/// `gcd(δ/dt)·dt`).
pub fn increment_tightness_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let deltas = deltas_desc(cfg)?;
    let steps = cfg.steps()?;
    let stride = deltas.iter().fold(steps, |g, d| gcd(g, d.1));
    let h = stride as f64 * cfg.dt;
    let mut per_level = Vec::new();
    for &n in &cfg.levels {
        let pc = path_config(cfg, n, Some(cfg.threshold), stride)?;
        let e = run_paths(cfg, &pc, |r| {
            deltas
                .iter()
                .map(|&(_, d)| {
                    let shift = d / stride;
                    let count = (steps - d) / stride;
                    let f: Vec<f64> = (0..=count)
                        .map(|i| r.snapshots[i + shift].difference(&r.snapshots[i]).norm_sq(Space::U))
                        .collect();
                    trapezoid(&f, h)
                })
                .collect()
        })?;
        per_level.push((n, e));
    }
    Ok(delta_report(
        cfg,
        "increment_tightness",
        &deltas,
        per_level,
        json!({ "quadrature_spacing": h, "norm": "U" }),
    ))
}

fn trapezoid(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => h * (crate::stats::pairwise_sum(&f[1..n - 1]) + 0.5 * (f[0] + f[n - 1])),
    }
}

/// Grid index of the start time `γ` for a record.
fn start_index(rule: StoppingRule, r: &PathRecord) -> usize {
    let stop = r.stop_index();
    match rule {
        StoppingRule::HitTime => stop,
        StoppingRule::Fixed(theta) => {
            let j = ((theta / r.dt()) + 1e-9).floor() as usize;
            j.min(stop)
        }
    }
}

/// State of the stopped process at grid index `j`. Past the stop every
/// snapshot equals the frozen state, so the next stored one is used.
fn stopped_state(r: &PathRecord, j: usize) -> &SpectralField {
    let stride = r.snapshot_stride();
    let stop = r.stop_index();
    let k = if j >= stop { stop.div_ceil(stride) * stride } else { j };
    r.state(k).expect("snapshot grid covers the requested index")
}

/// `functional_tightness_study`: `E|⟨Ψ^{n,M}_{(γ+δ)∧T} − Ψ^{n,M}_γ, f⟩_U|`
/// per `(n, δ)`, with `f` the unit solenoidal probe mode and `γ` given by
/// the configured stopping rule.
pub fn functional_tightness_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let deltas = deltas_desc(cfg)?;
    let steps = cfg.steps()?;
    let stride = match cfg.stopping {
        StoppingRule::HitTime => 1,
        StoppingRule::Fixed(theta) => {
            let j = ((theta / cfg.dt).round() as usize).min(steps);
            deltas.iter().fold(gcd(steps, j), |g, d| gcd(g, d.1))
        }
    };
    let mut per_level = Vec::new();
    for &n in &cfg.levels {
        let k = cfg.probe;
        let probe = SpectralField::solenoidal_mode(k.sup_norm(), k, 1.0.into()).with_band(n);
        let pc = path_config(cfg, n, Some(cfg.threshold), stride)?;
        let e = run_paths(cfg, &pc, |r| {
            let g = start_index(cfg.stopping, r);
            let a = stopped_state(r, g).inner(&probe, Space::U);
            deltas
                .iter()
                .map(|&(_, d)| (stopped_state(r, (g + d).min(steps)).inner(&probe, Space::U) - a).abs())
                .collect()
        })?;
        per_level.push((n, e));
    }
    Ok(delta_report(
        cfg,
        "functional_tightness",
        &deltas,
        per_level,
        json!({ "probe": [cfg.probe.kx, cfg.probe.ky], "stopping": cfg.stopping.describe() }),
    ))
}

/// `equicontinuity_study`: `E(‖Ψ^n‖²_{UH,(θ+δ)∧τ} − ‖Ψ^n‖²_{UH,θ∧τ})` per `(n, δ)`.
pub fn equicontinuity_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let deltas = deltas_desc(cfg)?;
    let steps = cfg.steps()?;
    let mut per_level = Vec::new();
    for &n in &cfg.levels {
        let pc = path_config(cfg, n, Some(cfg.threshold), steps)?;
        let e = run_paths(cfg, &pc, |r| {
            let uh = r.uh_stopped_series();
            let g = start_index(cfg.stopping, r);
            deltas.iter().map(|&(_, d)| uh[(g + d).min(steps)] - uh[g]).collect()
        })?;
        per_level.push((n, e));
    }
    Ok(delta_report(cfg, "equicontinuity", &deltas, per_level, json!({ "stopping": cfg.stopping.describe() })))
}

/// `λ_m = min(μ_m, μ_m²)`.
pub fn cauchy_lambda(m: usize) -> f64 {
    let mu = TripleWeights::mu(m);
    mu.min(mu * mu)
}

/// `cauchy_convergence_study`: common-noise `E‖Ψ^n − Ψ^m‖²_{UH, τ_m∧τ_n∧T}`
/// for `n = factor·m`.
///
/// Contract per factor: each step up the `m` list is a decrease that the
/// paired estimate resolves at two standard errors.
pub fn cauchy_convergence_study(cfg: &EnsembleConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    if cfg.cauchy_levels.is_empty() || cfg.cauchy_factors.is_empty() {
        return Err(Error::invalid("the Cauchy study needs m levels and partner factors"));
    }
    let steps = cfg.steps()?;
    let mut rows = Vec::new();
    let mut margin = f64::INFINITY;
    let mut blowups = 0;
    let mut paths = usize::MAX;
    let mut last = (f64::NEG_INFINITY, 0.0);
    for &factor in &cfg.cauchy_factors {
        let mut prev: Option<Vec<(usize, f64)>> = None;
        for &m in &cfg.cauchy_levels {
            let n = factor * m;
            let pc = path_config(cfg, n, Some(cfg.threshold), steps)?;
            let e = run_ensemble(cfg.paths, cfg.master_seed, |seed, ws| {
                let initial = cfg.initial.sample(seed);
                let rec = coupled_pair(&cfg.pair, &pc, m, n, &initial, seed, ws)?;
                Ok(rec.difference.uh_at(rec.joint_stop_index()))
            })?;
            blowups += e.blowups;
            paths = paths.min(e.values.len());
            let est = estimate(&e, |v| *v);
            let step_margin = match &prev {
                None => f64::INFINITY,
                Some(p) => {
                    let d = super::paired_difference(p, &e.values);
                    -(d.mean + 2.0 * d.std_error)
                }
            };
            margin = margin.min(step_margin);
            rows.push(row(m, "n", n as f64, est, step_margin > 0.0));
            if m == *cfg.cauchy_levels.last().expect("non-empty") && est.mean > last.0 {
                last = (est.mean, est.std_error);
            }
            prev = Some(e.values);
        }
    }
    let envelope: Vec<serde_json::Value> = cfg
        .cauchy_levels
        .iter()
        .map(|&m| json!({ "m": m, "lambda": cauchy_lambda(m), "envelope": 1.0 / cauchy_lambda(m).sqrt() }))
        .collect();
    Ok(EstimateReport {
        estimator: "cauchy_convergence".to_string(),
        estimate: last.0,
        std_error: last.1,
        paths,
        blowups,
        levels: cfg.cauchy_levels.clone(),
        rows,
        pass: margin > 0.0 && blowups_ok(cfg, blowups, cfg.paths * cfg.cauchy_levels.len() * cfg.cauchy_factors.len()),
        margin,
        extra: json!({ "factors": cfg.cauchy_factors, "envelope": envelope }),
        config: cfg.echo(),
    })
}

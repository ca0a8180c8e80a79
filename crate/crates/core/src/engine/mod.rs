//! Time stepping of the truncated Galerkin system with first-hitting-time
//! tracking.
//!
//! Hitting is detected on the time grid: the hit index is the first `j` with
//! `‖Ψ‖²_{UH,t_j} ≥ M + ‖Ψ_0‖²_U`. Once a path has hit it can be frozen, so
//! that the record holds the stopped process `Ψ_{t∧τ}`.

mod driver;
mod initial;
mod snapshot;

use serde::Serialize;

use crate::operators::{Calculus, OperatorPair, Workspace};
use crate::spaces::{CutoffSpec, NormSeries, Space, SpectralField, TripleWeights};
use crate::{Error, Result};

pub use driver::{mix64, path_seed, BrownianDriver};
pub use initial::{InitialCondition, RandomInitial};
pub use snapshot::{read_snapshots, write_norm_csv, write_snapshots, SnapshotFile, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Explicit Euler–Maruyama on the Itô form (corrector in the drift).
    EulerIto,
    /// Heun predictor–corrector on the Stratonovich form (no corrector).
    HeunStratonovich,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EulerIto => "euler-ito",
            Scheme::HeunStratonovich => "heun-stratonovich",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-ito" | "euler" | "em" => Ok(Scheme::EulerIto),
            "heun-stratonovich" | "heun" => Ok(Scheme::HeunStratonovich),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// How the cutoff level `R` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CutoffPolicy {
    /// `R = 2·max_k w_H(k)·(M + ‖Ψ_0‖²_U)` when a threshold is set, otherwise inactive.
    Auto,
    Fixed(f64),
    Inactive,
}

/// `steps = T / dt`, rejecting non-dividing pairs.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("need dt > 0 and T > 0, got dt = {dt}, T = {horizon}")));
    }
    let r = horizon / dt;
    if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::invalid(format!("dt = {dt} does not divide T = {horizon}")));
    }
    Ok(r.round() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub level: usize,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// `M`; `None` disables hit tracking.
    pub threshold: Option<f64>,
    pub cutoff: CutoffPolicy,
    /// Stop integrating at the hit and keep the state frozen.
    pub freeze_after_hit: bool,
    pub snapshot_stride: usize,
    /// Brownian refinement, see [`BrownianDriver::with_substeps`].
    pub substeps: usize,
    pub record_energy: bool,
}

impl PathConfig {
    pub fn new(level: usize, dt: f64, horizon: f64) -> Result<Self> {
        if level == 0 {
            return Err(Error::invalid("level must be at least 1"));
        }
        Ok(Self {
            level,
            dt,
            steps: steps_for(horizon, dt)?,
            scheme: Scheme::EulerIto,
            threshold: None,
            cutoff: CutoffPolicy::Auto,
            freeze_after_hit: true,
            snapshot_stride: 1,
            substeps: 1,
            record_energy: false,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn with_threshold(mut self, m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::invalid(format!("threshold M must satisfy M > 1, got {m}")));
        }
        self.threshold = Some(m);
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 || self.steps % stride != 0 {
            return Err(Error::invalid(format!("snapshot stride {stride} must divide {} steps", self.steps)));
        }
        self.snapshot_stride = stride;
        Ok(self)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    pub fn with_cutoff(mut self, cutoff: CutoffPolicy) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_energy(mut self) -> Self {
        self.record_energy = true;
        self
    }

    pub fn without_freeze(mut self) -> Self {
        self.freeze_after_hit = false;
        self
    }

    /// Cutoff for a path whose initial U-energy is `baseline`.
    pub fn cutoff_for(&self, baseline: f64) -> Result<CutoffSpec> {
        match (self.cutoff, self.threshold) {
            (CutoffPolicy::Fixed(r), _) => CutoffSpec::new(r),
            (CutoffPolicy::Auto, Some(m)) => CutoffSpec::new(2.0 * TripleWeights::max_h_weight(self.level) * (m + baseline)),
            _ => Ok(CutoffSpec::inactive()),
        }
    }
}

/// First grid time at which the UH functional reaches `M + baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingTracker {
    threshold: f64,
    baseline: f64,
    dt: f64,
    hit: Option<usize>,
}

impl StoppingTracker {
    pub fn new(threshold: f64, baseline: f64, dt: f64) -> Result<Self> {
        if !(threshold > 1.0) {
            return Err(Error::invalid(format!("threshold M must satisfy M > 1, got {threshold}")));
        }
        Ok(Self { threshold, baseline, dt, hit: None })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn level(&self) -> f64 {
        self.threshold + self.baseline
    }

    /// Feeds the functional value at grid index `j`; returns true on the first crossing.
    pub fn observe(&mut self, j: usize, uh: f64) -> bool {
        if self.hit.is_none() && uh >= self.level() {
            self.hit = Some(j);
            return true;
        }
        false
    }

    pub fn hit_index(&self) -> Option<usize> {
        self.hit
    }

    pub fn hit_time(&self) -> Option<f64> {
        self.hit.map(|j| j as f64 * self.dt)
    }
}

/// Everything recorded along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub config: PathConfig,
    pub seed: u64,
    /// Squared norms of the (stopped) state at every grid point.
    pub norms: NormSeries,
    /// States at `j = 0, stride, 2·stride, …`.
    pub snapshots: Vec<SpectralField>,
    pub baseline: f64,
    pub cutoff: CutoffSpec,
    pub tracker: Option<StoppingTracker>,
    pub blowup_time: Option<f64>,
    /// Per-step increments of the discrete Itô energy balance.
    pub energy: Option<Vec<f64>>,
}

impl PathRecord {
    pub fn level(&self) -> usize {
        self.config.level
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.config.dt
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.norms.len()).map(|j| self.time(j)).collect()
    }

    pub fn hit_index(&self) -> Option<usize> {
        self.tracker.and_then(|t| t.hit_index())
    }

    pub fn hit_time(&self) -> Option<f64> {
        self.hit_index().map(|j| self.time(j))
    }

    /// Grid index of `τ ∧ T`.
    pub fn stop_index(&self) -> usize {
        self.hit_index().unwrap_or(self.config.steps).min(self.config.steps)
    }

    pub fn is_blowup(&self) -> bool {
        self.blowup_time.is_some()
    }

    pub fn snapshot_stride(&self) -> usize {
        self.config.snapshot_stride
    }

    /// State at grid index `j`, if it was recorded.
    pub fn state(&self, j: usize) -> Option<&SpectralField> {
        let s = self.config.snapshot_stride;
        if j % s == 0 {
            self.snapshots.get(j / s)
        } else {
            None
        }
    }

    pub fn initial(&self) -> &SpectralField {
        &self.snapshots[0]
    }

    pub fn terminal(&self) -> &SpectralField {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    /// `‖Ψ‖²_{UH, t ∧ τ}`; constant after the hit.
    pub fn uh_functional(&self, t: f64) -> Result<f64> {
        let j = self.norms.index_at(t)?;
        Ok(self.norms.uh_at(j.min(self.stop_index())))
    }

    /// `‖Ψ‖²_{HV, t ∧ τ}`.
    pub fn hv_functional(&self, t: f64) -> Result<f64> {
        let j = self.norms.index_at(t)?;
        Ok(self.norms.hv_at(j.min(self.stop_index())))
    }

    pub fn uh_stopped_series(&self) -> Vec<f64> {
        let stop = self.stop_index();
        let run = self.norms.uh_running();
        (0..run.len()).map(|j| run[j.min(stop)]).collect()
    }

    pub fn hv_stopped_series(&self) -> Vec<f64> {
        let stop = self.stop_index();
        let run = self.norms.hv_running();
        (0..run.len()).map(|j| run[j.min(stop)]).collect()
    }
}

/// `em_step`: one Euler–Maruyama step of the cut-off Itô system.
pub fn em_step(
    state: &SpectralField,
    t: f64,
    dt: f64,
    pair: &OperatorPair,
    dw: &[f64],
    cutoff: &CutoffSpec,
    ws: &mut Workspace,
) -> Result<SpectralField> {
    let f = cutoff.eval(state.norm_sq(Space::H));
    let mut out = state.clone();
    if f > 0.0 {
        let ev = pair.evaluate(t, state, ws, Calculus::Ito);
        add_increment(&mut out, f, &ev.drift, &ev.columns, dt, dw);
    }
    finite_or_blowup(out, t + dt)
}

/// `heun_step`: one Heun step of the cut-off Stratonovich system.
pub fn heun_step(
    state: &SpectralField,
    t: f64,
    dt: f64,
    pair: &OperatorPair,
    dw: &[f64],
    cutoff: &CutoffSpec,
    ws: &mut Workspace,
) -> Result<SpectralField> {
    let f0 = cutoff.eval(state.norm_sq(Space::H));
    let ev0 = pair.evaluate(t, state, ws, Calculus::Stratonovich);
    let mut predictor = state.clone();
    add_increment(&mut predictor, f0, &ev0.drift, &ev0.columns, dt, dw);
    let predictor = finite_or_blowup(predictor, t + dt)?;
    let f1 = cutoff.eval(predictor.norm_sq(Space::H));
    let ev1 = pair.evaluate(t + dt, &predictor, ws, Calculus::Stratonovich);
    let mut out = state.clone();
    add_increment(&mut out, 0.5 * f0, &ev0.drift, &ev0.columns, dt, dw);
    add_increment(&mut out, 0.5 * f1, &ev1.drift, &ev1.columns, dt, dw);
    finite_or_blowup(out, t + dt)
}

fn add_increment(u: &mut SpectralField, f: f64, drift: &SpectralField, cols: &[SpectralField], dt: f64, dw: &[f64]) {
    if f == 0.0 {
        return;
    }
    u.axpy(f * dt, drift);
    for (g, w) in cols.iter().zip(dw) {
        u.axpy(f * w, g);
    }
}

fn finite_or_blowup(u: SpectralField, time: f64) -> Result<SpectralField> {
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::Blowup { time, partial: None })
    }
}

/// One level being integrated.
struct Runner<'a> {
    pair: &'a OperatorPair,
    cfg: PathConfig,
    cutoff: CutoffSpec,
    u: SpectralField,
    norms: NormSeries,
    snapshots: Vec<SpectralField>,
    baseline: f64,
    tracker: Option<StoppingTracker>,
    frozen: bool,
    energy: Option<Vec<f64>>,
}

impl<'a> Runner<'a> {
    fn new(pair: &'a OperatorPair, cfg: PathConfig, initial: &SpectralField) -> Result<Self> {
        let n = cfg.level;
        let mut u = initial.with_band(n);
        u.project_in_place(n);
        if !u.is_finite() {
            return Err(Error::invalid("initial condition has non-finite coefficients"));
        }
        let baseline = u.norm_sq(Space::U);
        let cutoff = cfg.cutoff_for(baseline)?;
        let tracker = cfg.threshold.map(|m| StoppingTracker::new(m, baseline, cfg.dt)).transpose()?;
        let mut norms = NormSeries::new(cfg.dt);
        norms.push(&u);
        let energy = cfg.record_energy.then(Vec::new);
        let mut r = Self {
            pair,
            cfg,
            cutoff,
            snapshots: vec![u.clone()],
            u,
            norms,
            baseline,
            tracker,
            frozen: false,
            energy,
        };
        r.observe(0);
        Ok(r)
    }

    fn observe(&mut self, j: usize) {
        if let Some(tr) = &mut self.tracker {
            if tr.observe(j, self.norms.uh_at(j)) && self.cfg.freeze_after_hit {
                self.frozen = true;
            }
        }
    }

    fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Advances from grid index `j` to `j + 1`.
    fn advance(&mut self, j: usize, dw: &[f64], ws: &mut Workspace) -> Result<()> {
        let t = j as f64 * self.cfg.dt;
        if !self.frozen {
            if let Some(ledger) = &mut self.energy {
                ledger.push(energy_increment(self.pair, &self.u, t, self.cfg.dt, dw, &self.cutoff, ws));
            }
            self.u = match self.cfg.scheme {
                Scheme::EulerIto => em_step(&self.u, t, self.cfg.dt, self.pair, dw, &self.cutoff, ws)?,
                Scheme::HeunStratonovich => heun_step(&self.u, t, self.cfg.dt, self.pair, dw, &self.cutoff, ws)?,
            };
        } else if let Some(ledger) = &mut self.energy {
            ledger.push(0.0);
        }
        self.norms.push(&self.u);
        self.observe(j + 1);
        if (j + 1) % self.cfg.snapshot_stride == 0 {
            self.snapshots.push(self.u.clone());
        }
        Ok(())
    }

    fn finish(self, seed: u64, blowup_time: Option<f64>) -> PathRecord {
        PathRecord {
            config: self.cfg,
            seed,
            norms: self.norms,
            snapshots: self.snapshots,
            baseline: self.baseline,
            cutoff: self.cutoff,
            tracker: self.tracker,
            blowup_time,
            energy: self.energy,
        }
    }
}

/// `2⟨A,u⟩dt + Σ‖G_i‖²dt + 2Σ⟨G_i,u⟩ΔW^i` for the cut-off Itô coefficients at `u`.
fn energy_increment(
    pair: &OperatorPair,
    u: &SpectralField,
    t: f64,
    dt: f64,
    dw: &[f64],
    cutoff: &CutoffSpec,
    ws: &mut Workspace,
) -> f64 {
    let f = cutoff.eval(u.norm_sq(Space::H));
    if f == 0.0 {
        return 0.0;
    }
    let ev = pair.evaluate(t, u, ws, Calculus::Ito);
    let mut s = 2.0 * f * ev.drift.inner(u, Space::U) * dt;
    for (g, w) in ev.columns.iter().zip(dw) {
        s += f * f * g.norm_sq(Space::U) * dt + 2.0 * f * g.inner(u, Space::U) * w;
    }
    s
}

/// `simulate_path`: integrates `pair` from `initial` (projected onto the level) with the driver seeded by `seed`.
///
/// A non-finite state aborts with [`Error::Blowup`] carrying the partial record.
pub fn simulate_path(
    pair: &OperatorPair,
    config: &PathConfig,
    initial: &SpectralField,
    seed: u64,
    ws: &mut Workspace,
) -> Result<PathRecord> {
    let mut runner = Runner::new(pair, config.clone(), initial)?;
    let mut driver = BrownianDriver::with_substeps(seed, pair.noise_count(), config.dt, config.substeps);
    let mut dw = vec![0.0; pair.noise_count()];
    for j in 0..config.steps {
        driver.next_increments(&mut dw);
        if let Err(e) = runner.advance(j, &dw, ws) {
            return Err(with_partial(e, runner.finish(seed, None)));
        }
    }
    Ok(runner.finish(seed, None))
}

fn with_partial(e: Error, mut partial: PathRecord) -> Error {
    match e {
        Error::Blowup { time, .. } => {
            partial.blowup_time = Some(time);
            Error::Blowup { time, partial: Some(Box::new(partial)) }
        }
        other => other,
    }
}

/// Two Galerkin levels driven by the same Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRecord {
    pub coarse: PathRecord,
    pub fine: PathRecord,
    /// Squared norms of `Ψ^fine − Ψ^coarse` at every grid point.
    pub difference: NormSeries,
    /// Grid index of `τ_coarse ∧ τ_fine`, if either level hit.
    pub joint_hit: Option<usize>,
}

impl CoupledRecord {
    pub fn joint_stop_index(&self) -> usize {
        self.joint_hit.unwrap_or(self.coarse.config.steps).min(self.coarse.config.steps)
    }

    /// `‖Ψ^fine − Ψ^coarse‖²_{UH, t ∧ τ_c ∧ τ_f}`.
    pub fn difference_uh(&self, t: f64) -> Result<f64> {
        let j = self.difference.index_at(t)?;
        Ok(self.difference.uh_at(j.min(self.joint_stop_index())))
    }

    pub fn difference_hv(&self, t: f64) -> Result<f64> {
        let j = self.difference.index_at(t)?;
        Ok(self.difference.hv_at(j.min(self.joint_stop_index())))
    }
}

/// `coupled_pair`: levels `coarse ≤ fine` on one driver. Both levels are
/// frozen at the joint stopping time.
pub fn coupled_pair(
    pair: &OperatorPair,
    config: &PathConfig,
    coarse: usize,
    fine: usize,
    initial: &SpectralField,
    seed: u64,
    ws: &mut Workspace,
) -> Result<CoupledRecord> {
    if coarse > fine || coarse == 0 {
        return Err(Error::invalid(format!("coupled levels need 1 ≤ m ≤ n, got m = {coarse}, n = {fine}")));
    }
    let mut cfg_c = config.clone();
    cfg_c.level = coarse;
    cfg_c.freeze_after_hit = false;
    let mut cfg_f = cfg_c.clone();
    cfg_f.level = fine;
    let mut rc = Runner::new(pair, cfg_c, initial)?;
    let mut rf = Runner::new(pair, cfg_f, initial)?;
    let mut difference = NormSeries::new(config.dt);
    difference.push(&rf.u.difference(&rc.u));
    let hit = |r: &Runner| r.tracker.and_then(|t| t.hit_index());
    let mut joint = hit(&rc).into_iter().chain(hit(&rf)).min();
    if joint.is_some() && config.freeze_after_hit {
        rc.freeze();
        rf.freeze();
    }
    let mut driver = BrownianDriver::with_substeps(seed, pair.noise_count(), config.dt, config.substeps);
    let mut dw = vec![0.0; pair.noise_count()];
    for j in 0..config.steps {
        driver.next_increments(&mut dw);
        for r in [&mut rc, &mut rf] {
            if let Err(e) = r.advance(j, &dw, ws) {
                return Err(with_partial(e, r.clone_record(seed)));
            }
        }
        difference.push(&rf.u.difference(&rc.u));
        if joint.is_none() {
            joint = hit(&rc).into_iter().chain(hit(&rf)).min();
            if joint.is_some() && config.freeze_after_hit {
                rc.freeze();
                rf.freeze();
            }
        }
    }
    Ok(CoupledRecord { coarse: rc.finish(seed, None), fine: rf.finish(seed, None), difference, joint_hit: joint })
}

impl Runner<'_> {
    fn clone_record(&self, seed: u64) -> PathRecord {
        PathRecord {
            config: self.cfg.clone(),
            seed,
            norms: self.norms.clone(),
            snapshots: self.snapshots.clone(),
            baseline: self.baseline,
            cutoff: self.cutoff,
            tracker: self.tracker,
            blowup_time: None,
            energy: self.energy.clone(),
        }
    }
}

/// `energy_identity_residual`: `‖Ψ_t‖²_U − ‖Ψ_0‖²_U` minus the accumulated
/// Itô balance, at every grid point. Records made without the ledger are
/// replayed from their initial state and seed.
pub fn energy_identity_residual(path: &PathRecord, pair: &OperatorPair, ws: &mut Workspace) -> Result<Vec<f64>> {
    let replayed;
    let record = if path.energy.is_some() {
        path
    } else {
        let cfg = path.config.clone().with_energy();
        replayed = simulate_path(pair, &cfg, path.initial(), path.seed, ws)?;
        &replayed
    };
    let ledger = record.energy.as_ref().expect("ledger recorded");
    let u = record.norms.squared(Space::U);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(u.len());
    out.push(0.0);
    for j in 1..u.len() {
        acc += ledger[j - 1];
        out.push(u[j] - u[0] - acc);
    }
    Ok(out)
}

//! Run configuration files.
//!
//! A line-oriented `key = value` grammar with `[section]` headers. `#` starts
//! a comment, lists are comma separated, and every key is optional. See
//! FORMATS.md for the full key table.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use spde_core::diagnostics::{AuditConfig, EnsembleConfig, StoppingRule};
use spde_core::engine::{steps_for, CutoffPolicy, InitialCondition, Scheme};
use spde_core::{GrowthProfile, ModeIndex, OperatorKind, OperatorPair, SaltCoefficients};

use crate::Command;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}`{key}`: {message}", if *line == 0 { String::from("default for ") } else { format!("line {line}: ") })]
pub struct ConfigError {
    /// 1-based; 0 when the key was not present in the file.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line, key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: OperatorKind,
    pub nu: f64,
    /// Number of noise fields `m`. Additive kinds use the same library fields as columns.
    pub noise_modes: usize,
    pub xi_amplitude: f64,
    pub xi_ratio: f64,
    /// Random phases for the library fields.
    pub xi_phase_seed: Option<u64>,
    /// Spectrum file; replaces the library fields when set.
    pub xi_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Zero,
    Mode,
    Random,
}

impl InitialKind {
    fn as_str(self) -> &'static str {
        match self {
            InitialKind::Zero => "zero",
            InitialKind::Mode => "mode",
            InitialKind::Random => "random",
        }
    }
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(InitialKind::Zero),
            "mode" => Ok(InitialKind::Mode),
            "random" => Ok(InitialKind::Random),
            other => Err(format!("unknown initial kind `{other}` (expected zero, mode or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub mode: (i32, i32),
    pub amplitude: f64,
    pub band: usize,
    pub exponent: f64,
    pub norm: f64,
    pub spread: f64,
    pub clip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Informational; the command line decides what runs.
    pub command: Option<Command>,
    pub model: ModelSpec,
    pub initial: InitialSpec,
    pub levels: Vec<usize>,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub threshold: f64,
    pub thresholds: Vec<f64>,
    pub cutoff: CutoffPolicy,
    pub paths: usize,
    pub seed: u64,
    pub deltas: Vec<f64>,
    pub cauchy_levels: Vec<usize>,
    pub cauchy_factors: Vec<usize>,
    pub probe: (i32, i32),
    pub stopping: StoppingRule,
    pub hit_ceiling: f64,
    pub uniformity: f64,
    pub blowup_tolerance: f64,
    pub audit_sets: Vec<u8>,
    pub audit_samples: usize,
    pub audit_levels: Vec<usize>,
    pub growth_exponent: f64,
    pub simulate_level: usize,
    pub snapshot_stride: usize,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            model: ModelSpec {
                kind: OperatorKind::SaltNs,
                nu: 0.1,
                noise_modes: 4,
                xi_amplitude: 0.2,
                xi_ratio: 0.5,
                xi_phase_seed: None,
                xi_file: None,
            },
            initial: InitialSpec {
                kind: InitialKind::Random,
                mode: (1, 0),
                amplitude: 1.0,
                band: 32,
                exponent: 4.0,
                norm: 2.0,
                spread: 0.2,
                clip: 6.0,
            },
            levels: vec![4, 8, 16],
            dt: 1e-3,
            horizon: 0.5,
            scheme: Scheme::EulerIto,
            threshold: 16.0,
            thresholds: vec![2.0, 4.0, 8.0, 16.0],
            cutoff: CutoffPolicy::Auto,
            paths: 100,
            seed: 0,
            deltas: vec![0.08, 0.04, 0.02, 0.01],
            cauchy_levels: vec![4, 8, 16],
            cauchy_factors: vec![2],
            probe: (1, 0),
            stopping: StoppingRule::Fixed(0.25),
            hit_ceiling: 0.05,
            uniformity: 0.10,
            blowup_tolerance: 0.01,
            audit_sets: vec![1, 2, 3],
            audit_samples: 500,
            audit_levels: vec![4, 8, 16],
            growth_exponent: 2.0,
            simulate_level: 16,
            snapshot_stride: 10,
            output: PathBuf::from("out"),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Raw entries keyed by `section.key`; consumed as they are interpreted.
struct Raw {
    entries: HashMap<String, Entry>,
    lines: HashMap<String, usize>,
}

impl Raw {
    fn take<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| ConfigError::new(e.line, key, m)),
        }
    }

    fn set<T>(&mut self, key: &str, slot: &mut T, parse: impl Fn(&str) -> Result<T, String>) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key, parse)? {
            *slot = v;
        }
        Ok(())
    }

    fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }
}

fn scalar<T: FromStr>(what: &'static str) -> impl Fn(&str) -> Result<T, String> {
    move |s| s.parse().map_err(|_| format!("expected {what}, found `{s}`"))
}

fn real(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("expected a number, found `{s}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, found `{s}`"))
    }
}

fn list<T>(item: impl Fn(&str) -> Result<T, String>) -> impl Fn(&str) -> Result<Vec<T>, String> {
    move |s| {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| item(p.trim())).collect()
    }
}

fn pair(s: &str) -> Result<(i32, i32), String> {
    let v = list(scalar::<i32>("an integer"))(s)?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected `kx, ky`, found `{s}`")),
    }
}

fn cutoff(s: &str) -> Result<CutoffPolicy, String> {
    match s {
        "auto" => Ok(CutoffPolicy::Auto),
        "inactive" | "none" => Ok(CutoffPolicy::Inactive),
        other => real(other)
            .map(CutoffPolicy::Fixed)
            .map_err(|_| format!("expected auto, inactive or a number, found `{other}`")),
    }
}

fn stopping(s: &str) -> Result<StoppingRule, String> {
    match s {
        "hit" => Ok(StoppingRule::HitTime),
        other => match other.strip_prefix("fixed:") {
            Some(t) => real(t.trim()).map(StoppingRule::Fixed),
            None => Err(format!("expected `hit` or `fixed:<time>`, found `{other}`")),
        },
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = Raw { entries: HashMap::new(), lines: HashMap::new() };
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(lineno, line, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::new(lineno, name, "unknown section"));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| ConfigError::new(lineno, line, "expected `key = value`"))?;
        let key = key.trim();
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if raw.lines.contains_key(&full) {
            let first = raw.line(&full);
            return Err(ConfigError::new(lineno, full, format!("duplicate key (first set on line {first})")));
        }
        raw.lines.insert(full.clone(), lineno);
        raw.entries.insert(full, Entry { value: value.trim().to_string(), line: lineno });
    }

    let mut c = RunConfig::default();
    c.command = raw.take("command", |s| Command::from_name(s).ok_or_else(|| format!("unknown command `{s}`")))?;

    let m = &mut c.model;
    raw.set("model.kind", &mut m.kind, |s| s.parse::<OperatorKind>().map_err(|e| e.to_string()))?;
    raw.set("model.nu", &mut m.nu, real)?;
    raw.set("model.noise_modes", &mut m.noise_modes, scalar("a non-negative integer"))?;
    raw.set("model.xi_amplitude", &mut m.xi_amplitude, real)?;
    raw.set("model.xi_ratio", &mut m.xi_ratio, real)?;
    m.xi_phase_seed = raw.take("model.xi_phase_seed", scalar("a u64"))?;
    m.xi_file = raw.take("model.xi_file", |s| Ok(PathBuf::from(s)))?;

    let ic = &mut c.initial;
    raw.set("initial.kind", &mut ic.kind, |s| s.parse())?;
    raw.set("initial.mode", &mut ic.mode, pair)?;
    raw.set("initial.amplitude", &mut ic.amplitude, real)?;
    raw.set("initial.band", &mut ic.band, scalar("a positive integer"))?;
    raw.set("initial.exponent", &mut ic.exponent, real)?;
    raw.set("initial.norm", &mut ic.norm, real)?;
    raw.set("initial.spread", &mut ic.spread, real)?;
    raw.set("initial.clip", &mut ic.clip, real)?;

    raw.set("spaces.levels", &mut c.levels, list(scalar("a positive integer")))?;
    raw.set("integrator.dt", &mut c.dt, real)?;
    raw.set("integrator.T", &mut c.horizon, real)?;
    raw.set("integrator.scheme", &mut c.scheme, |s| s.parse::<Scheme>().map_err(|e| e.to_string()))?;
    raw.set("thresholds.M", &mut c.threshold, real)?;
    raw.set("thresholds.M_list", &mut c.thresholds, list(real))?;
    raw.set("thresholds.R", &mut c.cutoff, cutoff)?;
    raw.set("ensemble.paths", &mut c.paths, scalar("a positive integer"))?;
    raw.set("ensemble.seed", &mut c.seed, scalar("a u64"))?;
    raw.set("study.deltas", &mut c.deltas, list(real))?;
    raw.set("study.cauchy_levels", &mut c.cauchy_levels, list(scalar("a positive integer")))?;
    raw.set("study.cauchy_factors", &mut c.cauchy_factors, list(scalar("a positive integer")))?;
    raw.set("study.probe", &mut c.probe, pair)?;
    raw.set("study.stopping", &mut c.stopping, stopping)?;
    raw.set("study.hit_ceiling", &mut c.hit_ceiling, real)?;
    raw.set("study.uniformity", &mut c.uniformity, real)?;
    raw.set("study.blowup_tolerance", &mut c.blowup_tolerance, real)?;
    raw.set("audit.sets", &mut c.audit_sets, list(scalar("1, 2 or 3")))?;
    raw.set("audit.samples", &mut c.audit_samples, scalar("a positive integer"))?;
    raw.set("audit.levels", &mut c.audit_levels, list(scalar("a positive integer")))?;
    raw.set("audit.growth_exponent", &mut c.growth_exponent, real)?;
    raw.set("simulate.level", &mut c.simulate_level, scalar("a positive integer"))?;
    raw.set("simulate.stride", &mut c.snapshot_stride, scalar("a positive integer"))?;
    raw.set("output.dir", &mut c.output, |s| Ok(PathBuf::from(s)))?;

    if let Some((key, e)) = raw.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(ConfigError::new(e.line, key.clone(), "unknown key"));
    }
    c.check(&|key| raw.line(key))?;
    Ok(c)
}

const SECTIONS: [&str; 10] =
    ["model", "initial", "spaces", "integrator", "thresholds", "ensemble", "study", "audit", "simulate", "output"];

impl RunConfig {
    /// Checks every invariant; `line` maps a key to where it was set.
    fn check(&self, line: &dyn Fn(&str) -> usize) -> Result<(), ConfigError> {
        let fail = |key: &str, msg: String| Err(ConfigError::new(line(key), key, msg));
        let m = &self.model;
        if !(m.nu >= 0.0) {
            return fail("model.nu", format!("viscosity must be non-negative, got {}", m.nu));
        }
        if m.noise_modes > 10 && m.xi_file.is_none() {
            return fail("model.noise_modes", format!("the built-in library has 10 fields, got {}", m.noise_modes));
        }
        if !(self.dt > 0.0) {
            return fail("integrator.dt", format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0) {
            return fail("integrator.T", format!("T must be positive, got {}", self.horizon));
        }
        if steps_for(self.horizon, self.dt).is_err() {
            return fail("integrator.dt", format!("dt = {} does not divide T = {}", self.dt, self.horizon));
        }
        if !(self.threshold > 1.0) {
            return fail("thresholds.M", format!("M must satisfy M > 1, got {}", self.threshold));
        }
        if let Some(x) = self.thresholds.iter().find(|x| !(**x > 1.0)) {
            return fail("thresholds.M_list", format!("every M must satisfy M > 1, got {x}"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return fail("thresholds.M_list", "the M list must be strictly increasing".into());
        }
        if let CutoffPolicy::Fixed(r) = self.cutoff {
            if !(r > 0.0) {
                return fail("thresholds.R", format!("R must be positive, got {r}"));
            }
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return fail("spaces.levels", "levels must be a non-empty list of positive integers".into());
        }
        if self.paths < 2 {
            return fail("ensemble.paths", format!("need at least 2 paths, got {}", self.paths));
        }
        let on_grid = |t: f64| {
            let r = t / self.dt;
            (r - r.round()).abs() <= 1e-9 * r.max(1.0)
        };
        for &d in &self.deltas {
            if !(d > 0.0 && d < self.horizon) {
                return fail("study.deltas", format!("δ = {d} must lie in (0, T)"));
            }
            if !on_grid(d) {
                return fail("study.deltas", format!("δ = {d} is not a multiple of dt = {}", self.dt));
            }
        }
        if self.cauchy_levels.contains(&0) || self.cauchy_levels.windows(2).any(|w| w[0] >= w[1]) {
            return fail("study.cauchy_levels", "levels must be positive and strictly increasing".into());
        }
        if self.cauchy_factors.is_empty() || self.cauchy_factors.contains(&0) {
            return fail("study.cauchy_factors", "factors must be positive".into());
        }
        if ModeIndex::new(self.probe.0, self.probe.1).is_none() {
            return fail("study.probe", "the probe mode must be non-zero".into());
        }
        if let StoppingRule::Fixed(t) = self.stopping {
            if !(t >= 0.0) || !on_grid(t.min(self.horizon)) {
                return fail("study.stopping", format!("θ = {t} must be a non-negative multiple of dt"));
            }
        }
        for (key, x) in
            [("study.hit_ceiling", self.hit_ceiling), ("study.uniformity", self.uniformity), ("study.blowup_tolerance", self.blowup_tolerance)]
        {
            if !(x >= 0.0) {
                return fail(key, format!("must be non-negative, got {x}"));
            }
        }
        if self.audit_sets.is_empty() || self.audit_sets.iter().any(|s| !(1..=3).contains(s)) {
            return fail("audit.sets", "sets must be drawn from 1, 2, 3".into());
        }
        if self.audit_samples < 100 {
            return fail("audit.samples", format!("need at least 100 samples, got {}", self.audit_samples));
        }
        if self.audit_levels.is_empty() || self.audit_levels.contains(&0) {
            return fail("audit.levels", "levels must be positive".into());
        }
        if !(self.growth_exponent >= 0.0) {
            return fail("audit.growth_exponent", format!("must be non-negative, got {}", self.growth_exponent));
        }
        if self.simulate_level == 0 {
            return fail("simulate.level", "level must be positive".into());
        }
        let steps = steps_for(self.horizon, self.dt).unwrap_or(0);
        if self.snapshot_stride == 0 || steps % self.snapshot_stride != 0 {
            return fail("simulate.stride", format!("stride must divide the {steps} steps"));
        }
        let ic = &self.initial;
        match ic.kind {
            InitialKind::Zero => {}
            InitialKind::Mode => {
                if ModeIndex::new(ic.mode.0, ic.mode.1).is_none() {
                    return fail("initial.mode", "the initial mode must be non-zero".into());
                }
            }
            InitialKind::Random => {
                if ic.band == 0 {
                    return fail("initial.band", "band must be positive".into());
                }
                if !(ic.norm >= 0.0) || !(ic.spread >= 0.0) {
                    return fail("initial.norm", "norm and spread must be non-negative".into());
                }
                if !(ic.clip > 0.0) {
                    return fail("initial.clip", "clip must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check(&|_| 0)
    }

    pub fn noise(&self) -> spde_core::Result<SaltCoefficients> {
        let m = &self.model;
        match (&m.xi_file, m.xi_phase_seed) {
            (Some(path), _) => SaltCoefficients::load(path),
            (None, Some(seed)) => Ok(SaltCoefficients::trigonometric_random_phases(m.noise_modes, m.xi_amplitude, m.xi_ratio, seed)),
            (None, None) => Ok(SaltCoefficients::trigonometric(m.noise_modes, m.xi_amplitude, m.xi_ratio)),
        }
    }

    /// The drift/noise pair. Additive kinds take the ξ fields as columns.
    pub fn pair(&self) -> spde_core::Result<OperatorPair> {
        let m = &self.model;
        let columns = || -> spde_core::Result<Vec<_>> {
            let xi = self.noise()?;
            Ok((0..xi.len()).map(|i| xi.field(i)).collect())
        };
        match m.kind {
            OperatorKind::Zero => Ok(OperatorPair::zero()),
            OperatorKind::Heat if m.noise_modes == 0 && m.xi_file.is_none() => OperatorPair::heat(m.nu),
            OperatorKind::Heat => OperatorPair::heat_additive(m.nu, columns()?),
            OperatorKind::AdditiveOu => OperatorPair::additive_ou(columns()?),
            OperatorKind::SaltNs => OperatorPair::salt_ns(m.nu, self.noise()?),
        }
    }

    pub fn initial_condition(&self) -> spde_core::Result<InitialCondition> {
        let ic = &self.initial;
        match ic.kind {
            InitialKind::Zero => Ok(InitialCondition::Zero),
            InitialKind::Mode => InitialCondition::mode(ic.mode.0, ic.mode.1, ic.amplitude),
            InitialKind::Random => InitialCondition::random(ic.band, ic.exponent, ic.norm, ic.spread, ic.clip),
        }
    }

    pub fn ensemble(&self) -> spde_core::Result<EnsembleConfig> {
        let mut e = EnsembleConfig::new(self.pair()?, self.initial_condition()?);
        e.levels = self.levels.clone();
        e.paths = self.paths;
        e.master_seed = self.seed;
        e.dt = self.dt;
        e.horizon = self.horizon;
        e.scheme = self.scheme;
        e.threshold = self.threshold;
        e.cutoff = self.cutoff;
        e.thresholds = self.thresholds.clone();
        e.deltas = self.deltas.clone();
        e.cauchy_levels = self.cauchy_levels.clone();
        e.cauchy_factors = self.cauchy_factors.clone();
        e.probe = ModeIndex::new(self.probe.0, self.probe.1)
            .ok_or_else(|| spde_core::Error::InvalidParameter("the probe mode must be non-zero".into()))?;
        e.stopping = self.stopping;
        e.hit_ceiling = self.hit_ceiling;
        e.uniformity = self.uniformity;
        e.blowup_tolerance = self.blowup_tolerance;
        e.validate()?;
        Ok(e)
    }

    pub fn audit(&self) -> spde_core::Result<AuditConfig> {
        Ok(AuditConfig {
            sets: self.audit_sets.clone(),
            samples: self.audit_samples,
            levels: self.audit_levels.clone(),
            seed: self.seed,
            profile: GrowthProfile::new(self.growth_exponent)?,
        })
    }
}

struct Joined<'a, T>(&'a [T]);

impl<T: fmt::Display> fmt::Display for Joined<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// Writes every key of `c` in file form; `parse_config(&render(c)) == c`.
pub fn render(c: &RunConfig) -> String {
    let mut s = String::new();
    let m = &c.model;
    let ic = &c.initial;
    if let Some(cmd) = c.command {
        let _ = writeln!(s, "command = {}\n", cmd.name());
    }
    let _ = writeln!(s, "[model]");
    let _ = writeln!(s, "kind = {}", m.kind);
    let _ = writeln!(s, "nu = {}", m.nu);
    let _ = writeln!(s, "noise_modes = {}", m.noise_modes);
    let _ = writeln!(s, "xi_amplitude = {}", m.xi_amplitude);
    let _ = writeln!(s, "xi_ratio = {}", m.xi_ratio);
    if let Some(seed) = m.xi_phase_seed {
        let _ = writeln!(s, "xi_phase_seed = {seed}");
    }
    if let Some(p) = &m.xi_file {
        let _ = writeln!(s, "xi_file = {}", p.display());
    }
    let _ = writeln!(s, "\n[initial]");
    let _ = writeln!(s, "kind = {}", ic.kind.as_str());
    let _ = writeln!(s, "mode = {}, {}", ic.mode.0, ic.mode.1);
    let _ = writeln!(s, "amplitude = {}", ic.amplitude);
    let _ = writeln!(s, "band = {}", ic.band);
    let _ = writeln!(s, "exponent = {}", ic.exponent);
    let _ = writeln!(s, "norm = {}", ic.norm);
    let _ = writeln!(s, "spread = {}", ic.spread);
    let _ = writeln!(s, "clip = {}", ic.clip);
    let _ = writeln!(s, "\n[spaces]\nlevels = {}", Joined(&c.levels));
    let _ = writeln!(s, "\n[integrator]\ndt = {}\nT = {}\nscheme = {}", c.dt, c.horizon, c.scheme.as_str());
    let r = match c.cutoff {
        CutoffPolicy::Auto => "auto".to_string(),
        CutoffPolicy::Inactive => "inactive".to_string(),
        CutoffPolicy::Fixed(r) => r.to_string(),
    };
    let _ = writeln!(s, "\n[thresholds]\nM = {}\nM_list = {}\nR = {r}", c.threshold, Joined(&c.thresholds));
    let _ = writeln!(s, "\n[ensemble]\npaths = {}\nseed = {}", c.paths, c.seed);
    let _ = writeln!(s, "\n[study]");
    let _ = writeln!(s, "deltas = {}", Joined(&c.deltas));
    let _ = writeln!(s, "cauchy_levels = {}", Joined(&c.cauchy_levels));
    let _ = writeln!(s, "cauchy_factors = {}", Joined(&c.cauchy_factors));
    let _ = writeln!(s, "probe = {}, {}", c.probe.0, c.probe.1);
    let _ = writeln!(s, "stopping = {}", c.stopping.describe());
    let _ = writeln!(s, "hit_ceiling = {}", c.hit_ceiling);
    let _ = writeln!(s, "uniformity = {}", c.uniformity);
    let _ = writeln!(s, "blowup_tolerance = {}", c.blowup_tolerance);
    let _ = writeln!(s, "\n[audit]");
    let _ = writeln!(s, "sets = {}", Joined(&c.audit_sets));
    let _ = writeln!(s, "samples = {}", c.audit_samples);
    let _ = writeln!(s, "levels = {}", Joined(&c.audit_levels));
    let _ = writeln!(s, "growth_exponent = {}", c.growth_exponent);
    let _ = writeln!(s, "\n[simulate]\nlevel = {}\nstride = {}", c.simulate_level, c.snapshot_stride);
    let _ = writeln!(s, "\n[output]\ndir = {}", c.output.display());
    s
}

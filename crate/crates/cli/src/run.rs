use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use spde_core::diagnostics::{
    assumption_audit, cauchy_convergence_study, energy_check, equicontinuity_study, functional_tightness_study,
    hitting_probability_study, hv_bound_study, increment_tightness_study, moment_bound_study, strat_ito_check,
    EstimateReport,
};
use spde_core::engine::{path_seed, simulate_path, write_norm_csv, write_snapshots, PathConfig, PathRecord};
use spde_core::{Space, Workspace};

use crate::config::{render, RunConfig};
use crate::Command;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub seed: u64,
    /// The configuration as it was run, in file form.
    pub config: String,
    pub files: Vec<FileDigest>,
    pub pass: bool,
    /// Engine error that ended the run, if any.
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs `command` and writes its outputs plus `manifest.json` into `out`.
///
/// Engine errors do not abort: they are recorded in the manifest, which then
/// fails. Only I/O problems are returned as errors.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> anyhow::Result<RunManifest> {
    let started = chrono::Utc::now().to_rfc3339();
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let mut written = Vec::new();
    let outcome = dispatch(command, config, out, &mut written);
    let (pass, error) = match outcome {
        Ok(pass) => (pass, None),
        Err(Failure::Engine(e)) => (false, Some(e.to_string())),
        Err(Failure::Io(e)) => return Err(e),
    };
    let files = written
        .iter()
        .map(|name: &String| {
            let path = out.join(name);
            let bytes = fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
            Ok(FileDigest { path: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        seed: config.seed,
        config: render(config),
        files,
        pass,
        error,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

enum Failure {
    Engine(spde_core::Error),
    Io(anyhow::Error),
}

impl From<spde_core::Error> for Failure {
    fn from(e: spde_core::Error) -> Self {
        Failure::Engine(e)
    }
}

fn io_context<T>(r: std::io::Result<T>, path: &Path) -> Result<T, Failure> {
    r.with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)
}

fn dispatch(command: Command, config: &RunConfig, out: &Path, written: &mut Vec<String>) -> Result<bool, Failure> {
    if command == Command::Simulate {
        return simulate(config, out, written);
    }
    let report = if command == Command::Assumptions {
        assumption_audit(&config.pair()?, &config.audit()?)?
    } else {
        let e = config.ensemble()?;
        match command {
            Command::Moments => moment_bound_study(&e)?,
            Command::Hitting => hitting_probability_study(&e)?,
            Command::Tightness => increment_tightness_study(&e)?,
            Command::TightnessFunctional => functional_tightness_study(&e)?,
            Command::Cauchy => cauchy_convergence_study(&e)?,
            Command::Equicontinuity => equicontinuity_study(&e)?,
            Command::HvBounds => hv_bound_study(&e)?,
            Command::EnergyCheck => energy_check(&e)?,
            Command::StratItoCheck => strat_ito_check(&e)?,
            Command::Simulate | Command::Assumptions => unreachable!("handled above"),
        }
    };
    write_report(&report, command.name(), out, written)?;
    Ok(report.pass)
}

fn write_report(report: &EstimateReport, stem: &str, out: &Path, written: &mut Vec<String>) -> Result<(), Failure> {
    let csv = out.join(format!("{stem}.csv"));
    io_context(fs::write(&csv, report.to_csv()), &csv)?;
    written.push(format!("{stem}.csv"));
    let js = out.join(format!("{stem}.json"));
    io_context(fs::write(&js, report.to_json() + "\n"), &js)?;
    written.push(format!("{stem}.json"));
    Ok(())
}

/// One path at `simulate.level`, seeded like path 0 of an ensemble.
fn simulate(config: &RunConfig, out: &Path, written: &mut Vec<String>) -> Result<bool, Failure> {
    let pair = config.pair()?;
    let pc = PathConfig::new(config.simulate_level, config.dt, config.horizon)?
        .with_scheme(config.scheme)
        .with_stride(config.snapshot_stride)?
        .with_threshold(config.threshold)?
        .with_cutoff(config.cutoff);
    let seed = path_seed(config.seed, 0);
    let initial = config.initial_condition()?.sample(seed);
    let mut ws = Workspace::new();
    let (record, error) = match simulate_path(&pair, &pc, &initial, seed, &mut ws) {
        Ok(r) => (r, None),
        Err(spde_core::Error::Blowup { time, partial: Some(p) }) => (*p, Some(spde_core::Error::Blowup { time, partial: None })),
        Err(e) => return Err(e.into()),
    };
    let mut emit = |name: &str, f: &dyn Fn(BufWriter<File>) -> spde_core::Result<()>| -> Result<(), Failure> {
        let path = out.join(name);
        let file = io_context(File::create(&path), &path)?;
        f(BufWriter::new(file)).map_err(|e| match e {
            spde_core::Error::Io(io) => Failure::Io(anyhow::Error::new(io).context(format!("writing {}", path.display()))),
            other => Failure::Engine(other),
        })?;
        written.push(name.to_string());
        Ok(())
    };
    emit("simulate.snap", &|w| write_snapshots(&record, w))?;
    emit("simulate_norms.csv", &|w| write_norm_csv(&record, w))?;
    let summary = simulation_summary(config, &pc, &record, &pair);
    let path = out.join("simulate.json");
    io_context(fs::write(&path, serde_json::to_string_pretty(&summary).expect("plain json") + "\n"), &path)?;
    written.push("simulate.json".to_string());
    match error {
        Some(e) => Err(e.into()),
        None => Ok(true),
    }
}

fn simulation_summary(config: &RunConfig, pc: &PathConfig, record: &PathRecord, pair: &spde_core::OperatorPair) -> Value {
    let baseline = record.initial().norm_sq(Space::U);
    // null when the cutoff is inactive
    let cutoff = Some(record.cutoff.threshold()).filter(|r| r.is_finite());
    json!({
        "kind": pair.kind().as_str(),
        "level": pc.level,
        "dt": pc.dt,
        "T": pc.horizon(),
        "scheme": pc.scheme.as_str(),
        "seed": record.seed,
        "master_seed": config.seed,
        "M": config.threshold,
        "R": cutoff,
        "initial_norm_u": baseline.sqrt(),
        "terminal_norm_u": record.terminal().norm(Space::U),
        "hit_time": record.hit_time(),
        "blowup": record.is_blowup(),
        "snapshot_stride": record.snapshot_stride(),
        "frames": record.snapshots.len(),
    })
}

//! Batch front end for `spde-core`: configuration files, the experiment
//! registry and run manifests.

pub mod config;
mod run;

pub use config::{parse_config, render, ConfigError, RunConfig};
pub use run::{run, sha256_hex, FileDigest, RunManifest};

/// Every experiment the binary can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Moments,
    Hitting,
    Tightness,
    TightnessFunctional,
    Cauchy,
    Equicontinuity,
    HvBounds,
    Assumptions,
    EnergyCheck,
    StratItoCheck,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Simulate,
        Command::Moments,
        Command::Hitting,
        Command::Tightness,
        Command::TightnessFunctional,
        Command::Cauchy,
        Command::Equicontinuity,
        Command::HvBounds,
        Command::Assumptions,
        Command::EnergyCheck,
        Command::StratItoCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Hitting => "hitting",
            Command::Tightness => "tightness",
            Command::TightnessFunctional => "tightness-functional",
            Command::Cauchy => "cauchy",
            Command::Equicontinuity => "equicontinuity",
            Command::HvBounds => "hv-bounds",
            Command::Assumptions => "assumptions",
            Command::EnergyCheck => "energy-check",
            Command::StratItoCheck => "strat-ito-check",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use spde_cli::{parse_config, run, Command};

/// Run one simulation or diagnostic study from a config file.
#[derive(Debug, Parser)]
#[command(name = "spde", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[ensemble] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to $SPDE_OUT, then `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut config = parse_config(&text).with_context(|| format!("in {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(cmd) = config.command.filter(|&c| c != cli.command) {
        eprintln!("note: config names `{}`, running `{}`", cmd.name(), cli.command.name());
    }
    config.command = Some(cli.command);
    let out = cli
        .out
        .or_else(|| std::env::var_os("SPDE_OUT").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| config.output.clone());
    config.output = out.clone();
    let manifest = run(cli.command, &config, &out)?;
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    for f in &manifest.files {
        println!("{}  {}", f.sha256, out.join(&f.path).display());
    }
    println!("{}: {}", cli.command.name(), if manifest.pass { "pass" } else { "FAIL" });
    Ok(manifest.pass)
}

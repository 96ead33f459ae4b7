use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use zeno_switch::config::{load_config, ScenarioKind};
use zeno_switch::run::execute;

/// Quantum-Zeno all-optical switch simulator.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// steady, pulse, scan, sweep-power or calibrate.
    scenario: ScenarioKind,
    /// Run configuration (`key = value` lines).
    #[arg(long, short)]
    config: PathBuf,
    /// Output file; overrides `output.path`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    if cfg.scenario.kind() != cli.scenario {
        eprintln!(
            "error: {}: config describes scenario `{}`, not `{}`",
            cli.config.display(),
            cfg.scenario.kind(),
            cli.scenario
        );
        return ExitCode::from(1);
    }
    // output.path is relative to the config file
    let output = cli.output.or_else(|| {
        cfg.output.as_ref().map(|p| match cli.config.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    });
    match execute(&cfg, output.as_deref()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

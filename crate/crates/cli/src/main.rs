mod commands;
mod config;
mod parse;
mod render;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, RunConfig};
use render::Report;

const THREADS_VAR: &str = "CONFSPHERES_THREADS";

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn emit(cfg: &RunConfig, report: &impl Report) -> Result<bool, String> {
    let text = report.render(cfg.format);
    match &cfg.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

fn run(cli: Cli) -> Result<bool, String> {
    init_threads()?;
    let cfg = RunConfig::resolve(cli.command, cli.flags)?;
    match cfg.command {
        Command::Hessian => emit(&cfg, &commands::hessian(&cfg)?),
        Command::Invariance => emit(&cfg, &commands::invariance(&cfg)?),
        Command::Spheres => {
            let report = commands::spheres(&cfg)?;
            if let Some(p) = &cfg.profile_output {
                std::fs::write(p, report.profile_csv()).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            emit(&cfg, &report)
        }
        Command::Suite => emit(&cfg, &commands::suite(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

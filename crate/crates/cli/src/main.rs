use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use domino_hydro::harness::{emit_outputs, run, ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulate,
    Pde,
    Compare,
    EquilibriumTable,
    OraclePyramid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Pde => Mode::Pde,
            ModeArg::Compare => Mode::Compare,
            ModeArg::EquilibriumTable => Mode::EquilibriumTable,
            ModeArg::OraclePyramid => Mode::OraclePyramid,
        }
    }
}

/// Domino shuffling height simulations and their Hamilton-Jacobi limit.
///
/// Set DOMINO_HYDRO_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "domino-hydro", version)]
struct Cli {
    mode: ModeArg,
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's "output", else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let (cfg, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::load(path)?, base)
        }
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    let cfg = cfg.resolve(Some(cli.mode.into()))?;
    let out = cli
        .out
        .or_else(|| cfg.output.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let (report, fields) = run(&cfg, &base).with_context(|| format!("{} run failed", cfg.mode().name()))?;
    let written = emit_outputs(&report, &fields, &out)?;
    if let Some(h) = &report.headline {
        let bound = h.threshold.map_or(String::new(), |t| format!(" (threshold {t})"));
        println!("{} = {}{bound}", h.metric, h.value);
    }
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("threshold exceeded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqhhg_cli::{run, Kind, Overrides, RunConfig, RunOptions};

/// High-harmonic generation driven by squeezed, elliptically polarized light.
#[derive(Parser)]
#[command(name = "sqhhg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble spectrum and per-harmonic observables of one driver.
    Spectrum(Common),
    /// ΔS against squeezing angle with its Fourier coefficients.
    PhiSweep(Common),
    /// Observables and ΔS(0) over a grid of ellipticities.
    EllipticitySweep(Common),
    /// g² table of one driver.
    G2Report(Common),
    /// Toy-model g² by quadrature and closed form.
    ToyG2(Common),
    /// g² of one harmonic with ground-state depletion, over ε̄ and I_sq.
    DepletionSweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature samples per ensemble.
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse parameter points already stored in the output directory.
    #[arg(long)]
    resume: bool,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Spectrum(c) => (Kind::Spectrum, c),
        Command::PhiSweep(c) => (Kind::PhiSweep, c),
        Command::EllipticitySweep(c) => (Kind::EllipticitySweep, c),
        Command::G2Report(c) => (Kind::G2Report, c),
        Command::ToyG2(c) => (Kind::ToyG2, c),
        Command::DepletionSweep(c) => (Kind::DepletionSweep, c),
    };
    match execute(kind, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(kind: Kind, common: Common) -> sqhhg_cli::Result<()> {
    let base = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        out: common.out,
        samples: common.samples,
        svg: common.svg,
    };
    let config = base.resolve(kind, &overrides)?;
    let summary = run(
        &config,
        &RunOptions {
            resume: common.resume,
            threads: common.threads,
        },
    )?;
    println!(
        "{}: {} points computed, {} resumed",
        kind.name(),
        summary.computed,
        summary.resumed
    );
    for f in &summary.files {
        println!("  {}", config.output.directory.join(f).display());
    }
    Ok(())
}

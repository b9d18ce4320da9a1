use clap::{Parser, Subcommand};
use heatlab::cli::{exit_code, run, Command, RunOptions};
use heatlab::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Heat statistics of two-time measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment file
    #[arg(long)]
    config: PathBuf,
    /// overrides `seed` in the config
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// output directory, overrides `[output] dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Van Hove weak-coupling law: characteristic function, cumulants, samples, equivalence scans
    Vanhove(Common),
    /// classical linear or harmonic baths
    Classical(Common),
    /// full counting statistics for a finite matrix model
    Ttm(Common),
    /// moment growth for the fermionic impurity model
    FermionImpurity(Common),
    /// moment growth for the bosonic oscillator model
    BosonOscillator(Common),
    /// truncated Fock model against the Van Hove limit
    VanhoveTruncated(Common),
    /// thermodynamic-limit convergence scan
    TlConvergence(Common),
    /// tail diagnostics for a sample file
    Tails(Common),
    /// one-particle lemma checks
    Lemmas(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::Vanhove(c) => (Command::Vanhove, c),
        Sub::Classical(c) => (Command::Classical, c),
        Sub::Ttm(c) => (Command::Ttm, c),
        Sub::FermionImpurity(c) => (Command::FermionImpurity, c),
        Sub::BosonOscillator(c) => (Command::BosonOscillator, c),
        Sub::VanhoveTruncated(c) => (Command::VanhoveTruncated, c),
        Sub::TlConvergence(c) => (Command::TlConvergence, c),
        Sub::Tails(c) => (Command::Tails, c),
        Sub::Lemmas(c) => (Command::Lemmas, c),
    };
    let result = heatlab::set_threads(common.threads)
        .and_then(|_| ExperimentConfig::load(&common.config))
        .and_then(|cfg| {
            run(
                cmd,
                cfg,
                &RunOptions {
                    seed: common.seed,
                    out: common.out,
                },
            )
        });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("heatlab {}: {e}", cmd.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

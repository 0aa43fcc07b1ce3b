//! `widom`: build `K(γ)` models, check the Widom-factor lower bounds and
//! export tables.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use widom_core::ExactReal;

use crate::config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "widom", version, about = "Widom factors of weakly equilibrium Cantor sets")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base precision in bits.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[arg(long, global = true)]
    smax: Option<u32>,
    #[arg(long, global = true)]
    eps_cap: Option<String>,
    #[arg(long, global = true)]
    eps_green: Option<String>,
    /// Evaluation point outside K(γ); repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    x0: Vec<String>,
    /// Largest degree for `verify thm1` rows and L2 tables.
    #[arg(long, global = true)]
    n_max: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Sequence spec as inline JSON, e.g. '{"family":"constant","c":"e"}'.
    #[arg(long, global = true)]
    sequence: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the model and write its summary.
    Build,
    /// Check an inequality family; exit status 1 if a certified row fails.
    Verify {
        #[arg(value_enum)]
        which: Which,
    },
    /// Write a table of computed quantities.
    Report {
        #[arg(value_enum)]
        quantity: Quantity,
        /// Level for `levels` (defaults to smax).
        #[arg(long)]
        level: Option<u32>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Which {
    Thm1,
    Thm2,
    Invariants,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Quantity {
    WidomSup,
    WidomL2,
    WidomRes,
    Green,
    Harnack,
    Levels,
}

fn resolve(o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(b) = o.precision_bits {
        cfg.precision.base_bits = b;
    }
    if let Some(s) = o.smax {
        cfg.smax = s;
    }
    if let Some(e) = &o.eps_cap {
        cfg.eps_cap = ExactReal::parse(e)?;
    }
    if let Some(e) = &o.eps_green {
        cfg.eps_green = ExactReal::parse(e)?;
    }
    if !o.x0.is_empty() {
        cfg.x0 = o.x0.iter().map(|x| ExactReal::parse(x)).collect::<Result<_, _>>()?;
    }
    if let Some(n) = o.n_max {
        cfg.n_max = Some(n);
    }
    if let Some(p) = &o.out {
        cfg.out = p.clone();
    }
    if let Some(f) = o.format {
        cfg.format = f;
    }
    if let Some(s) = &o.sequence {
        cfg.sequence = Some(serde_json::from_str(s)?);
        cfg.gamma = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// 2 for configuration problems, 3 for precision or convergence exhaustion.
fn error_code(err: &anyhow::Error) -> u8 {
    let convergence = err
        .chain()
        .filter_map(|e| e.downcast_ref::<widom_core::Error>())
        .any(widom_core::Error::is_convergence);
    if convergence {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    let cfg = resolve(&cli.overrides)?;
    match cli.command {
        Command::Build => commands::build(&cfg),
        Command::Verify { which } => match which {
            Which::Thm1 => commands::verify_thm1(&cfg),
            Which::Thm2 => commands::verify_thm2(&cfg),
            Which::Invariants => commands::verify_invariants(&cfg),
        },
        Command::Report { quantity, level } => match quantity {
            Quantity::WidomSup => commands::report_sup(&cfg),
            Quantity::WidomL2 => commands::report_l2(&cfg),
            Quantity::WidomRes => commands::report_residual(&cfg),
            Quantity::Green => commands::report_green(&cfg),
            Quantity::Harnack => commands::report_harnack(&cfg),
            Quantity::Levels => commands::report_levels(&cfg, level),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) if out.failures == 0 => ExitCode::SUCCESS,
        Ok(out) => {
            eprintln!("{} certified checks failed", out.failures);
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_code(&err))
        }
    }
}

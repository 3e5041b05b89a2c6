//! `eightfold`: solve, scan, locate, branch, fold and surface runs driven by
//! one JSON config. Exit codes: 0 success, 2 usage error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eightfold::Error;

use crate::commands::Ctx;
use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "eightfold", version, about = "Three-body eights, three-fold bifurcations and their folds")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// lj-high, lj-low, cy, homogeneous (find: lj-high, lj-low, newtonian-eight)
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write the effective configuration to the output directory.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one figure-eight and write its orbit file.
    Find {
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Follow the three-fold candidate eigenvalue along the family.
    Scan {
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Locate the three-fold bifurcation point.
    Locate {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        bracket: Option<Vec<f64>>,
    },
    /// Trace the bifurcated branch through its fold and fit the reduced model.
    Branch {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        bracket: Option<Vec<f64>>,
    },
    /// Fold row from a branch CSV.
    Fold {
        #[arg(long)]
        branch: Option<PathBuf>,
        #[arg(long)]
        a3_integral: Option<f64>,
    },
    /// Reduced-action surface and its critical points.
    Surface {
        #[arg(long, allow_hyphen_values = true)]
        a3: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        a4: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        kappa_rel: Option<f64>,
        #[arg(long)]
        extent: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Actions of the two Lennard-Jones eights and the period where they join.
    Merge {
        #[arg(long)]
        period: Option<f64>,
    },
}

fn set<T>(field: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *field = v;
    }
}

fn bracket(v: Option<Vec<f64>>) -> Option<(f64, f64)> {
    v.map(|b| (b[0], b[1]))
}

fn configure(cli: Cli) -> anyhow::Result<(RunConfig, Command, bool)> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| Error::Usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    let g = cli.common;
    set(&mut c.family, g.family);
    set(&mut c.modes, g.modes);
    set(&mut c.samples, g.samples);
    set(&mut c.output, g.output);
    match &cli.command {
        Command::Find { period, exponent } => {
            if period.is_some() {
                c.find.period = *period;
            }
            set(&mut c.find.exponent, *exponent);
        }
        Command::Scan { from, to, steps } => {
            if from.is_some() {
                c.scan.from = *from;
            }
            if to.is_some() {
                c.scan.to = *to;
            }
            set(&mut c.scan.steps, *steps);
        }
        Command::Locate { bracket: b } | Command::Branch { bracket: b } => {
            if let Some(b) = bracket(b.clone()) {
                c.bracket = Some(b);
            }
        }
        Command::Fold { branch, a3_integral } => {
            if branch.is_some() {
                c.fold.branch = branch.clone();
            }
            if a3_integral.is_some() {
                c.fold.a3_integral = *a3_integral;
            }
        }
        Command::Surface { a3, a4, kappa, kappa_rel, extent, resolution } => {
            let s = &mut c.surface;
            for (field, v) in [(&mut s.a3, a3), (&mut s.a4, a4), (&mut s.kappa, kappa), (&mut s.kappa_rel, kappa_rel), (&mut s.extent, extent)] {
                if v.is_some() {
                    *field = *v;
                }
            }
            set(&mut s.resolution, *resolution);
        }
        Command::Merge { period } => set(&mut c.merge.period, *period),
    }
    Ok((c, cli.command, g.dump_config))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (config, command, dump) = configure(cli)?;
    let ctx = Ctx::new(config);
    if dump {
        let text = serde_json::to_string_pretty(&ctx.config)? + "\n";
        eightfold::io::write_atomic(&ctx.config.output.join("config.json"), &text)?;
    }
    match command {
        Command::Find { .. } => commands::find(&ctx),
        Command::Scan { .. } => commands::scan(&ctx),
        Command::Locate { .. } => commands::locate(&ctx),
        Command::Branch { .. } => commands::branch(&ctx),
        Command::Fold { .. } => commands::fold(&ctx),
        Command::Surface { .. } => commands::surface(&ctx),
        Command::Merge { .. } => commands::merge(&ctx),
    }
}

/// 2 for bad input, 3 for everything the numerics could not deliver.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Usage(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on malformed command lines
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

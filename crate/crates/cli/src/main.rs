//! `bqo`: validation, search, descent and gadget commands over the document
//! formats of `bqo-core`.
//!
//! Exit status: 0 success, 1 property violated, 2 input error, 3 budget
//! exceeded.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bqo_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{RunConfig, WindowSpec};

#[derive(Parser, Debug)]
#[command(name = "bqo", version, about = "Window-scale better-quasi-order toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Maximum number of enumerated candidates per run.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker threads for candidate enumeration. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Search below an array only on its own window, not on subwindows.
    #[arg(long, global = true)]
    fixed_window: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report the order properties of relation files.
    CheckRelation {
        files: Vec<PathBuf>,
        /// Require a partial order rather than just reflexivity.
        #[arg(long)]
        partial_order: bool,
    },
    /// Check that a ranking is a partial ranking of a relation.
    CheckRanking { relation: PathBuf, ranking: PathBuf },
    /// Validate block files and report whether they are barriers.
    CheckBlock { files: Vec<PathBuf> },
    /// Search for a bad sequence of a given length.
    BadSeq {
        relation: PathBuf,
        #[arg(long)]
        length: usize,
    },
    /// Search for a bad array over a window.
    BadArray {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        window: WindowSpec,
        #[arg(long)]
        rank: usize,
    },
    /// Decide minimality of a bad array within its window.
    MinBad {
        array: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Rank bound for candidates below the array.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Run the minimal-bad-array descent from a bad array.
    Descend {
        array: PathBuf,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 20)]
        max_steps: usize,
    },
    /// Build and query the sequence-space gadget.
    Gadget {
        #[command(subcommand)]
        command: GadgetCommand,
    },
    /// Worked demonstrations.
    Demo {
        #[command(subcommand)]
        command: DemoCommand,
    },
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Relation file for the values.
    #[arg(long, required_unless_present = "gadget", conflicts_with = "gadget")]
    relation: Option<PathBuf>,
    /// Ranking file for the relation; defaults to the identity.
    #[arg(long, requires = "relation")]
    ranking: Option<PathBuf>,
    /// Gadget family file; values range over its sequence space.
    #[arg(long)]
    gadget: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GadgetCommand {
    /// Build the space of a family and check its basic facts.
    Build {
        family: Option<PathBuf>,
        /// Generate a random family from `--seed` instead of reading one.
        #[arg(long, conflicts_with = "family")]
        random: bool,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        max_points: usize,
        #[arg(long, default_value_t = 5)]
        omega_bound: u32,
        /// Write the generated family here, so the canonical array can refer to it.
        #[arg(long, requires = "random")]
        write_family: Option<PathBuf>,
        /// Window of the canonical bad array.
        #[arg(long)]
        window: Option<WindowSpec>,
        /// Write the canonical bad array here as an array document.
        #[arg(long)]
        write_canonical: Option<PathBuf>,
    },
    /// Read off which coordinates of a bad array stay in ω*.
    Decode {
        array: PathBuf,
        #[arg(long)]
        coord: usize,
    },
    /// Replace one coordinate of a bad array by a bad array into that member.
    Substitute {
        array: PathBuf,
        #[arg(long)]
        coord: usize,
        /// Bad array into the family member at `--coord`.
        #[arg(long)]
        with: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum DemoCommand {
    /// Rado's structure: a WQO whose power set is not a WQO.
    Rado {
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simpson,
    Laver,
}

fn run(cli: Cli) -> bqo_core::Result<commands::Outcome> {
    let config = RunConfig::new(
        cli.global.json,
        cli.global.budget,
        cli.global.jobs,
        cli.global.seed,
        cli.global.fixed_window,
    )?;
    match cli.command {
        Command::CheckRelation { files, partial_order } => commands::check_relation(&config, &files, partial_order),
        Command::CheckRanking { relation, ranking } => commands::check_ranking(&config, &relation, &ranking),
        Command::CheckBlock { files } => commands::check_block(&config, &files),
        Command::BadSeq { relation, length } => commands::bad_seq(&config, &relation, length),
        Command::BadArray { target, window, rank } => {
            let target = match (target.relation, target.gadget) {
                (Some(relation), _) => commands::TargetSource::Relation {
                    relation,
                    ranking: target.ranking,
                },
                (None, Some(family)) => commands::TargetSource::Gadget(family),
                (None, None) => return Err(Error::Domain("give --relation or --gadget".into())),
            };
            commands::bad_array(&config, &target, &window, rank)
        }
        Command::MinBad { array, mode, rank } => commands::min_bad(&config, &array, mode, rank),
        Command::Descend { array, rank, max_steps } => commands::descend(&config, &array, rank, max_steps),
        Command::Gadget { command } => match command {
            GadgetCommand::Build {
                family,
                random,
                size,
                max_points,
                omega_bound,
                write_family,
                window,
                write_canonical,
            } => {
                let source = match (family, random) {
                    (Some(path), false) => commands::FamilySource::File(path),
                    (None, true) => commands::FamilySource::Random {
                        size,
                        max_points,
                        omega_bound,
                        write_to: write_family,
                    },
                    _ => return Err(Error::Domain("give a family file or --random".into())),
                };
                commands::gadget_build(&config, source, window.as_ref(), write_canonical.as_deref())
            }
            GadgetCommand::Decode { array, coord } => commands::gadget_decode(&config, &array, coord),
            GadgetCommand::Substitute { array, coord, with } => {
                commands::gadget_substitute(&config, &array, coord, &with)
            }
        },
        Command::Demo {
            command: DemoCommand::Rado { n },
        } => commands::demo_rado(&config, n),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(_) => 3,
        Error::Postcondition(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.global.json;
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.output);
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            if json {
                print!("{}", commands::error_json(&e));
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

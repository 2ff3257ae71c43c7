//! `eulerian`: command-line access to the Eulerian triangle, its boundary,
//! reconstruction, sampling and the backward chain.

mod arrayfile;
mod exact;
mod output;
mod random;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use eulerian_core::boundary::TriangularArray;

use crate::output::OutputRecord;

/// Directory that relative `--out` paths resolve against.
pub const OUT_DIR_ENV: &str = "EULERIAN_OUT_DIR";

#[derive(Parser)]
#[command(name = "eulerian", version, about = "Exact and Monte Carlo tools for the Eulerian number triangle")]
struct Cli {
    /// Output encoding. `array` is accepted by commands whose result is a
    /// single triangular array (default for `mix`; `json` elsewhere).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for randomized commands. Without it a seed is drawn from the
    /// clock and recorded in the output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Require `--seed` for randomized commands, and fail on non-member input.
    #[arg(long, global = true)]
    strict: bool,
    /// Write to this file instead of stdout. Relative paths resolve against
    /// $EULERIAN_OUT_DIR when it is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Array,
}

#[derive(Subcommand)]
enum Command {
    /// Rows of the Eulerian triangle, optionally cross-checked.
    Triangle(exact::TriangleArgs),
    /// An extreme solution W(theta) and its checks.
    Boundary(exact::BoundaryArgs),
    /// Membership and mixture weights of a candidate solution.
    Decompose(exact::DecomposeArgs),
    /// Write a finite mixture of extreme solutions as an array file.
    Mix(exact::MixArgs),
    /// Convergence of truncated solutions to the boundary.
    #[command(subcommand)]
    Limit(exact::LimitCommand),
    /// Random arrangements and their laws.
    #[command(subcommand)]
    Sample(random::SampleCommand),
    /// The backward chain and the permutation/path bijection.
    #[command(subcommand)]
    Chain(random::ChainCommand),
}

/// Settings shared by all commands.
pub struct Ctx {
    pub seed: Option<u64>,
    pub strict: bool,
}

impl Ctx {
    /// The seed for a randomized command.
    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None if self.strict => bail!("--strict requires --seed for randomized commands"),
            None => Ok(std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)),
        }
    }
}

/// A record, plus the array it describes when there is exactly one.
pub struct Outcome {
    pub record: OutputRecord,
    pub array: Option<TriangularArray>,
}

impl From<OutputRecord> for Outcome {
    fn from(record: OutputRecord) -> Self {
        Outcome { record, array: None }
    }
}

fn render(outcome: &Outcome, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(outcome.record.to_json()),
        Format::Csv => outcome.record.to_csv(),
        Format::Array => match &outcome.array {
            Some(a) => Ok(arrayfile::write(a)),
            None => bail!("--format array is not available for `{}`", outcome.record.command),
        },
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let ctx = Ctx { seed: cli.seed, strict: cli.strict };
    let default_format = if matches!(cli.command, Command::Mix(_)) { Format::Array } else { Format::Json };
    let outcome = match cli.command {
        Command::Triangle(a) => exact::triangle(&a)?,
        Command::Boundary(a) => exact::boundary(&a)?,
        Command::Decompose(a) => exact::decompose(&a, &ctx)?,
        Command::Mix(a) => exact::mix(&a)?,
        Command::Limit(c) => exact::limit(&c)?,
        Command::Sample(c) => random::sample(&c, &ctx)?,
        Command::Chain(c) => random::chain(&c, &ctx)?,
    };
    let text = render(&outcome, cli.format.unwrap_or(default_format))?;
    match cli.out {
        Some(path) => {
            let path = resolve_out(&path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(outcome.record.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

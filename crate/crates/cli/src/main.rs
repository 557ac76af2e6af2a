//! `thinset`: run constructions and verifications from a JSON config and
//! write versioned JSON/CSV reports.
//!
//! Exit status: 0 when every check passes, 1 when a verification fails,
//! 2 for configuration or usage errors.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};
use thinset_core::interval::Precision;
use thinset_core::LogConvention;

use commands::{Ctx, Outcome};

pub const SCHEMA: &str = "thinset-report/1";
const DEFAULT_CAP: usize = thinset_core::falconer_set::DEFAULT_WINDOW_CAP;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Parser)]
#[command(name = "thinset", version, about = "Exact finite-depth checks for thin sets on the line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files; the report goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Starting precision for interval arithmetic.
    #[arg(long, global = true)]
    precision_bits: Option<u64>,
    /// Limit on enumerated intervals.
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[arg(long, global = true)]
    log_convention: Option<LogConvention>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Chain parameters, regime and branching counts.
    Chain,
    /// Membership of a point in F_n.
    Member,
    /// Triple sums of the rapid sequence.
    Triple,
    /// A path in the binary tree of nested intervals.
    Tree,
    /// Exact enumeration of F_n over a window.
    Window,
    /// Per-level window counts for a collapse chain.
    Dichotomy,
    /// Covering/packing counts and gauge costs.
    Dim,
    /// Independent Cantor tree and relation scans.
    CantorIndep,
    /// Digit Cantor set checks.
    CantorDigit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Chain => "chain",
            Self::Member => "member",
            Self::Triple => "triple",
            Self::Tree => "tree",
            Self::Window => "window",
            Self::Dichotomy => "dichotomy",
            Self::Dim => "dim",
            Self::CantorIndep => "cantor-indep",
            Self::CantorDigit => "cantor-digit",
        }
    }

    fn run(self, ctx: &Ctx) -> Result<Outcome, CliError> {
        match self {
            Self::Chain => commands::chain(ctx),
            Self::Member => commands::member(ctx),
            Self::Triple => commands::triple(ctx),
            Self::Tree => commands::tree(ctx),
            Self::Window => commands::window(ctx),
            Self::Dichotomy => commands::dichotomy(ctx),
            Self::Dim => commands::dim(ctx),
            Self::CantorIndep => commands::cantor_indep(ctx),
            Self::CantorDigit => commands::cantor_digit(ctx),
        }
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let raw = fs::read(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let text = String::from_utf8(raw.clone()).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let cfg = config::parse_config(&text)?;
    let bits = cli.precision_bits.or(cfg.precision_bits).unwrap_or(128);
    let cap = cli.cap.or(cfg.cap).unwrap_or(DEFAULT_CAP);
    if bits == 0 || cap == 0 {
        return Err(CliError::Config("precision and cap must be positive".into()));
    }
    let conv = cli.log_convention.or(cfg.log_convention).unwrap_or_default();
    let kind = cfg.kind.name();
    let ctx = Ctx { cfg, prec: Precision::new(bits), cap, conv };

    let outcome = cli.command.run(&ctx)?;
    let report = json!({
        "schema": SCHEMA,
        "version": thinset_core::VERSION,
        "command": cli.command.name(),
        "kind": kind,
        "config_sha256": hex::encode(Sha256::digest(&raw)),
        "precision_bits": bits,
        "cap": cap,
        "log_convention": conv.to_string(),
        "pass": outcome.pass,
        "result": outcome.result,
    });
    let body = serde_json::to_string_pretty(&report).expect("json value") + "\n";
    match cli.out {
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
            let stem = cli.command.name();
            write(dir.join(format!("{stem}.json")), &body)?;
            for (suffix, csv) in &outcome.tables {
                write(dir.join(format!("{stem}-{suffix}.csv")), csv)?;
            }
            println!("{stem}: {}", if outcome.pass { "pass" } else { "FAIL" });
        }
        None => print!("{body}"),
    }
    Ok(outcome.pass)
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

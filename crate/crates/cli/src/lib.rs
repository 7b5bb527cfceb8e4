//! `fri` command line: argument and config-file handling, run manifests,
//! and the subcommands.

pub mod commands;
pub mod error;
pub mod manifest;

use std::fs;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;

pub use error::CliError;
use manifest::{OutputDir, RunManifest, SeedSource};

#[derive(Debug, Parser)]
#[command(name = "fri", version, about = "Finitary random interlacements: sampling, capacities, percolation scans")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalOpts {
    /// Worker threads; results do not depend on it [default: available cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed, 0 <= seed < 2^63; drawn from system entropy and recorded when absent
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file; command-line flags take precedence over it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for results and manifest.json [default: fri-out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample FRI in a window (or restricted to a point set) and write trajectories
    Sample(commands::SampleOpts),
    /// Killed and classical capacity of a point set
    Capacity(commands::CapacityOpts),
    /// Crossing-probability scan over T (or u)
    Scan(commands::ScanOpts),
    /// Evaluate the good-box event on independent samples
    Goodbox(commands::GoodboxOpts),
    /// Subcritical threshold T0(u, d) and open-path bounds
    Peierls(commands::PeierlsOpts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Capacity(_) => "capacity",
            Command::Scan(_) => "scan",
            Command::Goodbox(_) => "goodbox",
            Command::Peierls(_) => "peierls",
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sample: commands::SampleOpts,
    #[serde(default)]
    pub capacity: commands::CapacityOpts,
    #[serde(default)]
    pub scan: commands::ScanOpts,
    #[serde(default)]
    pub goodbox: commands::GoodboxOpts,
    #[serde(default)]
    pub peierls: commands::PeierlsOpts,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().to_string();
            let key = offending_key(&text, e.span()).unwrap_or_else(|| "config".into());
            CliError::config(key, msg)
        })
    }
}

/// `section.key` for the line holding `span`, if it is a key line.
fn offending_key(text: &str, span: Option<std::ops::Range<usize>>) -> Option<String> {
    let start = span?.start.min(text.len());
    let mut section = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = Some(trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string());
        }
        if start < offset + line.len() {
            let key = trimmed.split('=').next()?.trim();
            if key.is_empty() || trimmed.starts_with('[') {
                return section;
            }
            return Some(match section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            });
        }
        offset += line.len();
    }
    section
}

/// Everything a subcommand needs besides its options.
pub struct Context {
    pub seed: u64,
    pub workers: usize,
    pub out: OutputDir,
}

pub struct RunOutcome {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<RunOutcome, CliError> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let (seed, seed_source) = match (cli.global.seed, file.seed) {
        (Some(s), _) => (s, SeedSource::Flag),
        (None, Some(s)) => (s, SeedSource::Config),
        (None, None) => (rand::random::<u64>() >> 1, SeedSource::Entropy),
    };
    if seed > i64::MAX as u64 {
        return Err(CliError::config("seed", "must be below 2^63 so the resolved config can record it"));
    }
    let workers = cli
        .global
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let out_dir = cli.global.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("fri-out"));
    let started = manifest::now();
    let mut ctx = Context { seed, workers, out: OutputDir::new(out_dir.clone()) };
    let name = cli.command.name();
    let section = match cli.command {
        Command::Sample(o) => commands::sample(o.over(file.sample), &mut ctx)?,
        Command::Capacity(o) => commands::capacity(o.over(file.capacity), &mut ctx)?,
        Command::Scan(o) => commands::scan(o.over(file.scan), &mut ctx)?,
        Command::Goodbox(o) => commands::goodbox(o.over(file.goodbox), &mut ctx)?,
        Command::Peierls(o) => commands::peierls(o.over(file.peierls), &mut ctx)?,
    };
    let mut resolved = toml::map::Map::new();
    resolved.insert("seed".into(), toml::Value::Integer(seed as i64));
    resolved.insert(name.into(), section);
    let resolved = toml::Value::Table(resolved);
    let echo = toml::to_string(&resolved).expect("resolved config serializes");
    eprintln!("# resolved configuration\n{echo}");
    ctx.out.write("config.toml", &echo)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        config: resolved,
        seed,
        seed_source,
        workers,
        started,
        finished: String::new(),
        outputs: Vec::new(),
    };
    let manifest = ctx.out.finish(manifest)?;
    Ok(RunOutcome { manifest, out_dir })
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Config { .. }) {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
                eprintln!("Run `fri {name} --help` for every option.");
            }
            e.exit_code()
        }
    }
}

//! Command-line front end for `lispray`.
//!
//! Every run writes line-delimited records (or a flat table) and a manifest
//! with the resolved configuration and per-check results. The exit status is
//! 0 when every check passes, 1 when a check fails, 2 for configuration
//! errors and 3 for failures while computing.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser};

pub use commands::Command;
pub use config::{parse_config, Overrides, RawConfig, RunConfig};
pub use error::CliError;
pub use manifest::{Check, RunManifest};
pub use output::Format;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LISPRAY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lispray", version, about = "Geometry of left-invariant sprays on Lie groups")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for records and manifest.json; without it records go to
    /// stdout and the manifest to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OverrideArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Builtin algebra name, replacing [algebra].
    #[arg(long)]
    pub algebra: Option<String>,
    /// Comma-separated initial velocity.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_span: Option<Vec<f64>>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub output_step: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            algebra: a.algebra.clone(),
            y0: a.y0.clone(),
            t_span: a.t_span.clone(),
            method: a.method.clone(),
            abs_tol: a.abs_tol,
            rel_tol: a.rel_tol,
            output_step: a.output_step,
            samples: a.samples,
            directions: a.directions,
            horizon: a.horizon,
            resolution: a.resolution,
            mode: a.mode.clone(),
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let (mut raw, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (config::parse_raw(&text)?, base)
        }
        None => (RawConfig::default(), PathBuf::from(".")),
    };
    Overrides::from(&cli.overrides).apply(&mut raw);
    config::resolve(raw, &base)
}

/// Result of one invocation, before anything is written.
pub struct RunResult {
    pub exit_code: i32,
    pub records: Vec<serde_json::Value>,
    pub manifest: RunManifest,
}

pub fn execute(cli: &Cli) -> RunResult {
    let start = Instant::now();
    let mut manifest = RunManifest::new(cli.command.name());
    let mut records = Vec::new();
    let result = load(cli).and_then(|cfg| {
        manifest.seed = Some(cfg.seed);
        manifest.config = serde_json::to_value(&cfg.resolved).ok();
        commands::dispatch(cli.command, &cfg)
    });
    let exit_code = match result {
        Ok(outcome) => {
            records = outcome.records;
            manifest.checks = outcome.checks;
            let ok = manifest.checks.iter().all(|c| c.passed);
            manifest.status = if ok { "ok" } else { "checks_failed" };
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let err = e.to_json();
            records.push(output::record("error", serde_json::json!({ "error": err.clone() })));
            manifest.error = Some(err);
            manifest.status = "error";
            e.exit_code()
        }
    };
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    RunResult { exit_code, records, manifest }
}

/// Runs and writes all artifacts; returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let res = execute(cli);
    let body = output::render(&res.records, cli.format);
    let manifest = output::to_json_line(&res.manifest) + "\n";
    let written = match &cli.out {
        Some(dir) => std::fs::create_dir_all(dir)
            .and_then(|_| {
                let name = match cli.format {
                    Format::Records => "records.jsonl",
                    Format::Table => "table.tsv",
                };
                std::fs::write(dir.join(name), &body)
            })
            .and_then(|_| std::fs::write(dir.join("manifest.json"), &manifest))
            .map_err(|e| format!("{}: {e}", dir.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            let mut stderr = std::io::stderr().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .and_then(|_| stderr.write_all(manifest.as_bytes()))
                .map_err(|e| e.to_string())
        }
    };
    match written {
        Ok(()) => res.exit_code,
        Err(e) => {
            eprintln!("lispray: cannot write output: {e}");
            3
        }
    }
}

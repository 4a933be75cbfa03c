//! Batch front end: one command per process, config file in, report out.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use commands::Overrides;
use error::{CliError, EXIT_OK, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "kobasket", version, about = "Basket and spread option pricing under multi-asset KoBoL/Gaussian models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price by Fourier density quadrature (up to three assets).
    Price(CommonArgs),
    /// Price by terminal-law Monte Carlo.
    Mc(CommonArgs),
    /// Emit the joint density of the log-returns on the pricing grid (up to two assets).
    Density(CommonArgs),
    /// Run the cross-checks: martingale conditions, Fourier vs Monte Carlo, closed forms, density hygiene.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long = "grid-l")]
    pub grid_l: Option<f64>,
    /// Use the configured drifts as given instead of solving the martingale conditions.
    #[arg(long = "no-adjust")]
    pub no_adjust: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format; `density` defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            grid_n: self.grid_n,
            grid_l: self.grid_l,
            no_adjust: self.no_adjust,
        }
    }
}

/// Rendered output of one command.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
    pub summary: String,
}

fn json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialise");
    s.push('\n');
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&format!("{prefix}[{i}]"), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// `key,value` rows in schema order.
fn key_value_csv<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialise");
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{},{}\n", quote(&k), quote(&v)));
    }
    s
}

fn render<T: Serialize>(report: &T, format: Format) -> String {
    match format {
        Format::Json => json(report),
        Format::Csv => key_value_csv(report),
    }
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    let (args, name) = match command {
        Command::Price(a) => (a, "price"),
        Command::Mc(a) => (a, "mc"),
        Command::Density(a) => (a, "density"),
        Command::Validate(a) => (a, "validate"),
    };
    let cfg = args.overrides().apply(config::load(&args.config)?)?;
    let o = args.overrides();
    let format = args.format.unwrap_or(if name == "density" { Format::Csv } else { Format::Json });
    let run = || -> Result<Outcome, CliError> {
        Ok(match command {
            Command::Price(_) => {
                let r = commands::price(&cfg, &o)?;
                Outcome {
                    summary: format!("price {} (N = {}, truncation loss {:.2e})", r.price, r.grid.points, r.truncation_loss),
                    text: render(&r, format),
                    exit_code: EXIT_OK,
                }
            }
            Command::Mc(_) => {
                let r = commands::mc(&cfg, &o)?;
                Outcome {
                    summary: format!("estimate {} ± {} ({} paths, seed {})", r.estimate, r.std_error, r.n_paths, r.seed),
                    text: render(&r, format),
                    exit_code: EXIT_OK,
                }
            }
            Command::Density(_) => {
                let r = commands::density(&cfg, &o)?;
                Outcome {
                    summary: format!(
                        "density on {}^{} nodes, config {}",
                        r.grid.points,
                        r.grid.center.len(),
                        r.meta.config_sha256
                    ),
                    text: match format {
                        Format::Csv => commands::density_csv(&r),
                        Format::Json => json(&r),
                    },
                    exit_code: EXIT_OK,
                }
            }
            Command::Validate(_) => {
                let r = commands::validate(&cfg, &o)?;
                let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
                Outcome {
                    summary: if r.passed {
                        format!("all {} checks passed", r.checks.len())
                    } else {
                        format!("failed checks: {}", failed.join(", "))
                    },
                    text: render(&r, format),
                    exit_code: if r.passed { EXIT_OK } else { EXIT_VALIDATION },
                }
            }
        })
    };
    match args.threads {
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {k} worker threads: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Output destination of a parsed command line.
pub fn out_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Price(a) | Command::Mc(a) | Command::Density(a) | Command::Validate(a) => a.out.as_ref(),
    }
}

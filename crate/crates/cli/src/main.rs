//! `mce`: Gaussian-weighted area and asymptotic volume ratio of minimal
//! submanifolds from the command line.

mod commands;
mod config;
mod error;
mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_center, ConfigLayer, Format, GridSpec, RunConfig, SurfaceArg};
use error::{CliError, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "mce", version, about = "Huisken's functional and the extrinsic asymptotic volume ratio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// H at a single tau by direct quadrature (JSON).
    Entropy(Common),
    /// H over a tau grid from the radial profile (CSV).
    Sweep(Common),
    /// Density ratios over the r grid and the EAVR bracket.
    Eavr(Common),
    /// Normalized volume and shell ratio at every r_j.
    Blowdown(Common),
    /// Run the full inequality suite (JSON report).
    Verify(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Surface name, inline JSON, or @file.
    #[arg(long)]
    surface: Option<String>,
    /// Center y0 as x,y,z,... (default origin).
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// {lin|log}:lo:hi:count
    #[arg(long)]
    tau_grid: Option<GridSpec>,
    /// {lin|log}:lo:hi:count
    #[arg(long)]
    r_grid: Option<GridSpec>,
    /// Target relative quadrature error.
    #[arg(long)]
    eps: Option<f64>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write an SVG plot here.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn layer(&self) -> Result<ConfigLayer, CliError> {
        let flags = ConfigLayer {
            surface: self.surface.clone().map(SurfaceArg::Text),
            center: self.center.as_deref().map(parse_center).transpose().map_err(CliError::Usage)?,
            tau: self.tau,
            tau_grid: self.tau_grid.clone(),
            r_grid: self.r_grid.clone(),
            eps: self.eps,
            quad: None,
            out: self.out.clone(),
            format: self.format,
            plot: self.plot.clone(),
            seed: self.seed,
        };
        let file = match &self.config {
            Some(path) => ConfigLayer::from_file(path)?,
            None => ConfigLayer::default(),
        };
        Ok(flags.over(file))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn run(command: &Command) -> Result<u8, CliError> {
    let (name, common) = match command {
        Command::Entropy(c) => ("entropy", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Eavr(c) => ("eavr", c),
        Command::Blowdown(c) => ("blowdown", c),
        Command::Verify(c) => ("verify", c),
    };
    let cfg = RunConfig::resolve(common.layer()?)?;
    let out = match name {
        "entropy" => commands::entropy(&cfg)?,
        "sweep" => commands::sweep(&cfg)?,
        "eavr" => commands::eavr(&cfg)?,
        "blowdown" => commands::blowdown_cmd(&cfg)?,
        _ => commands::verify(&cfg)?,
    };
    if let (Some(path), Some(svg)) = (&cfg.plot, &out.plot) {
        write_file(path, svg)?;
    }
    match &cfg.out {
        Some(path) => {
            write_file(path, &out.body)?;
            if let Some(s) = &out.summary {
                print!("{s}");
            }
        }
        None => {
            print!("{}", out.body);
            if let Some(s) = &out.summary {
                eprint!("{s}");
            }
        }
    }
    let _ = std::io::stdout().flush();
    Ok(out.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { error::EXIT_OK });
        }
    };
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

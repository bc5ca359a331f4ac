//! `blwp`: command-line driver for the damped-wave blow-up laboratory.

mod commands;
mod config;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

/// Exit status for configuration and argument errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for an unknown or missing subcommand.
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "blwp", version, about = "Blow-up laboratory for u_tt - Δu - b0(1+t)^(-β)Δu_t = |u|^p")]
#[command(after_help = "Config keys can be overridden one-to-one with --section.key VALUE, e.g. --model.p 2.0.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation; exit status encodes the outcome (0, 10, 20, 30).
    Simulate(RunArgs),
    /// Run the [sweep] grid of parameters in parallel.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads (capped by BLWP_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit growth rates of the test-function bound terms.
    Slopes {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Space-scale exponent; defaults to 1 for β >= -1 and (1-β)/2 below.
        #[arg(long)]
        d: Option<f64>,
        #[arg(long = "Ts", value_delimiter = ',', default_value = "8,16,32,64,128,256,512")]
        ts: Vec<f64>,
        /// Cut-off power ℓ = η; defaults to ⌈2p'⌉ + 2.
        #[arg(long)]
        ell: Option<u32>,
    },
    /// Scaling-invariance error of the linear equation.
    Scaling {
        #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Points per axis; a list gives a refinement study.
        #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
        resolution: Vec<usize>,
        /// Run the second simulation with damping b0 λ^(-(β+1)).
        #[arg(long)]
        rescale_damping: bool,
        /// Report the damping-term trend over λ ∈ {1, 2, 4, 8} instead.
        #[arg(long)]
        trend: bool,
    },
    /// Critical exponents and the region verdict.
    Exponents {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Weak-form residual of a simulated solution against the cut-off test function.
    Weakcheck(RunArgs),
    /// Blow-up time of u'' = |u|^p.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        u0: f64,
        #[arg(long, allow_hyphen_values = true)]
        v0: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1e4)]
        t_max: f64,
    },
}

/// Pulls `--section.key VALUE` and `--section.key=VALUE` out of `argv`.
type Overrides = Vec<(String, String)>;

fn split_overrides(argv: Vec<String>) -> Result<(Vec<String>, Overrides), String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut overrides = Vec::new();
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !name.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| format!("--{name} needs a value"))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

fn main() -> ExitCode {
    let (argv, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command, &overrides) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::error_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_extracted() {
        let (rest, o) = split_overrides(strs(&["blwp", "simulate", "--model.p", "2.5", "--force", "--grid.points=64"])).unwrap();
        assert_eq!(rest, strs(&["blwp", "simulate", "--force"]));
        assert_eq!(o, vec![("model.p".into(), "2.5".into()), ("grid.points".into(), "64".into())]);
        assert!(split_overrides(strs(&["blwp", "--model.p"])).is_err());
    }

    #[test]
    fn negative_values_parse() {
        let cli = Cli::try_parse_from(["blwp", "exponents", "--n", "1", "--beta", "-3"]).unwrap();
        assert!(matches!(cli.command, Command::Exponents { beta, .. } if beta == -3.0));
    }
}

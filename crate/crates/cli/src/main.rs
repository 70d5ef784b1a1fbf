// `!(x > y)` is the NaN-rejecting guard throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fujita_core::Frame;

/// Validation failure of user input. Exit code 2; everything else is 3.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(
    name = "fujita-lab",
    version,
    about = "Numerical lab for the supercritical Fujita equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents of one dimension, or of a range of dimensions.
    Exponents {
        #[arg(long = "N")]
        n: u32,
        /// Last dimension of the table (defaults to N).
        #[arg(long = "n-max")]
        n_max: Option<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shooting sweep over center values.
    Steady {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long = "alpha-min")]
        alpha_min: Option<f64>,
        #[arg(long = "alpha-max")]
        alpha_max: Option<f64>,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value = "selfsimilar", value_parser = parse_frame)]
        frame: Frame,
        #[arg(long)]
        rmax: Option<f64>,
        /// Also search for a bounded state with this many intersections.
        #[arg(long = "find-k")]
        find_k: Option<usize>,
        #[arg(long, default_value = "atlas.csv")]
        out: PathBuf,
    },
    /// Energy ratio of the singular and constant states over a range of p.
    EnergyRatio {
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "p-min")]
        p_min: f64,
        #[arg(long = "p-max")]
        p_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value = "energy_ratio.csv")]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Eigenvalues of the linearization at the singular state, and the rate diagnostic.
    Spectrum {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 5)]
        jmax: u32,
        #[arg(long, default_value_t = 4000)]
        points: usize,
        #[arg(long = "rho-min", default_value_t = 0.05)]
        rho_min: f64,
        #[arg(long = "rho-max", default_value_t = 25.0)]
        rho_max: f64,
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long = "s-min", default_value_t = -8.0, allow_hyphen_values = true)]
        s_min: f64,
        #[arg(long = "s-max", default_value_t = -4.0, allow_hyphen_values = true)]
        s_max: f64,
        #[arg(long = "s-steps", default_value_t = 9)]
        s_steps: usize,
        /// Write the rate diagnostic of the rescaled regular steady state here.
        #[arg(long = "rate-out")]
        rate_out: Option<PathBuf>,
    },
    /// Evolve radial data described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve in physical variables until blowup and classify it.
    Blowup {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_frame(s: &str) -> Result<Frame, String> {
    s.parse().map_err(|e: fujita_core::Error| e.to_string())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("FUJITA_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Invalid(format!(
            "FUJITA_LAB_THREADS = '{raw}' is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("building the worker pool")
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Exponents { n, n_max, csv } => commands::exponents(n, n_max, csv.as_deref()),
        Command::Steady {
            n,
            p,
            alpha_min,
            alpha_max,
            steps,
            frame,
            rmax,
            find_k,
            out,
        } => {
            let kappa = fujita_core::ProblemParams::new(n, p)
                .map_err(|e| Invalid(e.to_string()))?
                .kappa();
            commands::steady(&commands::SteadyArgs {
                n,
                p,
                alpha_min: alpha_min.unwrap_or(kappa),
                alpha_max: alpha_max.unwrap_or(10.0 * kappa),
                steps,
                frame,
                rmax,
                find_k,
                out,
            })
        }
        Command::EnergyRatio {
            n,
            p_min,
            p_max,
            steps,
            out,
            svg,
        } => commands::energy_ratio(n, p_min, p_max, steps, &out, svg.as_deref()),
        Command::Spectrum {
            n,
            p,
            jmax,
            points,
            rho_min,
            rho_max,
            out,
            alpha,
            s_min,
            s_max,
            s_steps,
            rate_out,
        } => commands::spectrum(&commands::SpectrumArgs {
            n,
            p,
            jmax,
            points,
            rho_min,
            rho_max,
            out,
            alpha,
            s_min,
            s_max,
            s_steps,
            rate_out,
        }),
        Command::Evolve { config } => commands::evolve_cmd(&config),
        Command::Blowup { config } => commands::blowup_cmd(&config),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let invalid = err.chain().any(|e| {
        e.is::<Invalid>()
            || matches!(
                e.downcast_ref::<fujita_core::Error>(),
                Some(fujita_core::Error::Domain(_))
            )
    });
    if invalid {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

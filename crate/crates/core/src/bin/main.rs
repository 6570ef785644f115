//! Command-line entry point.
//!
//! ```text
//! pseudogap bands      --config run.cfg --jmax 4 [--out bands.csv]
//! pseudogap predict    --config run.cfg --band 1 --sign -
//! pseudogap pseudogap  --config run.cfg --band 1 --sign - --offsets 3e-3:1e-1:8 --out scan.csv
//! pseudogap model-verify --beta 0.25 --gamma 0.6 --eps0-list 0.2,0.1,0.05 --fixture free-plus
//! pseudogap connection --beta 0.5 --gamma 0.75 --eps-list 0.04,0.02,0.01
//! ```
//!
//! Exit codes: 0 success, 2 configuration/precondition violation,
//! 3 insufficient converged data.

use clap::{Parser, Subcommand};
use pseudogap::cli::{
    cmd_bands, cmd_connection, cmd_model_verify, cmd_predict, cmd_pseudogap, exit_code_for,
    parse_config, parse_list, parse_offsets, parse_sign, CommandOutput, RunConfig,
};
use pseudogap::error::{Error, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "pseudogap", about = "Spectral density pseudogap toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the band edges of the periodic background.
    Bands {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form constants at one critical point.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        band: usize,
        #[arg(long)]
        sign: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-sided density scan with the exponent fit and sin² law.
    Pseudogap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        band: usize,
        #[arg(long)]
        sign: String,
        /// Geometric offset grid a:b:n.
        #[arg(long)]
        offsets: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-problem limit ratios against the closed-form target.
    ModelVerify {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "eps0-list")]
        eps0_list: String,
        #[arg(long)]
        fixture: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turning-point connection diagnostic.
    Connection {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "eps-list")]
        eps_list: String,
        #[arg(long, default_value_t = 6.0)]
        z0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn emit(out: CommandOutput, path: Option<PathBuf>) -> Result<()> {
    if let Some(csv) = &out.csv {
        match &path {
            Some(p) => std::fs::write(p, csv)?,
            None => print!("{csv}"),
        }
    }
    if let Some(json) = &out.json {
        match (&path, &out.csv) {
            // JSON goes to the file only when it is the sole artifact.
            (Some(p), None) => std::fs::write(p, format!("{json}\n"))?,
            _ => println!("{json}"),
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    if let Ok(n) = std::env::var("PSEUDOGAP_THREADS") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Validation(format!("PSEUDOGAP_THREADS = {n} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Bands { config, jmax, out } => {
            let cfg = load_config(&config)?;
            emit(cmd_bands(&cfg, jmax)?, out)
        }
        Command::Predict {
            config,
            band,
            sign,
            out,
        } => {
            let cfg = load_config(&config)?;
            emit(cmd_predict(&cfg, band, parse_sign(&sign)?)?, out)
        }
        Command::Pseudogap {
            config,
            band,
            sign,
            offsets,
            out,
        } => {
            let cfg = load_config(&config)?;
            let offs = parse_offsets(&offsets)?;
            emit(cmd_pseudogap(&cfg, band, parse_sign(&sign)?, &offs)?, out)
        }
        Command::ModelVerify {
            beta,
            gamma,
            eps0_list,
            fixture,
            out,
        } => emit(
            cmd_model_verify(beta, gamma, &parse_list(&eps0_list)?, &fixture)?,
            out,
        ),
        Command::Connection {
            beta,
            gamma,
            eps_list,
            z0,
            out,
        } => emit(cmd_connection(beta, gamma, &parse_list(&eps_list)?, z0)?, out),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(exit_code_for(&e));
    }
}

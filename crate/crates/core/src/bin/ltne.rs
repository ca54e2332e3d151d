use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ltne::cli::{cmd_certify, cmd_linearize, cmd_run, cmd_sweep, format_summary};

#[derive(Parser)]
#[command(name = "ltne", version, about = "Couple-stress LTNE porous convection: simulate and certify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write its JSONL time series.
    Run { config: PathBuf },
    /// Re-evaluate the certificates of a stored time series.
    Certify {
        jsonl: PathBuf,
        /// Override the Sobolev constant.
        #[arg(long)]
        mso: Option<f64>,
    },
    /// Run one configuration per value of a parameter and tabulate.
    Sweep { spec: PathBuf },
    /// Spectrum of the linear operator.
    Linearize { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command) -> ltne::Result<u8> {
    match cmd {
        Command::Run { config } => {
            let r = cmd_run(&config)?;
            let last = r.records.last();
            println!(
                "config {}  status {}  samples {}  t {}",
                r.config_hash,
                r.status.as_str(),
                r.records.len(),
                last.map(|l| l.t).unwrap_or(f64::NAN)
            );
            if let Some(m) = &r.message {
                println!("{m}");
            }
            print!("{}", format_summary(&r.summary));
            if let Some(p) = &r.jsonl {
                println!("time series: {}", p.display());
            }
            for p in r.snapshots.iter().chain(r.plot.iter()) {
                println!("wrote {}", p.display());
            }
            Ok(r.exit_code() as u8)
        }
        Command::Certify { jsonl, mso } => {
            let r = cmd_certify(&jsonl, mso)?;
            println!(
                "config {}  status {}  samples {}  mso {}",
                r.config_hash,
                r.status.as_str(),
                r.records.len(),
                r.certificates.mso
            );
            print!("{}", format_summary(&r.summary));
            println!("samples with changed verdicts: {}", r.changed);
            Ok(if r.passed() { 0 } else { 1 })
        }
        Command::Sweep { spec } => {
            let r = cmd_sweep(&spec)?;
            for row in &r.rows {
                println!(
                    "{} = {:<10} {:<9} decay rate {:>12}  abscissa {:>12}",
                    r.parameter,
                    row.value,
                    row.status,
                    row.decay_rate.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into()),
                    row.abscissa.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into()),
                );
            }
            println!("table: {}", r.csv.display());
            let ok = r.rows.iter().all(|row| row.status == "completed");
            Ok(if ok { 0 } else { 1 })
        }
        Command::Linearize { config } => {
            let r = cmd_linearize(&config)?;
            println!("spectral abscissa {:.12e}", r.abscissa);
            if let Some(m) = r.dense_mismatch {
                println!("dense vs per-mode spectrum: max distance {m:.3e}");
            }
            if let Some(p) = &r.output {
                println!("spectrum: {}", p.display());
            }
            Ok(0)
        }
    }
}

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use netdid_core::network::Strategy;
use netdid_sim::{
    emit_backhaul_csv, emit_csv, emit_metadata, emit_plot_script, run_backhaul, run_sweep,
    PlotKind, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "netdid",
    version,
    about = "BER and backhaul sweeps for cooperating base stations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER, Γ and backhaul per strategy and SNR.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strategies, overriding the config.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<Strategy>,
        /// Comma-separated SNR points in dB, overriding the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Vec<f64>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Backhaul bits per symbol versus the number of strong interferers.
    Backhaul {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "backhaul.csv")]
        out: PathBuf,
    },
    /// Write a gnuplot script for a CSV produced by `sweep` or `backhaul`.
    Plot {
        /// ber, backhaul or gamma.
        #[arg(long, default_value = "ber")]
        kind: PlotKind,
        /// The CSV to plot.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "plot.gp")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<SimConfig> {
        let mut config = match &self.config {
            Some(path) => SimConfig::from_file(path)?,
            None => SimConfig::default(),
        };
        for o in &self.overrides {
            config.apply(o)?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep {
            common,
            strategy,
            snr,
            out,
        } => {
            let mut config = common.load()?;
            if !strategy.is_empty() {
                config.strategies = strategy;
            }
            if !snr.is_empty() {
                config.snr_db = snr;
            }
            config.validate()?;
            let rows = run_sweep(&config)?;
            emit_csv(&rows, &out)?;
            emit_metadata(&config, &out)?;
            for r in &rows {
                println!(
                    "{:>10} {:>6.2} dB  BER {:.3e} ({} errors / {} frames{})  {:.2} bits/symbol",
                    r.strategy,
                    r.snr_db,
                    r.ber,
                    r.bit_errors,
                    r.frames,
                    if r.low_confidence {
                        ", low confidence"
                    } else {
                        ""
                    },
                    r.bits_per_symbol
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Backhaul { common, out } => {
            let config = common.load()?;
            config.validate()?;
            let rows = run_backhaul(&config)?;
            emit_backhaul_csv(&rows, &out)?;
            emit_metadata(&config, &out)?;
            for r in &rows {
                println!(
                    "zeta {} {:>8}: {:.2} bits/symbol",
                    r.zeta, r.scheme, r.bits_per_symbol
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Plot { kind, data, out } => {
            emit_plot_script(kind, &data, &out)
                .with_context(|| format!("plotting {}", data.display()))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use r2c::beam::Strategy;
use r2c::nn::ModelKind;
use r2c::pipeline::{cmd_eval, cmd_generate, cmd_rate, cmd_train, THREADS_ENV};

/// Radar-aided beam training experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a paired radar/communication dataset.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the APS or covariance-column model.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long)]
        data: PathBuf,
        /// Separate validation dataset; defaults to the data file's val split.
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Similarity of radar and predicted spectra to the communication APS.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        aps_params: Option<PathBuf>,
        #[arg(long)]
        col_params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Beam search and effective rate per strategy.
    Rate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        aps_params: Option<PathBuf>,
        #[arg(long)]
        col_params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated strategies: exhaustive, radar_only, aps_pred, cov_pred.
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "exhaustive,radar_only")]
        strategies: Vec<Strategy>,
        /// RSU-side window for every windowed strategy.
        #[arg(long)]
        window: Option<usize>,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: r2c::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: r2c::Error| e.to_string())
}

fn run(cli: Cli) -> r2c::Result<()> {
    match cli.command {
        Command::Generate { config, out, count, seed } => {
            let h = cmd_generate(config.as_deref(), &out, count, seed)?;
            println!("wrote {} records (seed {}) to {}", h.count, h.seed, out.display());
        }
        Command::Train {
            config,
            model,
            data,
            val,
            out,
            seed,
        } => {
            let o = cmd_train(config.as_deref(), model, &data, val.as_deref(), &out, seed)?;
            println!(
                "{} model: {} epochs, best val loss {:.6e} at epoch {}; wrote {}",
                model.name(),
                o.history.len(),
                o.best_val_loss,
                o.best_epoch,
                out.display()
            );
        }
        Command::Eval {
            config,
            data,
            aps_params,
            col_params,
            out,
        } => {
            let rows = cmd_eval(config.as_deref(), aps_params.as_deref(), col_params.as_deref(), &data, &out)?;
            println!("wrote similarity for {} records to {}", rows.len(), out.display());
        }
        Command::Rate {
            config,
            data,
            aps_params,
            col_params,
            out,
            strategies,
            window,
        } => {
            let r = cmd_rate(
                config.as_deref(),
                aps_params.as_deref(),
                col_params.as_deref(),
                &data,
                &out,
                &strategies,
                window,
            )?;
            for rep in &r.reports {
                println!("{:<11} mean rate {:.4} Gbps", rep.strategy.name(), rep.mean_rate / 1e9);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // ignore the error if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

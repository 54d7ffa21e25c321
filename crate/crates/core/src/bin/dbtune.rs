//! `dbtune` command line: train, run, sweep, gen-data.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use dbtune_core::harness::{
    gen_training_data, load_run_model, run_scenario, sweep_buffer, train_cmd, write_run_outputs,
    write_sweep_csv, GenDataRequest, ScenarioConfig,
};
use dbtune_core::neural::DEFAULT_FILL_USERS;
use dbtune_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dbtune",
    version,
    about = "Neural-estimated buffer cache tuning simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON). Defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the workload and network seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the size estimator on a CSV (bundled Table I when --data is omitted).
    Train {
        #[command(flatten)]
        common: Common,
        /// Training CSV: table_rows,miss_ratio[,users],pool_mb,cache_mb
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model file to write (default <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// User count for CSVs without a `users` column.
        #[arg(long, default_value_t = DEFAULT_FILL_USERS)]
        default_users: u32,
        /// Training epochs (overrides `net.epochs`).
        #[arg(long)]
        epochs: Option<usize>,
        /// SGD learning rate (overrides `net.learning_rate`).
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Hidden units (overrides `net.n_hidden`).
        #[arg(long)]
        hidden: Option<usize>,
    },
    /// Run one closed-loop scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trained model (overrides `model_path`).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Disable the tuner; sizes stay at their initial rungs.
        #[arg(long)]
        no_tune: bool,
    },
    /// Untuned runs across buffer cache sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cache sizes in MB, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
        sizes: Vec<u32>,
    },
    /// Generate labelled training data by characterization.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Table sizes to characterize, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        table_rows: Vec<u64>,
        /// User counts to characterize, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        users: Vec<u32>,
        /// Mean response target in ms.
        #[arg(long)]
        target_ms: f64,
        /// Ticks simulated per probe (default: total_ticks).
        #[arg(long)]
        ticks: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train {
            common,
            data,
            model,
            default_users,
            epochs,
            learning_rate,
            hidden,
        } => {
            let mut cfg = common.load()?;
            if let Some(e) = epochs {
                cfg.net.epochs = e;
            }
            if let Some(lr) = learning_rate {
                cfg.net.learning_rate = lr;
            }
            if let Some(h) = hidden {
                cfg.net.n_hidden = h;
            }
            let model_out = model.unwrap_or_else(|| cfg.output_dir.join("model.json"));
            let trace_out = match &common.out {
                Some(dir) => dir.join("mse_trace.csv"),
                None => sibling(&model_out, "mse_trace.csv"),
            };
            let (_, trace) = train_cmd(
                data.as_deref(),
                default_users,
                &cfg.net,
                &model_out,
                &trace_out,
            )?;
            info!(
                "trained {} epochs, final mse {}; model -> {}",
                trace.len(),
                trace.last().copied().unwrap_or(f64::NAN),
                model_out.display()
            );
        }
        Command::Run {
            common,
            model,
            no_tune,
        } => {
            let mut cfg = common.load()?;
            if let Some(m) = model {
                cfg.model_path = Some(m);
            }
            if no_tune {
                cfg.tuning_enabled = false;
            }
            let model = load_run_model(&cfg)?;
            let report = run_scenario(&cfg, model.as_ref())?;
            write_run_outputs(&report, &cfg.output_dir)?;
            let s = &report.summary;
            info!(
                "{} windows, mean {} ms, final-half mean {} ms, cache {} -> {} MB",
                s.windows,
                s.mean_response_ms,
                s.final_half_mean_response_ms,
                s.initial_cache_mb,
                s.final_cache_mb
            );
        }
        Command::Sweep { common, sizes } => {
            let cfg = common.load()?;
            let rows = sweep_buffer(&cfg, &sizes)?;
            let path = cfg.output_dir.join("sweep.csv");
            write_sweep_csv(&rows, &path)?;
            info!("{} sweep points -> {}", rows.len(), path.display());
        }
        Command::GenData {
            common,
            table_rows,
            users,
            target_ms,
            ticks,
        } => {
            let cfg = common.load()?;
            let report = gen_training_data(
                &cfg,
                &GenDataRequest {
                    table_rows,
                    users,
                    target_response_ms: target_ms,
                    ticks,
                },
            )?;
            for w in &report.warnings {
                warn!("{w}");
            }
            let dir = &cfg.output_dir;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let data_path = dir.join("training_data.csv");
            let mut buf = Vec::new();
            report.set.write_csv(&mut buf).expect("writing to a Vec");
            std::fs::write(&data_path, buf).map_err(|e| Error::io(&data_path, e))?;
            let summary_path = dir.join("gen_data_summary.json");
            let mut summary = serde_json::to_string_pretty(&report).expect("report serializes");
            summary.push('\n');
            std::fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;
            info!("{} rows -> {}", report.rows, data_path.display());
        }
    }
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent()
        .map_or_else(|| PathBuf::from(name), |p| p.join(name))
}

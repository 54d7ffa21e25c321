//! Closed-loop composition: workload -> sim -> monitor -> estimator -> tuner.

mod gen_data;
mod report;

pub use gen_data::{gen_training_data, GenDataReport, GenDataRequest};
pub use report::{write_run_outputs, write_sweep_csv, RunSummary, WindowRow};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::{Monitor, MonitorConfig};
use crate::neural::{load_model, save_model, NetConfig, NeuralModel, TrainingSet};
use crate::sim::{SimConfig, SimState};
use crate::tuner::{Sizes, TunerConfig, TunerState, TuningDecision};
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub sim: SimConfig,
    pub workload: WorkloadSpec,
    pub monitor: MonitorConfig,
    pub tuner: TunerConfig,
    pub net: NetConfig,
    pub total_ticks: u64,
    pub initial_cache_mb: u32,
    pub initial_pool_mb: u32,
    pub tuning_enabled: bool,
    pub model_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            sim: SimConfig::default(),
            workload: WorkloadSpec::default(),
            monitor: MonitorConfig::default(),
            tuner: TunerConfig::default(),
            net: NetConfig::default(),
            total_ticks: 2000,
            initial_cache_mb: 4,
            initial_pool_mb: 32,
            tuning_enabled: true,
            model_path: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.workload.validate()?;
        self.monitor.validate()?;
        self.tuner.validate()?;
        self.net.validate()?;
        if self.total_ticks < self.monitor.window_ticks {
            return Err(Error::config(format!(
                "total_ticks ({}) must cover at least one window of {} ticks",
                self.total_ticks, self.monitor.window_ticks
            )));
        }
        self.sim.buffer_ladder_mb.require(self.initial_cache_mb)?;
        self.sim.pool_ladder_mb.require(self.initial_pool_mb)?;
        Ok(())
    }

    /// Read a JSON config. Unknown keys are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Override both workload and network seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.workload.seed = seed;
        self.net.seed = seed;
    }

    pub fn windows(&self) -> u64 {
        self.total_ticks / self.monitor.window_ticks
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub windows: Vec<WindowRow>,
    pub decisions: Vec<TuningDecision>,
    pub summary: RunSummary,
}

/// Simulate `config` end to end. Only whole windows are simulated; ticks
/// past the last full window are ignored.
pub fn run_scenario(config: &ScenarioConfig, model: Option<&NeuralModel>) -> Result<RunReport> {
    config.validate()?;
    if config.tuning_enabled && model.is_none() {
        return Err(Error::config("tuning is enabled but no model was provided"));
    }
    let sim_cfg = &config.sim;
    let work = &config.workload;
    let mut sim = SimState::new(sim_cfg, config.initial_cache_mb, config.initial_pool_mb)?;
    let mut monitor = Monitor::new();
    let mut tuner = TunerState::new(&config.tuner);
    let mut rng = work.rng();
    let window_ticks = config.monitor.window_ticks;

    let mut windows = Vec::with_capacity(config.windows() as usize);
    for w in 0..config.windows() {
        let start = w * window_ticks;
        let end = start + window_ticks;
        for clock in start..end {
            let (rows, users) = work.advance_tick(clock);
            for user in 0..users {
                let tx = work.next_transaction(&mut rng, rows, user);
                let result = sim.execute_query(sim_cfg, &tx.blocks, tx.stmt, users);
                monitor.record(&result, tx.blocks.len());
            }
        }
        let (rows, users) = work.advance_tick(end - 1);
        let snapshot = monitor.close_window(end - 1, users, rows);
        let current: Sizes = (sim.shared_pool_mb(), sim.buffer_cache_mb());
        let estimate = model
            .map(|m| {
                m.estimate_sizes(
                    &snapshot,
                    &sim_cfg.pool_ladder_mb,
                    &sim_cfg.buffer_ladder_mb,
                )
            })
            .transpose()?;
        let rule = match (config.tuning_enabled, estimate) {
            (true, Some(est)) => {
                let decision = tuner.decide(
                    &config.tuner,
                    &snapshot,
                    est,
                    current,
                    &sim_cfg.pool_ladder_mb,
                    &sim_cfg.buffer_ladder_mb,
                )?;
                let rule = decision.rule;
                tuner.apply(decision, &snapshot, &mut sim, sim_cfg)?;
                Some(rule)
            }
            _ => None,
        };
        windows.push(WindowRow {
            snapshot,
            cache_mb: current.1,
            pool_mb: current.0,
            estimate,
            rule,
        });
    }

    let decisions = tuner.decision_log().to_vec();
    let summary = RunSummary::compute(
        config,
        &windows,
        &decisions,
        (sim.shared_pool_mb(), sim.buffer_cache_mb()),
        sim.counters(),
    );
    Ok(RunReport {
        windows,
        decisions,
        summary,
    })
}

/// Resolve the model for a run: required when tuning, optional otherwise.
pub fn load_run_model(config: &ScenarioConfig) -> Result<Option<NeuralModel>> {
    match &config.model_path {
        Some(path) if path.exists() => load_model(path).map(Some),
        Some(path) if config.tuning_enabled => Err(Error::config(format!(
            "tuning is enabled but model file {} does not exist",
            path.display()
        ))),
        None if config.tuning_enabled => Err(Error::config(
            "tuning is enabled but no model path was given (use --model or --no-tune)",
        )),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub cache_mb: u32,
    pub mean_response_ms: f64,
    pub miss_ratio: f64,
}

/// One untuned run per cache size over the identical seeded workload.
pub fn sweep_buffer(config: &ScenarioConfig, sizes: &[u32]) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() {
        return Err(Error::config("sweep needs at least one cache size"));
    }
    for &s in sizes {
        config.sim.buffer_ladder_mb.require(s)?;
    }
    let runs: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&size| {
                let mut cfg = config.clone();
                cfg.initial_cache_mb = size;
                cfg.tuning_enabled = false;
                scope.spawn(move || {
                    let report = run_scenario(&cfg, None)?;
                    Ok(SweepRow {
                        cache_mb: size,
                        mean_response_ms: report.summary.mean_response_ms,
                        miss_ratio: report.summary.overall_miss_ratio,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    runs.into_iter().collect()
}

/// Train a fresh network on a CSV and write the model plus an `epoch,mse` trace.
pub fn train_cmd(
    data_path: Option<&Path>,
    fill_users: u32,
    net: &NetConfig,
    model_out: &Path,
    trace_out: &Path,
) -> Result<(NeuralModel, Vec<f64>)> {
    let set = match data_path {
        Some(p) => TrainingSet::load_csv(p, fill_users)?,
        None => TrainingSet::table_one(fill_users),
    };
    let mut model = NeuralModel::new(net)?;
    let trace = model.train(&set, net)?;
    ensure_parent(model_out)?;
    save_model(&model, model_out)?;
    ensure_parent(trace_out)?;
    let mut text = String::from("epoch,mse\n");
    for (i, mse) in trace.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, crate::float::Sig(*mse)));
    }
    std::fs::write(trace_out, text).map_err(|e| Error::io(trace_out, e))?;
    Ok((model, trace))
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

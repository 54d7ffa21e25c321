use crate::float::Sig;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::monitor::MetricsSnapshot;
use crate::sim::SimCounters;
use crate::tuner::{write_decision_csv, Rule, Sizes, TuningDecision};

use super::{ScenarioConfig, SweepRow};

pub const RUN_CSV_HEADER: &str =
    "window_id,end_tick,users,table_rows,miss_ratio,mean_response_ms,cache_mb,pool_mb,rule";

/// One window of a run. Sizes are those in effect while the window ran.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub snapshot: MetricsSnapshot,
    pub cache_mb: u32,
    pub pool_mb: u32,
    pub estimate: Option<Sizes>,
    /// `None` when tuning is disabled.
    pub rule: Option<Rule>,
}

impl WindowRow {
    pub fn rule_label(&self) -> &'static str {
        self.rule.map_or("off", Rule::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DecisionCounts {
    pub increase: u64,
    pub decrease: u64,
    pub hold: u64,
    pub cooldown: u64,
}

/// Response statistics are taken over per-window means, so they can be
/// recomputed from the run CSV alone. The final half is the last
/// `windows - windows / 2` windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub windows: u64,
    pub tuning_enabled: bool,
    pub mean_response_ms: f64,
    pub median_response_ms: f64,
    pub final_half_mean_response_ms: f64,
    pub final_half_median_response_ms: f64,
    pub final_half_miss_ratio: f64,
    pub overall_miss_ratio: f64,
    pub total_queries: u64,
    pub initial_cache_mb: u32,
    pub final_cache_mb: u32,
    pub initial_pool_mb: u32,
    pub final_pool_mb: u32,
    pub decisions: DecisionCounts,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl RunSummary {
    pub(crate) fn compute(
        config: &ScenarioConfig,
        windows: &[WindowRow],
        decisions: &[TuningDecision],
        final_sizes: Sizes,
        counters: &SimCounters,
    ) -> Self {
        let responses: Vec<f64> = windows
            .iter()
            .map(|w| w.snapshot.mean_response_ms)
            .collect();
        let misses: Vec<f64> = windows
            .iter()
            .map(|w| w.snapshot.buffer_miss_ratio)
            .collect();
        let half = windows.len() / 2;
        let mut counts = DecisionCounts::default();
        for d in decisions {
            match d.rule {
                Rule::Increase => counts.increase += 1,
                Rule::Decrease => counts.decrease += 1,
                Rule::Hold => counts.hold += 1,
                Rule::Cooldown => counts.cooldown += 1,
            }
        }
        RunSummary {
            windows: windows.len() as u64,
            tuning_enabled: config.tuning_enabled,
            mean_response_ms: mean(&responses),
            median_response_ms: median(&responses),
            final_half_mean_response_ms: mean(&responses[half..]),
            final_half_median_response_ms: median(&responses[half..]),
            final_half_miss_ratio: mean(&misses[half..]),
            overall_miss_ratio: if counters.accesses == 0 {
                0.0
            } else {
                counters.misses as f64 / counters.accesses as f64
            },
            total_queries: counters.queries,
            initial_cache_mb: config.initial_cache_mb,
            final_cache_mb: final_sizes.1,
            initial_pool_mb: config.initial_pool_mb,
            final_pool_mb: final_sizes.0,
            decisions: counts,
        }
    }
}

pub fn run_csv(windows: &[WindowRow]) -> String {
    let mut out = String::with_capacity(64 * (windows.len() + 1));
    out.push_str(RUN_CSV_HEADER);
    out.push('\n');
    for w in windows {
        let s = &w.snapshot;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.window_id,
            s.end_tick,
            s.active_users,
            s.table_rows,
            Sig(s.buffer_miss_ratio),
            Sig(s.mean_response_ms),
            w.cache_mb,
            w.pool_mb,
            w.rule_label()
        ));
    }
    out
}

fn estimates_csv(windows: &[WindowRow]) -> String {
    let mut out = String::from("window_id,est_pool_mb,est_cache_mb\n");
    for w in windows {
        if let Some((pool, cache)) = w.estimate {
            out.push_str(&format!("{},{},{}\n", w.snapshot.window_id, pool, cache));
        }
    }
    out
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `run.csv`, `decisions.csv`, `estimates.csv` and `summary.json` into `dir`.
pub fn write_run_outputs(report: &super::RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("run.csv"), run_csv(&report.windows).as_bytes())?;
    let mut decisions = Vec::new();
    write_decision_csv(&report.decisions, &mut decisions).expect("writing to a Vec");
    write(&dir.join("decisions.csv"), &decisions)?;
    write(
        &dir.join("estimates.csv"),
        estimates_csv(&report.windows).as_bytes(),
    )?;
    let mut summary = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    summary.push('\n');
    write(&dir.join("summary.json"), summary.as_bytes())
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    super::ensure_parent(path)?;
    let mut out = String::from("cache_mb,mean_response_ms,miss_ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.cache_mb,
            Sig(r.mean_response_ms),
            Sig(r.miss_ratio)
        ));
    }
    write(path, out.as_bytes())
}

//! Threshold-gated granule stepping of the memory knobs.
//!
//! Each monitoring window the tuner compares the window's mean response
//! time against the mean recorded at the last modification (ΔRtime). A knob
//! moves one ladder rung up when ΔRtime exceeds `+Rth` and the estimator
//! wants more memory, one rung down when ΔRtime is below `-Rth` and the
//! estimator wants less, and otherwise holds. A cooldown of whole windows
//! separates consecutive modifications.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::Ladder;
use crate::monitor::MetricsSnapshot;
use crate::sim::{SimConfig, SimState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerConfig {
    pub r_threshold_ms: f64,
    pub cooldown_windows: u32,
    pub tune_shared_pool: bool,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            r_threshold_ms: 1.0,
            cooldown_windows: 3,
            tune_shared_pool: false,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_threshold_ms > 0.0 && self.r_threshold_ms.is_finite()) {
            return Err(Error::config("r_threshold_ms must be positive"));
        }
        if self.cooldown_windows == 0 {
            return Err(Error::config("cooldown_windows must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Increase,
    Decrease,
    Hold,
    Cooldown,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Increase => "increase",
            Rule::Decrease => "decrease",
            Rule::Hold => "hold",
            Rule::Cooldown => "cooldown",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningDecision {
    pub window_id: u64,
    pub delta_r_ms: f64,
    pub old_cache_mb: u32,
    pub new_cache_mb: u32,
    pub old_pool_mb: u32,
    pub new_pool_mb: u32,
    pub rule: Rule,
}

impl TuningDecision {
    pub fn changes_sizes(&self) -> bool {
        self.old_cache_mb != self.new_cache_mb || self.old_pool_mb != self.new_pool_mb
    }
}

/// `(pool_mb, cache_mb)`
pub type Sizes = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct TunerState {
    baseline_response_ms: Option<f64>,
    windows_since_change: u32,
    decision_log: Vec<TuningDecision>,
}

impl TunerState {
    /// No modification has happened yet, so the cooldown starts satisfied.
    pub fn new(cfg: &TunerConfig) -> Self {
        TunerState {
            baseline_response_ms: None,
            windows_since_change: cfg.cooldown_windows,
            decision_log: Vec::new(),
        }
    }

    pub fn baseline_response_ms(&self) -> Option<f64> {
        self.baseline_response_ms
    }

    pub fn windows_since_change(&self) -> u32 {
        self.windows_since_change
    }

    pub fn decision_log(&self) -> &[TuningDecision] {
        &self.decision_log
    }

    /// Change in mean response since the last modification. Before any
    /// baseline exists the window is its own baseline.
    pub fn delta_rtime(&self, snapshot: &MetricsSnapshot) -> f64 {
        snapshot.mean_response_ms
            - self
                .baseline_response_ms
                .unwrap_or(snapshot.mean_response_ms)
    }

    pub fn decide(
        &self,
        cfg: &TunerConfig,
        snapshot: &MetricsSnapshot,
        estimate: Sizes,
        current: Sizes,
        pool_ladder: &Ladder,
        cache_ladder: &Ladder,
    ) -> Result<TuningDecision> {
        for (size, ladder) in [
            (estimate.0, pool_ladder),
            (estimate.1, cache_ladder),
            (current.0, pool_ladder),
            (current.1, cache_ladder),
        ] {
            ladder.require(size)?;
        }
        let delta = self.delta_rtime(snapshot);
        let mut decision = TuningDecision {
            window_id: snapshot.window_id,
            delta_r_ms: delta,
            old_cache_mb: current.1,
            new_cache_mb: current.1,
            old_pool_mb: current.0,
            new_pool_mb: current.0,
            rule: Rule::Hold,
        };
        if self.windows_since_change < cfg.cooldown_windows {
            decision.rule = Rule::Cooldown;
            return Ok(decision);
        }
        // an empty window carries no response measurement
        if snapshot.queries == 0 {
            return Ok(decision);
        }
        let rth = cfg.r_threshold_ms;
        decision.new_cache_mb = step_toward(cache_ladder, current.1, estimate.1, delta, rth);
        if cfg.tune_shared_pool {
            decision.new_pool_mb = step_toward(pool_ladder, current.0, estimate.0, delta, rth);
        }
        decision.rule = if decision.new_cache_mb > current.1 || decision.new_pool_mb > current.0 {
            Rule::Increase
        } else if decision.new_cache_mb < current.1 || decision.new_pool_mb < current.0 {
            Rule::Decrease
        } else {
            Rule::Hold
        };
        Ok(decision)
    }

    /// Carry out `decision` on the simulator and log it.
    pub fn apply(
        &mut self,
        decision: TuningDecision,
        snapshot: &MetricsSnapshot,
        sim: &mut SimState,
        sim_cfg: &SimConfig,
    ) -> Result<()> {
        if decision.changes_sizes() {
            if decision.new_cache_mb != sim.buffer_cache_mb() {
                sim.resize_buffer_cache(sim_cfg, decision.new_cache_mb)?;
            }
            if decision.new_pool_mb != sim.shared_pool_mb() {
                sim.resize_shared_pool(sim_cfg, decision.new_pool_mb)?;
            }
            self.baseline_response_ms = Some(snapshot.mean_response_ms);
            self.windows_since_change = 0;
        } else {
            if self.baseline_response_ms.is_none() && snapshot.queries > 0 {
                self.baseline_response_ms = Some(snapshot.mean_response_ms);
            }
            self.windows_since_change = self.windows_since_change.saturating_add(1);
        }
        self.decision_log.push(decision);
        Ok(())
    }
}

fn step_toward(ladder: &Ladder, current: u32, estimate: u32, delta: f64, rth: f64) -> u32 {
    if delta > rth && estimate > current {
        ladder.next_up(current).unwrap_or(current)
    } else if delta < -rth && estimate < current {
        ladder.next_down(current).unwrap_or(current)
    } else {
        current
    }
}

/// Replay a decision log from `initial` sizes, checking that each decision
/// starts where the previous one left off. Returns the final sizes.
pub fn replay(initial: Sizes, log: &[TuningDecision]) -> Result<Sizes> {
    let mut cur = initial;
    for d in log {
        if (d.old_pool_mb, d.old_cache_mb) != cur {
            return Err(Error::config(format!(
                "decision for window {} starts at {:?}, state was {:?}",
                d.window_id,
                (d.old_pool_mb, d.old_cache_mb),
                cur
            )));
        }
        cur = (d.new_pool_mb, d.new_cache_mb);
    }
    Ok(cur)
}

pub fn write_decision_csv<W: Write>(log: &[TuningDecision], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "window_id,delta_r_ms,rule,old_cache,new_cache,old_pool,new_pool"
    )?;
    for d in log {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            d.window_id,
            crate::float::Sig(d.delta_r_ms),
            d.rule,
            d.old_cache_mb,
            d.new_cache_mb,
            d.old_pool_mb,
            d.new_pool_mb
        )?;
    }
    Ok(())
}

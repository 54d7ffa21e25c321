//! Characterization: label workloads with the smallest adequate sizes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::neural::{TrainingRow, TrainingSet};
use crate::workload::UserStep;

use super::{run_scenario, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GenDataRequest {
    pub table_rows: Vec<u64>,
    pub users: Vec<u32>,
    pub target_response_ms: f64,
    /// Simulated ticks per probe; `None` uses the config's `total_ticks`.
    pub ticks: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenDataReport {
    #[serde(skip)]
    pub set: TrainingSet,
    pub rows: usize,
    pub target_response_ms: f64,
    pub warnings: Vec<String>,
}

struct Probe {
    response_ms: f64,
    miss_ratio: f64,
}

/// For every `(table_rows, users)` cell, scan the buffer ladder ascending
/// with the pool at its top rung and keep the first cache size whose
/// steady-state mean response meets the target; then scan the pool ladder
/// ascending at that cache size. Steady state is the final half of a run
/// with fixed table size and user count.
pub fn gen_training_data(config: &ScenarioConfig, req: &GenDataRequest) -> Result<GenDataReport> {
    config.validate()?;
    if req.table_rows.is_empty() || req.users.is_empty() {
        return Err(Error::config(
            "gen-data grid must have at least one table size and one user count",
        ));
    }
    if req.users.contains(&0) {
        return Err(Error::config("gen-data user counts must be >= 1"));
    }
    if req.target_response_ms.is_nan() || req.target_response_ms <= 0.0 {
        return Err(Error::config("target response must be positive"));
    }
    let cells: Vec<(u64, u32)> = req
        .table_rows
        .iter()
        .flat_map(|&rows| req.users.iter().map(move |&u| (rows, u)))
        .collect();

    let labelled: Vec<Result<(TrainingRow, Option<String>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&(rows, users)| scope.spawn(move || label_cell(config, req, rows, users)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("gen-data worker panicked"))
            .collect()
    });

    let mut set = TrainingSet::new(Vec::with_capacity(cells.len()));
    let mut warnings = Vec::new();
    for item in labelled {
        let (row, warning) = item?;
        set.push(row);
        warnings.extend(warning);
    }
    Ok(GenDataReport {
        rows: set.len(),
        set,
        target_response_ms: req.target_response_ms,
        warnings,
    })
}

fn label_cell(
    config: &ScenarioConfig,
    req: &GenDataRequest,
    table_rows: u64,
    users: u32,
) -> Result<(TrainingRow, Option<String>)> {
    let mut base = config.clone();
    base.tuning_enabled = false;
    base.model_path = None;
    base.workload.initial_table_rows = table_rows;
    base.workload.growth_rows_per_tick = 0;
    base.workload.user_schedule = vec![UserStep { tick: 0, users }];
    if let Some(ticks) = req.ticks {
        base.total_ticks = ticks;
    }
    base.validate()?;

    let probe = |cache: u32, pool: u32| -> Result<Probe> {
        let mut cfg = base.clone();
        cfg.initial_cache_mb = cache;
        cfg.initial_pool_mb = pool;
        let s = run_scenario(&cfg, None)?.summary;
        Ok(Probe {
            response_ms: s.final_half_mean_response_ms,
            miss_ratio: s.final_half_miss_ratio,
        })
    };
    let target = req.target_response_ms;
    let cache_ladder = &config.sim.buffer_ladder_mb;
    let pool_ladder = &config.sim.pool_ladder_mb;

    let mut cache = None;
    for &c in cache_ladder.rungs() {
        if probe(c, pool_ladder.top())?.response_ms <= target {
            cache = Some(c);
            break;
        }
    }
    let Some(cache) = cache else {
        let top = probe(cache_ladder.top(), pool_ladder.top())?;
        let warning = format!(
            "table_rows={table_rows} users={users}: target {target} ms unreachable at the top rungs \
             (best {} ms); labelled with top rungs",
            top.response_ms
        );
        return Ok((
            TrainingRow {
                table_rows,
                miss_ratio: top.miss_ratio,
                users,
                pool_mb: pool_ladder.top(),
                cache_mb: cache_ladder.top(),
            },
            Some(warning),
        ));
    };

    for &p in pool_ladder.rungs() {
        let result = probe(cache, p)?;
        if result.response_ms <= target || p == pool_ladder.top() {
            return Ok((
                TrainingRow {
                    table_rows,
                    miss_ratio: result.miss_ratio,
                    users,
                    pool_mb: p,
                    cache_mb: cache,
                },
                None,
            ));
        }
    }
    unreachable!("pool scan always ends at the top rung")
}

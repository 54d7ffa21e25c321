//! Deterministic model of the DBMS memory subsystem.
//!
//! A buffer cache holds disk blocks and a shared pool holds parsed
//! statement plans; both are LRU. Query cost is CPU time plus one I/O per
//! block miss plus one parse per plan miss, amplified by an M/M/1-style
//! contention factor on the number of active users.

mod lru;

pub use lru::LruSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::Ladder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub block_size_kb: u32,
    pub t_cpu_ms: f64,
    pub t_io_ms: f64,
    pub t_parse_ms: f64,
    pub user_capacity: u32,
    pub utilization_ceiling: f64,
    pub buffer_ladder_mb: Ladder,
    pub pool_ladder_mb: Ladder,
    pub plan_slots_per_mb: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            block_size_kb: 8,
            t_cpu_ms: 0.5,
            t_io_ms: 1.0,
            t_parse_ms: 2.0,
            user_capacity: 16,
            utilization_ceiling: 0.95,
            buffer_ladder_mb: Ladder::new(vec![4, 8, 16, 32, 64, 128, 256]).unwrap(),
            pool_ladder_mb: Ladder::new(vec![32, 40, 48, 56, 64, 80, 96, 128]).unwrap(),
            plan_slots_per_mb: 4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size_kb == 0 || self.block_size_kb > 1024 || 1024 % self.block_size_kb != 0 {
            return Err(Error::config(format!(
                "block_size_kb must divide 1024, got {}",
                self.block_size_kb
            )));
        }
        for (name, t) in [
            ("t_cpu_ms", self.t_cpu_ms),
            ("t_io_ms", self.t_io_ms),
            ("t_parse_ms", self.t_parse_ms),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite value >= 0")));
            }
        }
        if self.user_capacity == 0 {
            return Err(Error::config("user_capacity must be positive"));
        }
        if !(self.utilization_ceiling > 0.0 && self.utilization_ceiling < 1.0) {
            return Err(Error::config("utilization_ceiling must lie in (0, 1)"));
        }
        if self.plan_slots_per_mb == 0 {
            return Err(Error::config("plan_slots_per_mb must be positive"));
        }
        Ok(())
    }

    pub fn blocks_per_mb(&self) -> usize {
        (1024 / self.block_size_kb) as usize
    }

    pub fn cache_capacity(&self, cache_mb: u32) -> usize {
        cache_mb as usize * self.blocks_per_mb()
    }

    pub fn pool_capacity(&self, pool_mb: u32) -> usize {
        pool_mb as usize * self.plan_slots_per_mb as usize
    }

    /// `1 / (1 - min(U / U_cap, ceiling))`.
    pub fn contention(&self, active_users: u32) -> f64 {
        let rho = f64::from(active_users) / f64::from(self.user_capacity);
        1.0 / (1.0 - rho.min(self.utilization_ceiling))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SimCounters {
    pub accesses: u64,
    pub misses: u64,
    pub parses: u64,
    pub queries: u64,
    pub cumulative_response_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    pub response_ms: f64,
    pub block_misses: u32,
    pub plan_miss: bool,
}

#[derive(Debug, Clone)]
pub struct SimState {
    buffer_cache_mb: u32,
    shared_pool_mb: u32,
    lru_queue: LruSet,
    plan_cache: LruSet,
    counters: SimCounters,
}

impl SimState {
    pub fn new(cfg: &SimConfig, buffer_cache_mb: u32, shared_pool_mb: u32) -> Result<Self> {
        cfg.buffer_ladder_mb.require(buffer_cache_mb)?;
        cfg.pool_ladder_mb.require(shared_pool_mb)?;
        Ok(SimState {
            buffer_cache_mb,
            shared_pool_mb,
            lru_queue: LruSet::new(cfg.cache_capacity(buffer_cache_mb)),
            plan_cache: LruSet::new(cfg.pool_capacity(shared_pool_mb)),
            counters: SimCounters::default(),
        })
    }

    pub fn buffer_cache_mb(&self) -> u32 {
        self.buffer_cache_mb
    }

    pub fn shared_pool_mb(&self) -> u32 {
        self.shared_pool_mb
    }

    pub fn buffer_cache(&self) -> &LruSet {
        &self.lru_queue
    }

    pub fn plan_cache(&self) -> &LruSet {
        &self.plan_cache
    }

    pub fn counters(&self) -> &SimCounters {
        &self.counters
    }

    /// Run one query touching `blocks` with statement `stmt`.
    ///
    /// `blocks` must be nonempty and `active_users >= 1`.
    pub fn execute_query(
        &mut self,
        cfg: &SimConfig,
        blocks: &[u64],
        stmt: u64,
        active_users: u32,
    ) -> QueryResult {
        debug_assert!(!blocks.is_empty());
        debug_assert!(active_users >= 1);
        let mut block_misses = 0u32;
        for &block in blocks {
            if !self.lru_queue.access(block) {
                block_misses += 1;
            }
        }
        let plan_miss = !self.plan_cache.access(stmt);

        let base = cfg.t_cpu_ms
            + f64::from(block_misses) * cfg.t_io_ms
            + if plan_miss { cfg.t_parse_ms } else { 0.0 };
        let response_ms = base * cfg.contention(active_users);

        let c = &mut self.counters;
        c.accesses += blocks.len() as u64;
        c.misses += u64::from(block_misses);
        c.parses += u64::from(plan_miss);
        c.queries += 1;
        c.cumulative_response_ms += response_ms;

        QueryResult {
            response_ms,
            block_misses,
            plan_miss,
        }
    }

    /// Resize the buffer cache to a ladder rung. Returns the number of blocks evicted.
    pub fn resize_buffer_cache(&mut self, cfg: &SimConfig, new_mb: u32) -> Result<usize> {
        cfg.buffer_ladder_mb.require(new_mb)?;
        self.buffer_cache_mb = new_mb;
        Ok(self.lru_queue.set_capacity(cfg.cache_capacity(new_mb)))
    }

    /// Resize the shared pool to a ladder rung. Returns the number of plans evicted.
    pub fn resize_shared_pool(&mut self, cfg: &SimConfig, new_mb: u32) -> Result<usize> {
        cfg.pool_ladder_mb.require(new_mb)?;
        self.shared_pool_mb = new_mb;
        Ok(self.plan_cache.set_capacity(cfg.pool_capacity(new_mb)))
    }
}

/// Hit ratio of a cache holding the `cache_blocks` most popular of
/// `working_set` Zipf(`zipf_s`) blocks (independent reference model).
pub fn analytic_hit_ratio(cache_blocks: u64, working_set: u64, zipf_s: f64) -> f64 {
    assert!(working_set >= 1, "working_set must be >= 1");
    let held = cache_blocks.min(working_set);
    let mut top = 0.0;
    let mut total = 0.0;
    // Sum from the smallest terms up for accuracy.
    for i in (1..=working_set).rev() {
        let w = (i as f64).powf(-zipf_s);
        total += w;
        if i <= held {
            top += w;
        }
    }
    top / total
}

//! Skewed-read OLTP load: every active user issues short transactions that
//! touch Zipf-popular blocks of a table growing linearly per tick.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type WorkloadRng = ChaCha8Rng;

/// One step of the user schedule: from `tick` on, `users` are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserStep {
    pub tick: u64,
    pub users: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub initial_table_rows: u64,
    pub rows_per_block: u64,
    pub growth_rows_per_tick: u64,
    pub zipf_s: f64,
    pub blocks_per_query_min: u32,
    pub blocks_per_query_max: u32,
    pub distinct_statements: u64,
    pub user_schedule: Vec<UserStep>,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            initial_table_rows: 65_536,
            rows_per_block: 64,
            growth_rows_per_tick: 0,
            zipf_s: 1.0,
            blocks_per_query_min: 2,
            blocks_per_query_max: 8,
            distinct_statements: 200,
            user_schedule: vec![UserStep { tick: 0, users: 8 }],
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub user_id: u32,
    pub blocks: Vec<u64>,
    pub stmt: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows_per_block == 0 {
            return Err(Error::config("rows_per_block must be positive"));
        }
        if self.initial_table_rows < self.rows_per_block {
            return Err(Error::config(
                "initial_table_rows must hold at least one full block",
            ));
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err(Error::config("zipf_s must be a finite value >= 0"));
        }
        if self.blocks_per_query_min == 0 || self.blocks_per_query_min > self.blocks_per_query_max {
            return Err(Error::config(
                "blocks_per_query must satisfy 1 <= min <= max",
            ));
        }
        if self.distinct_statements == 0 {
            return Err(Error::config("distinct_statements must be positive"));
        }
        if self.user_schedule.is_empty() {
            return Err(Error::config("user_schedule must have at least one step"));
        }
        if self
            .user_schedule
            .windows(2)
            .any(|w| w[0].tick >= w[1].tick)
        {
            return Err(Error::config(
                "user_schedule ticks must be strictly ascending",
            ));
        }
        Ok(())
    }

    pub fn rng(&self) -> WorkloadRng {
        WorkloadRng::seed_from_u64(self.seed)
    }

    /// Table size and active users at `clock`.
    pub fn advance_tick(&self, clock: u64) -> (u64, u32) {
        let rows = self.initial_table_rows + self.growth_rows_per_tick * clock;
        let users = self
            .user_schedule
            .iter()
            .take_while(|step| step.tick <= clock)
            .last()
            .unwrap_or(&self.user_schedule[0])
            .users;
        (rows, users)
    }

    pub fn table_blocks(&self, table_rows: u64) -> u64 {
        table_rows.div_ceil(self.rows_per_block)
    }

    pub fn next_transaction<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        table_rows: u64,
        user_id: u32,
    ) -> Transaction {
        let n_blocks = self.table_blocks(table_rows);
        let count = rng.random_range(self.blocks_per_query_min..=self.blocks_per_query_max);
        let blocks = (0..count)
            .map(|_| zipf_sample(rng, n_blocks, self.zipf_s) - 1)
            .collect();
        let stmt = zipf_sample(rng, self.distinct_statements, self.zipf_s) - 1;
        Transaction {
            user_id,
            blocks,
            stmt,
        }
    }
}

/// Draw a rank in `[1, n]` with probability proportional to `i^-s`.
pub fn zipf_sample<R: Rng + ?Sized>(rng: &mut R, n: u64, s: f64) -> u64 {
    assert!(n >= 1, "zipf support must be nonempty");
    if n == 1 {
        return 1;
    }
    let zipf = Zipf::new(n as f64, s).expect("validated zipf parameters");
    // Samples are integral floats in [1, n].
    (zipf.sample(rng) as u64).clamp(1, n)
}

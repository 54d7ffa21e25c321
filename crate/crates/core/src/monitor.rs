//! Aggregates per-query events into fixed-length metric windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::QueryResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub window_ticks: u64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { window_ticks: 50 }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_ticks == 0 {
            return Err(Error::config("window_ticks must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSnapshot {
    pub window_id: u64,
    pub end_tick: u64,
    pub buffer_miss_ratio: f64,
    pub active_users: u32,
    pub table_rows: u64,
    pub mean_response_ms: f64,
    pub queries: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindowAccumulator {
    pub accesses: u64,
    pub misses: u64,
    pub response_sum_ms: f64,
    pub queries: u64,
}

impl WindowAccumulator {
    pub fn record(&mut self, result: &QueryResult, blocks_touched: usize) {
        self.accesses += blocks_touched as u64;
        self.misses += u64::from(result.block_misses);
        self.response_sum_ms += result.response_ms;
        self.queries += 1;
    }
}

/// Owns the open window and numbers the closed ones consecutively from 1.
#[derive(Debug, Clone, Default)]
pub struct Monitor {
    acc: WindowAccumulator,
    next_window: u64,
}

impl Monitor {
    pub fn new() -> Self {
        Monitor {
            acc: WindowAccumulator::default(),
            next_window: 1,
        }
    }

    pub fn record(&mut self, result: &QueryResult, blocks_touched: usize) {
        self.acc.record(result, blocks_touched);
    }

    pub fn pending(&self) -> &WindowAccumulator {
        &self.acc
    }

    /// Emit the snapshot for the open window and start a new one.
    pub fn close_window(&mut self, end_tick: u64, users: u32, table_rows: u64) -> MetricsSnapshot {
        let acc = std::mem::take(&mut self.acc);
        let window_id = self.next_window;
        self.next_window += 1;
        MetricsSnapshot {
            window_id,
            end_tick,
            buffer_miss_ratio: if acc.accesses == 0 {
                0.0
            } else {
                acc.misses as f64 / acc.accesses as f64
            },
            active_users: users,
            table_rows,
            mean_response_ms: if acc.queries == 0 {
                0.0
            } else {
                acc.response_sum_ms / acc.queries as f64
            },
            queries: acc.queries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(response_ms: f64, block_misses: u32) -> QueryResult {
        QueryResult {
            response_ms,
            block_misses,
            plan_miss: false,
        }
    }

    #[test]
    fn single_event_sums() {
        let mut acc = WindowAccumulator::default();
        acc.record(&event(10.0, 2), 5);
        assert_eq!(
            acc,
            WindowAccumulator {
                accesses: 5,
                misses: 2,
                response_sum_ms: 10.0,
                queries: 1
            }
        );
        acc.record(&event(10.0, 2), 5);
        assert_eq!((acc.accesses, acc.misses, acc.queries), (10, 4, 2));
        assert_eq!(acc.response_sum_ms, 20.0);
    }

    #[test]
    fn empty_window_is_zeroed() {
        let mut m = Monitor::new();
        let s = m.close_window(49, 0, 1000);
        assert_eq!(s.buffer_miss_ratio, 0.0);
        assert_eq!(s.mean_response_ms, 0.0);
        assert_eq!(s.queries, 0);
    }

    #[test]
    fn ratios_and_echoed_fields() {
        let mut m = Monitor::new();
        m.record(&event(10.0, 25), 25);
        m.record(&event(12.0, 0), 25);
        m.record(&event(10.0, 0), 25);
        m.record(&event(10.0, 0), 25);
        let s = m.close_window(99, 12, 2500);
        assert_eq!(s.buffer_miss_ratio, 0.25);
        assert_eq!(s.mean_response_ms, 10.5);
        assert_eq!((s.active_users, s.table_rows, s.end_tick), (12, 2500, 99));
    }

    #[test]
    fn windows_are_consecutive_and_reset() {
        let mut m = Monitor::new();
        m.record(&event(1.0, 1), 1);
        let a = m.close_window(49, 1, 64);
        let b = m.close_window(99, 1, 64);
        assert_eq!((a.window_id, b.window_id), (1, 2));
        assert_eq!(a.queries, 1);
        assert_eq!(b.queries, 0);
        assert_eq!(*m.pending(), WindowAccumulator::default());
    }
}

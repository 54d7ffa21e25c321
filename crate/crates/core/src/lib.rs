//! Closed-loop self-tuning simulator for a DBMS memory subsystem.
//!
//! The pipeline is `workload -> sim -> monitor -> neural -> tuner`, composed
//! by [`harness`]. Every stage is deterministic under a fixed seed.

pub mod error;
pub mod float;
pub mod harness;
pub mod ladder;
pub mod monitor;
pub mod neural;
pub mod sim;
pub mod tuner;
pub mod workload;

pub use error::{Error, Result};
pub use ladder::Ladder;

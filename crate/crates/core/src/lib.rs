//! Structured pre-defined sparse multilayer perceptrons and a cycle-level model
//! of the edge-parallel, junction-pipelined hardware that trains them.
//!
//! The crate is organised by subsystem:
//!
//! - [`topology`]: network configurations, connection patterns and their generators
//! - [`clashfree`]: seed-vector driven left-memory access schedules, pattern counting
//!   and parallelism validation
//! - [`engine`]: forward / backward / update on compressed edge lists, training,
//!   pruning and checkpoints
//! - [`pipesim`]: junction pipeline schedule, storage accounting and the cycle-level
//!   simulator
//! - [`datasets`]: IDX ingestion, padding, PCA and synthetic fixtures
//! - [`experiment`]: glue that builds a sparse network by method, trains and scores it
//!
//! Junctions are indexed from 0 in every container (`patterns[0]` connects layer 0
//! to layer 1). The pipeline schedule is the one place that uses 1-based junction
//! numbers, matching the way slots are usually written down.

pub mod clashfree;
pub mod datasets;
pub mod engine;
mod error;
pub mod experiment;
pub mod pipesim;
pub mod rng;
pub mod stats;
pub mod topology;

pub use error::{Error, Result};

pub use clashfree::{AccessSchedule, CfType, ClashFreeSpec};
pub use datasets::Dataset;
pub use engine::{SparseModel, TrainConfig};
pub use pipesim::{PipelineConfig, PipelineTrace, StorageReport};
pub use topology::{DegreeKind, JunctionPattern, NetworkConfig};

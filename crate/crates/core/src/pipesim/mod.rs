//! Junction-pipelined hardware model: schedule, storage accounting and a cycle-level
//! simulator that executes FF, BP and UP with real arithmetic.

mod config;
mod schedule;
mod sim;
mod storage;
mod throughput;

pub use config::{Mode, PipelineConfig, QueueDepths};
pub use schedule::{build_schedule, build_schedule_for, OpKind, Schedule, ScheduledOp};
pub use sim::{simulate, write_trace_csv, Access, BankKind, PipelineTrace, Rw, SimOutcome};
pub use storage::{storage_report, StorageReport};
pub use throughput::{throughput_report, ThroughputReport};

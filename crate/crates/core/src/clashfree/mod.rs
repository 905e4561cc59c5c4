//! Clash-free left-memory access schedules.
//!
//! A junction with parallelism `z` keeps its left-layer parameters in `z` memories
//! of depth `D = n_left / z`; left neuron `k` lives in memory `k % z` at address
//! `k / z`. Each cycle the `z` processing lanes read one cell from every memory, so
//! a schedule that touches each memory once per cycle never stalls. A sweep of `D`
//! cycles reads every left neuron once, and `d_out` sweeps make one junction cycle.

mod count;
mod schedule;
mod spec;
mod validate;

pub use count::{count_patterns, network_pattern_count, PatternCount};
pub use schedule::{
    address_schedule, generate_connection_pattern, to_connection_pattern, verify_clash_free,
    AccessSchedule, ClashViolation, MemoryCell,
};
pub use spec::{generate_spec, CfType, ClashFreeSpec, Seeds, SPEC_MAGIC};
pub use validate::{validate_z_net, Check, CheckLevel, JunctionTiming, ZNetReport};

/// Memory index and depth address of left neuron `k` in a bank of `z` memories.
pub fn layout(k: usize, z: usize) -> MemoryCell {
    MemoryCell {
        memory: k % z,
        address: k / z,
    }
}

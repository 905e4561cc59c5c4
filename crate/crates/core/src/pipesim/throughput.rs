use std::fmt;

use super::config::Mode;
use super::sim::PipelineTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThroughputReport {
    /// Slot length, the slowest junction cycle.
    pub slot_cycles: usize,
    pub junction_cycles: Vec<usize>,
    /// Steady-state clock cycles between consecutive inputs.
    pub cycles_per_input: usize,
    /// Slots from loading an input until its last update.
    pub fill_latency_slots: usize,
    pub fill_latency_cycles: usize,
    pub total_cycles: u64,
}

pub fn throughput_report(trace: &PipelineTrace) -> ThroughputReport {
    let l = trace.junctions();
    let slots_per_input = match trace.mode {
        Mode::Pipelined => 1,
        Mode::SingleInput => 2 * l + 1,
    };
    ThroughputReport {
        slot_cycles: trace.slot_cycles,
        junction_cycles: trace.junction_cycles.clone(),
        cycles_per_input: slots_per_input * trace.slot_cycles,
        fill_latency_slots: 2 * l,
        fill_latency_cycles: 2 * l * trace.slot_cycles,
        total_cycles: trace.total_cycles,
    }
}

impl fmt::Display for ThroughputReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let jc: Vec<String> = self
            .junction_cycles
            .iter()
            .map(ToString::to_string)
            .collect();
        writeln!(f, "junction cycles    {}", jc.join(" "))?;
        writeln!(f, "slot cycles        {}", self.slot_cycles)?;
        writeln!(f, "cycles per input   {}", self.cycles_per_input)?;
        writeln!(
            f,
            "fill latency       {} slots ({} cycles)",
            self.fill_latency_slots, self.fill_latency_cycles
        )?;
        write!(f, "total cycles       {}", self.total_cycles)
    }
}

use std::fmt;

use super::{generate_spec, CfType, ClashFreeSpec};
use crate::rng;
use crate::topology::{DegreeKind, JunctionPattern};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemoryCell {
    pub memory: usize,
    pub address: usize,
}

impl MemoryCell {
    /// Left neuron stored in this cell of a bank with `z` memories.
    pub fn neuron(self, z: usize) -> usize {
        self.address * z + self.memory
    }
}

/// Per-cycle left-memory accesses, one cell per processing lane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSchedule {
    z: usize,
    depth: usize,
    cells: Vec<MemoryCell>,
}

impl AccessSchedule {
    /// Builds a schedule from explicit per-cycle lane accesses. Every cycle must
    /// hold exactly `z` cells.
    pub fn from_cycles(z: usize, depth: usize, cycles: Vec<Vec<MemoryCell>>) -> Result<Self> {
        if z == 0 || depth == 0 {
            return Err(Error::Spec("z and D must be positive".into()));
        }
        if let Some(c) = cycles.iter().position(|c| c.len() != z) {
            return Err(Error::Spec(format!("cycle {c} does not have {z} accesses")));
        }
        Ok(Self {
            z,
            depth,
            cells: cycles.into_iter().flatten().collect(),
        })
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cycles(&self) -> usize {
        self.cells.len() / self.z
    }

    pub fn cycle(&self, c: usize) -> &[MemoryCell] {
        &self.cells[c * self.z..(c + 1) * self.z]
    }

    /// Left neurons read in cycle `c`, in lane order.
    pub fn neurons(&self, c: usize) -> Vec<usize> {
        self.cycle(c)
            .iter()
            .map(|cell| cell.neuron(self.z))
            .collect()
    }

    /// Left neuron sequence flattened in (cycle, lane) order.
    pub fn neuron_sequence(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().map(|cell| cell.neuron(self.z))
    }
}

pub fn address_schedule(spec: &ClashFreeSpec) -> AccessSchedule {
    let z = spec.z();
    let mut cells = Vec::with_capacity(spec.cycles() * z);
    for c in 0..spec.cycles() {
        let sweep = c / spec.depth();
        for lane in 0..z {
            let memory = spec.memory_for_lane(sweep, lane);
            cells.push(MemoryCell {
                memory,
                address: spec.address(c, memory),
            });
        }
    }
    AccessSchedule {
        z,
        depth: spec.depth(),
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClashViolation {
    /// `count` accesses to one memory in a single cycle.
    Clash {
        cycle: usize,
        memory: usize,
        count: usize,
    },
    /// A left neuron read `count` times (instead of once) during a sweep.
    Coverage {
        sweep: usize,
        neuron: usize,
        count: usize,
    },
    /// Out-of-range memory index or address.
    OutOfRange { cycle: usize, lane: usize },
}

impl fmt::Display for ClashViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClashViolation::Clash {
                cycle,
                memory,
                count,
            } => {
                write!(f, "cycle {cycle}: memory {memory} accessed {count} times")
            }
            ClashViolation::Coverage {
                sweep,
                neuron,
                count,
            } => {
                write!(f, "sweep {sweep}: left neuron {neuron} read {count} times")
            }
            ClashViolation::OutOfRange { cycle, lane } => {
                write!(
                    f,
                    "cycle {cycle}: lane {lane} addresses a cell outside the bank"
                )
            }
        }
    }
}

/// Checks at most one access per memory per cycle and exactly-once coverage of
/// every left neuron in every sweep. Returns every violation found.
pub fn verify_clash_free(s: &AccessSchedule) -> std::result::Result<(), Vec<ClashViolation>> {
    let (z, depth) = (s.z, s.depth);
    let n_left = z * depth;
    let mut violations = Vec::new();
    let mut per_memory = vec![0usize; z];
    let mut coverage = vec![0usize; n_left];
    let cycles = s.cycles();
    for c in 0..cycles {
        per_memory.fill(0);
        for (lane, cell) in s.cycle(c).iter().enumerate() {
            if cell.memory >= z || cell.address >= depth {
                violations.push(ClashViolation::OutOfRange { cycle: c, lane });
                continue;
            }
            per_memory[cell.memory] += 1;
            coverage[cell.neuron(z)] += 1;
        }
        for (memory, &count) in per_memory.iter().enumerate() {
            if count > 1 {
                violations.push(ClashViolation::Clash {
                    cycle: c,
                    memory,
                    count,
                });
            }
        }
        let sweep_done = (c + 1) % depth == 0 || c + 1 == cycles;
        if sweep_done {
            let sweep = c / depth;
            for (neuron, &count) in coverage.iter().enumerate() {
                if count != 1 {
                    violations.push(ClashViolation::Coverage {
                        sweep,
                        neuron,
                        count,
                    });
                }
            }
            coverage.fill(0);
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Connection pattern implied by a spec: the left-neuron access sequence is cut
/// into consecutive groups of `d_in`, one per right neuron, in weight order.
pub fn to_connection_pattern(
    spec: &ClashFreeSpec,
    d_in: usize,
    n_right: usize,
) -> Result<JunctionPattern> {
    let total = spec.cycles() * spec.z();
    if d_in == 0 || total != n_right * d_in {
        return Err(Error::Spec(format!(
            "schedule has {total} edges but {n_right} right neurons x in-degree {d_in} = {}",
            n_right * d_in
        )));
    }
    let seq: Vec<usize> = address_schedule(spec).neuron_sequence().collect();
    let rows: Vec<Vec<usize>> = seq.chunks(d_in).map(<[usize]>::to_vec).collect();
    for (j, row) in rows.iter().enumerate() {
        let mut sorted = row.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Spec(format!(
                "right neuron {j} would connect to left neuron {} twice",
                w[0]
            )));
        }
    }
    JunctionPattern::from_rows(spec.n_left(), n_right, &rows, DegreeKind::Regular)
}

const MAX_SPEC_DRAWS: u64 = 1000;

/// Draws specs until one converts into a duplicate-free connection pattern.
///
/// Type 1 specs without dither always succeed on the first draw; per-sweep seeds or
/// dither can place the same neuron twice in a right-neuron group that straddles
/// two sweeps, and such draws are rejected.
pub fn generate_connection_pattern(
    n_left: usize,
    n_right: usize,
    d_out: usize,
    z: usize,
    cf_type: CfType,
    dither: bool,
    seed: u64,
) -> Result<(ClashFreeSpec, JunctionPattern)> {
    if (n_left * d_out) % n_right != 0 {
        return Err(Error::Config(format!(
            "in-degree {n_left}*{d_out}/{n_right} is not an integer"
        )));
    }
    let d_in = n_left * d_out / n_right;
    let mut last = None;
    for attempt in 0..MAX_SPEC_DRAWS {
        let s = if attempt == 0 {
            seed
        } else {
            rng::derive(seed, attempt)
        };
        let spec = generate_spec(n_left, d_out, z, cf_type, dither, s)?;
        match to_connection_pattern(&spec, d_in, n_right) {
            Ok(p) => return Ok((spec, p)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Spec("no valid spec found".into())))
}

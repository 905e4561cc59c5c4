use std::fmt;

use super::config::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Load,
    Ff,
    Bp,
    Up,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Load => "LOAD",
            OpKind::Ff => "FF",
            OpKind::Bp => "BP",
            OpKind::Up => "UP",
        })
    }
}

/// One operation of one junction on one input. Junctions are numbered from 1 here;
/// loads of the input layer use junction 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScheduledOp {
    pub op: OpKind,
    pub junction: usize,
    pub input: usize,
}

impl fmt::Display for ScheduledOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}({})", self.op, self.junction, self.input)
    }
}

/// Slot-indexed operation sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    junctions: usize,
    slots: Vec<Vec<ScheduledOp>>,
}

impl Schedule {
    pub fn junctions(&self) -> usize {
        self.junctions
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// All operations of a slot, loads included.
    pub fn slot(&self, s: usize) -> &[ScheduledOp] {
        self.slots.get(s).map_or(&[], Vec::as_slice)
    }

    /// FF, BP and UP operations of a slot.
    pub fn compute_ops(&self, s: usize) -> Vec<ScheduledOp> {
        self.slot(s)
            .iter()
            .copied()
            .filter(|o| o.op != OpKind::Load)
            .collect()
    }

    pub fn slots(&self) -> impl Iterator<Item = &[ScheduledOp]> {
        self.slots.iter().map(Vec::as_slice)
    }
}

/// Pipelined schedule: FF of junction i on input n in slot n+i, BP (i ≥ 2) and UP in slot
/// n+2L−i+1, and the input itself loaded in slot n.
pub fn build_schedule(l: usize, n_inputs: usize) -> Schedule {
    build_schedule_for(l, n_inputs, Mode::Pipelined)
}

/// In single-input mode each input gets its own `2L+1` slots and nothing overlaps.
pub fn build_schedule_for(l: usize, n_inputs: usize, mode: Mode) -> Schedule {
    assert!(l >= 1, "a network has at least one junction");
    let stride = match mode {
        Mode::Pipelined => 1,
        Mode::SingleInput => 2 * l + 1,
    };
    let n_slots = if n_inputs == 0 {
        0
    } else {
        (n_inputs - 1) * stride + 2 * l + 1
    };
    let mut slots = vec![Vec::new(); n_slots];
    for n in 0..n_inputs {
        let base = n * stride;
        slots[base].push(ScheduledOp {
            op: OpKind::Load,
            junction: 0,
            input: n,
        });
        for i in 1..=l {
            slots[base + i].push(ScheduledOp {
                op: OpKind::Ff,
                junction: i,
                input: n,
            });
            let back = base + 2 * l - i + 1;
            if i >= 2 {
                slots[back].push(ScheduledOp {
                    op: OpKind::Bp,
                    junction: i,
                    input: n,
                });
            }
            slots[back].push(ScheduledOp {
                op: OpKind::Up,
                junction: i,
                input: n,
            });
        }
    }
    for s in &mut slots {
        s.sort();
    }
    Schedule {
        junctions: l,
        slots,
    }
}

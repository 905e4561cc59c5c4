use std::fmt;

use crate::topology::NetworkConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckLevel {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    /// 1-based junction number.
    pub junction: usize,
    pub level: CheckLevel,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JunctionTiming {
    pub z: usize,
    /// Left memory depth `ceil(N_{i-1} / z_i)`.
    pub depth: usize,
    /// Dummy left neurons needed to make `z_i` divide the left layer.
    pub padding: usize,
    /// Junction cycle `ceil(|W_i| / z_i)` without flush cycles.
    pub cycles: usize,
    /// Most right-neuron cells touched in one cycle, `ceil(z_i / d_in_i)`.
    pub right_cells_per_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZNetReport {
    pub junctions: Vec<JunctionTiming>,
    pub checks: Vec<Check>,
}

impl ZNetReport {
    /// Slot length of the pipeline: the slowest junction.
    pub fn cycles_per_input(&self) -> usize {
        self.junctions.iter().map(|j| j.cycles).max().unwrap_or(0)
    }

    pub fn worst(&self) -> CheckLevel {
        self.checks
            .iter()
            .map(|c| c.level)
            .max()
            .unwrap_or(CheckLevel::Pass)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.level == CheckLevel::Warn)
    }
}

impl fmt::Display for ZNetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "junction  z  D  pad  C  right/cycle")?;
        for (i, t) in self.junctions.iter().enumerate() {
            writeln!(
                f,
                "{}  {}  {}  {}  {}  {}",
                i + 1,
                t.z,
                t.depth,
                t.padding,
                t.cycles,
                t.right_cells_per_cycle
            )?;
        }
        for c in &self.checks {
            let tag = match c.level {
                CheckLevel::Pass => "pass",
                CheckLevel::Warn => "warn",
                CheckLevel::Fail => "FAIL",
            };
            writeln!(f, "[{tag}] junction {}: {}", c.junction, c.message)?;
        }
        Ok(())
    }
}

/// Checks a parallelism configuration for stall-free operation.
///
/// Right-bank clashes (`z_{i+1} < ceil(z_i / d_in_i)`) are errors. Non-dividing
/// `z_i`, fractional cycle counts and unequal junction cycles are warnings.
pub fn validate_z_net(cfg: &NetworkConfig) -> Result<ZNetReport> {
    let z = cfg
        .parallelism()
        .ok_or_else(|| Error::Config("no parallelism configuration given".into()))?;
    let l = cfg.num_junctions();
    let mut checks = Vec::new();
    let mut junctions = Vec::with_capacity(l);
    for j in 0..l {
        let n = j + 1;
        let (left, zj, d_in) = (cfg.left_size(j), z[j], cfg.in_degree(j));
        let depth = left.div_ceil(zj);
        let padding = depth * zj - left;
        if padding > 0 {
            checks.push(Check {
                junction: n,
                level: CheckLevel::Warn,
                message: format!(
                    "z={zj} does not divide {left} left neurons; pad with {padding} dummy neurons"
                ),
            });
        }
        let edges = cfg.edges(j);
        let cycles = edges.div_ceil(zj);
        if edges % zj != 0 {
            checks.push(Check {
                junction: n,
                level: CheckLevel::Warn,
                message: format!("|W|={edges} is not a multiple of z={zj}; last cycle partly idle"),
            });
        }
        junctions.push(JunctionTiming {
            z: zj,
            depth,
            padding,
            cycles,
            right_cells_per_cycle: zj.div_ceil(d_in),
        });
    }

    let mut failures = Vec::new();
    for j in 0..l.saturating_sub(1) {
        let n = j + 1;
        let (zj, d_in) = (z[j], cfg.in_degree(j));
        let needed = zj.div_ceil(d_in);
        if z[j + 1] < needed {
            let msg = format!(
                "right bank has z={} memories but up to {needed} right neurons are touched per cycle",
                z[j + 1]
            );
            failures.push(format!("junction {n}: {msg}"));
            checks.push(Check {
                junction: n,
                level: CheckLevel::Fail,
                message: msg,
            });
        } else {
            checks.push(Check {
                junction: n,
                level: CheckLevel::Pass,
                message: format!("z_next={} >= ceil(z/d_in)={needed}", z[j + 1]),
            });
        }
        // d_out_{i+1} >= (d_in_i / z_i) ceil(z_i / d_in_i), compared over integers
        let d_out_next = cfg.out_degrees()[j + 1];
        if d_out_next * zj < d_in * needed {
            checks.push(Check {
                junction: n,
                level: CheckLevel::Warn,
                message: format!(
                    "d_out_next={d_out_next} < d_in/z * ceil(z/d_in) = {}/{}",
                    d_in * needed,
                    zj
                ),
            });
        }
    }

    let first = junctions.first().map(|t| t.cycles).unwrap_or(0);
    if junctions.iter().any(|t| t.cycles != first) {
        let cs: Vec<String> = junctions.iter().map(|t| t.cycles.to_string()).collect();
        let max = junctions.iter().map(|t| t.cycles).max().unwrap_or(0);
        let at = junctions.iter().position(|t| t.cycles == max).unwrap_or(0) + 1;
        checks.push(Check {
            junction: at,
            level: CheckLevel::Warn,
            message: format!(
                "junction cycles differ ({}); throughput set by the slowest, {max} cycles",
                cs.join(", ")
            ),
        });
    }

    if !failures.is_empty() {
        return Err(Error::Config(format!(
            "parallelism causes right-bank clashes: {}",
            failures.join("; ")
        )));
    }
    Ok(ZNetReport { junctions, checks })
}

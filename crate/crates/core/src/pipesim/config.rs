use crate::clashfree::{
    generate_connection_pattern, validate_z_net, CfType, ClashFreeSpec, ZNetReport,
};
use crate::rng;
use crate::topology::{JunctionPattern, NetworkConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Pipelined,
    /// The pipeline drains between inputs.
    SingleInput,
}

/// Physical copies kept per layer for each kind of value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueDepths {
    /// Layers `0..L`.
    pub activations: Vec<usize>,
    /// Layers `0..L`; entry 0 is unused.
    pub activation_derivatives: Vec<usize>,
    pub deltas: usize,
}

impl QueueDepths {
    /// The depths the schedule needs: `2(L−i)+1` for layer `i`, and 2 for deltas.
    pub fn required(l: usize) -> Self {
        let d: Vec<usize> = (0..l).map(|i| 2 * (l - i) + 1).collect();
        let mut da = d.clone();
        da[0] = 0;
        Self {
            activations: d,
            activation_derivatives: da,
            deltas: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    network: NetworkConfig,
    specs: Vec<ClashFreeSpec>,
    flush: Vec<usize>,
    pub mode: Mode,
    pub depths: QueueDepths,
    /// Keep every memory access in the trace.
    pub record_accesses: bool,
    report: ZNetReport,
}

impl PipelineConfig {
    /// `network` must carry a parallelism vector. Each spec drives the left-memory
    /// accesses of its junction and must match the junction's size, `z` and out-degree.
    pub fn new(
        network: NetworkConfig,
        specs: Vec<ClashFreeSpec>,
        flush: Vec<usize>,
        mode: Mode,
    ) -> Result<Self> {
        let report = validate_z_net(&network)?;
        let l = network.num_junctions();
        let z = network.parallelism().expect("validated above");
        if specs.len() != l {
            return Err(Error::Config(format!(
                "{} specs for {l} junctions",
                specs.len()
            )));
        }
        let flush = if flush.is_empty() { vec![0; l] } else { flush };
        if flush.len() != l {
            return Err(Error::Config(format!(
                "{} flush counts for {l} junctions",
                flush.len()
            )));
        }
        for (j, s) in specs.iter().enumerate() {
            let n = j + 1;
            if s.z() != z[j]
                || s.n_left() != network.left_size(j)
                || s.sweeps() != network.out_degrees()[j]
            {
                return Err(Error::Config(format!(
                    "junction {n}: spec (z={}, {} left neurons, {} sweeps) does not fit z={}, {} left neurons, out-degree {}",
                    s.z(),
                    s.n_left(),
                    s.sweeps(),
                    z[j],
                    network.left_size(j),
                    network.out_degrees()[j]
                )));
            }
        }
        for c in report.warnings() {
            log::warn!("junction {}: {}", c.junction, c.message);
        }
        Ok(Self {
            depths: QueueDepths::required(l),
            network,
            specs,
            flush,
            mode,
            record_accesses: false,
            report,
        })
    }

    /// Draws a clash-free spec and matching pattern per junction. Fully connected
    /// junctions use natural order.
    pub fn generate(
        network: NetworkConfig,
        cf_type: CfType,
        dither: bool,
        flush: Vec<usize>,
        mode: Mode,
        seed: u64,
    ) -> Result<(Self, Vec<JunctionPattern>)> {
        let z = network
            .parallelism()
            .ok_or_else(|| Error::Config("no parallelism configuration given".into()))?
            .to_vec();
        let mut specs = Vec::new();
        let mut patterns = Vec::new();
        for j in 0..network.num_junctions() {
            let (nl, nr, d_out) = (
                network.left_size(j),
                network.right_size(j),
                network.out_degrees()[j],
            );
            if nl % z[j] != 0 {
                return Err(Error::Config(format!(
                    "junction {}: z={} does not divide {nl}; pad the layer",
                    j + 1,
                    z[j]
                )));
            }
            if network.is_fully_connected(j) {
                specs.push(ClashFreeSpec::natural(z[j], nl / z[j], nr));
                patterns.push(JunctionPattern::fully_connected(nl, nr));
            } else {
                let (s, p) = generate_connection_pattern(
                    nl,
                    nr,
                    d_out,
                    z[j],
                    cf_type,
                    dither,
                    rng::derive(seed, j as u64),
                )?;
                specs.push(s);
                patterns.push(p);
            }
        }
        Ok((Self::new(network, specs, flush, mode)?, patterns))
    }

    pub fn network(&self) -> &NetworkConfig {
        &self.network
    }

    pub fn specs(&self) -> &[ClashFreeSpec] {
        &self.specs
    }

    pub fn flush(&self) -> &[usize] {
        &self.flush
    }

    pub fn z_report(&self) -> &ZNetReport {
        &self.report
    }

    pub fn num_junctions(&self) -> usize {
        self.network.num_junctions()
    }

    /// `|W_i| / z_i + c_i` per junction.
    pub fn junction_cycles(&self) -> Vec<usize> {
        self.specs
            .iter()
            .zip(&self.flush)
            .map(|(s, c)| s.cycles() + c)
            .collect()
    }

    /// Slot length: the slowest junction cycle.
    pub fn slot_cycles(&self) -> usize {
        self.junction_cycles().into_iter().max().unwrap_or(0)
    }

    /// Memories in the bank of layer `i`: the parallelism of the junction reading it, or
    /// `ceil(z_L / d_in_L)` for the output layer.
    pub fn memories(&self, layer: usize) -> usize {
        let z = self.network.parallelism().expect("validated");
        let l = self.num_junctions();
        if layer < l {
            z[layer]
        } else {
            z[l - 1].div_ceil(self.network.in_degree(l - 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flush_cycles_extend_the_junction_cycle() {
        let net = NetworkConfig::fully_connected(vec![8, 8, 8])
            .unwrap()
            .with_parallelism(vec![2, 2])
            .unwrap();
        let (cfg, _) =
            PipelineConfig::generate(net, CfType::Type1, false, vec![2, 2], Mode::Pipelined, 0)
                .unwrap();
        assert_eq!(cfg.junction_cycles(), vec![34, 34]);
        assert_eq!(cfg.slot_cycles(), 34);
    }

    #[test]
    fn rejects_mismatched_spec() {
        let net = NetworkConfig::new(vec![12, 8], vec![2])
            .unwrap()
            .with_parallelism(vec![4])
            .unwrap();
        let spec = ClashFreeSpec::natural(4, 3, 3);
        assert!(PipelineConfig::new(net.clone(), vec![spec], vec![], Mode::Pipelined).is_err());
        let spec = ClashFreeSpec::natural(4, 3, 2);
        let cfg = PipelineConfig::new(net, vec![spec], vec![], Mode::Pipelined).unwrap();
        assert_eq!(cfg.junction_cycles(), vec![6]);
        assert_eq!(cfg.memories(1), 2);
    }

    #[test]
    fn right_bank_violation_is_an_error() {
        let net = NetworkConfig::new(vec![8, 8, 8], vec![2, 2])
            .unwrap()
            .with_parallelism(vec![8, 1])
            .unwrap();
        let specs = vec![
            ClashFreeSpec::natural(8, 1, 2),
            ClashFreeSpec::natural(1, 8, 2),
        ];
        assert!(PipelineConfig::new(net, specs, vec![], Mode::Pipelined).is_err());
    }

    #[test]
    fn required_depths() {
        let d = QueueDepths::required(2);
        assert_eq!(d.activations, vec![5, 3]);
        assert_eq!(d.activation_derivatives, vec![0, 3]);
        assert_eq!(d.deltas, 2);
    }
}

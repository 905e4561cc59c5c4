use std::fmt;

use crate::topology::NetworkConfig;

/// Stored values of the pipelined architecture, by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageReport {
    pub activations: u64,
    pub activation_derivatives: u64,
    pub deltas: u64,
    pub biases: u64,
    pub weights: u64,
    pub total: u64,
}

/// Activation queues hold `2(L−i)+1` copies of layer `i < L`, derivative queues the same
/// for hidden layers, and every non-input layer keeps two delta copies.
pub fn storage_report(cfg: &NetworkConfig) -> StorageReport {
    let n = cfg.layer_sizes();
    let l = cfg.num_junctions();
    let depth = |i: usize| (2 * (l - i) + 1) as u64;
    let activations = (0..l).map(|i| depth(i) * n[i] as u64).sum();
    let activation_derivatives = (1..l).map(|i| depth(i) * n[i] as u64).sum();
    let biases: u64 = n[1..].iter().map(|&v| v as u64).sum();
    let deltas = 2 * biases;
    let weights = cfg.total_edges() as u64;
    StorageReport {
        activations,
        activation_derivatives,
        deltas,
        biases,
        weights,
        total: activations + activation_derivatives + deltas + biases + weights,
    }
}

impl fmt::Display for StorageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a      {}", self.activations)?;
        writeln!(f, "a'     {}", self.activation_derivatives)?;
        writeln!(f, "delta  {}", self.deltas)?;
        writeln!(f, "b      {}", self.biases)?;
        writeln!(f, "W      {}", self.weights)?;
        write!(f, "total  {}", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_junction_formula() {
        let r = storage_report(&NetworkConfig::fully_connected(vec![7, 3]).unwrap());
        assert_eq!(
            (
                r.activations,
                r.activation_derivatives,
                r.deltas,
                r.biases,
                r.weights
            ),
            (21, 0, 6, 3, 21)
        );
        assert_eq!(r.total, 51);
    }

    #[test]
    fn three_junctions_by_hand() {
        let cfg = NetworkConfig::fully_connected(vec![4, 3, 2, 5]).unwrap();
        let r = storage_report(&cfg);
        assert_eq!(r.activations, 7 * 4 + 5 * 3 + 3 * 2);
        assert_eq!(r.activation_derivatives, 5 * 3 + 3 * 2);
        assert_eq!(r.deltas, 2 * 10);
        assert_eq!(r.weights, 12 + 6 + 10);
    }
}

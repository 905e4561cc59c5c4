use num_rational::Ratio;

use crate::{Error, Result};

/// Neuronal, out-degree and (optionally) parallelism configuration of an MLP.
///
/// `layer_sizes` has `L + 1` entries, `out_degrees` and `parallelism` have `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    layer_sizes: Vec<usize>,
    out_degrees: Vec<usize>,
    parallelism: Option<Vec<usize>>,
}

impl NetworkConfig {
    pub fn new(layer_sizes: Vec<usize>, out_degrees: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "need at least two layers, got {}",
                layer_sizes.len()
            )));
        }
        if out_degrees.len() != layer_sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers need {} out-degrees, got {}",
                layer_sizes.len(),
                layer_sizes.len() - 1,
                out_degrees.len()
            )));
        }
        if let Some(i) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Config(format!("layer {i} has no neurons")));
        }
        for (j, (&d_out, w)) in out_degrees.iter().zip(layer_sizes.windows(2)).enumerate() {
            let (left, right) = (w[0], w[1]);
            let junction = j + 1;
            if d_out == 0 || d_out > right {
                return Err(Error::Config(format!(
                    "junction {junction}: out-degree {d_out} outside 1..={right}"
                )));
            }
            if (left * d_out) % right != 0 {
                return Err(Error::Config(format!(
                    "junction {junction}: in-degree {left}*{d_out}/{right} is not an integer"
                )));
            }
        }
        Ok(Self {
            layer_sizes,
            out_degrees,
            parallelism: None,
        })
    }

    /// Fully connected configuration for the given layer sizes.
    pub fn fully_connected(layer_sizes: Vec<usize>) -> Result<Self> {
        let out = layer_sizes.iter().skip(1).copied().collect();
        Self::new(layer_sizes, out)
    }

    pub fn with_parallelism(mut self, z: Vec<usize>) -> Result<Self> {
        if z.len() != self.num_junctions() {
            return Err(Error::Config(format!(
                "{} junctions need {} parallelism entries, got {}",
                self.num_junctions(),
                self.num_junctions(),
                z.len()
            )));
        }
        if let Some(j) = z.iter().position(|&v| v == 0) {
            return Err(Error::Config(format!(
                "junction {}: degree of parallelism must be positive",
                j + 1
            )));
        }
        self.parallelism = Some(z);
        Ok(self)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn out_degrees(&self) -> &[usize] {
        &self.out_degrees
    }

    pub fn parallelism(&self) -> Option<&[usize]> {
        self.parallelism.as_deref()
    }

    /// Number of junctions `L`.
    pub fn num_junctions(&self) -> usize {
        self.out_degrees.len()
    }

    pub fn left_size(&self, j: usize) -> usize {
        self.layer_sizes[j]
    }

    pub fn right_size(&self, j: usize) -> usize {
        self.layer_sizes[j + 1]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.layer_sizes[j] * self.out_degrees[j] / self.layer_sizes[j + 1]
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        (0..self.num_junctions())
            .map(|j| self.in_degree(j))
            .collect()
    }

    /// `|W_j|`, the number of edges in junction `j`.
    pub fn edges(&self, j: usize) -> usize {
        self.layer_sizes[j] * self.out_degrees[j]
    }

    pub fn total_edges(&self) -> usize {
        (0..self.num_junctions()).map(|j| self.edges(j)).sum()
    }

    pub fn density(&self, j: usize) -> Ratio<u64> {
        Ratio::new(
            self.edges(j) as u64,
            (self.layer_sizes[j] * self.layer_sizes[j + 1]) as u64,
        )
    }

    pub fn net_density(&self) -> Ratio<u64> {
        let dense: usize = self.layer_sizes.windows(2).map(|w| w[0] * w[1]).sum();
        Ratio::new(self.total_edges() as u64, dense as u64)
    }

    pub fn is_fully_connected(&self, j: usize) -> bool {
        self.out_degrees[j] == self.layer_sizes[j + 1]
    }

    /// Trainable parameter count: all edges plus all non-input biases.
    pub fn trainable_parameters(&self) -> usize {
        self.total_edges() + self.layer_sizes[1..].iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionSummary {
    pub in_degree: usize,
    pub edges: usize,
    pub density: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    pub junctions: Vec<JunctionSummary>,
    pub density: Ratio<u64>,
    pub density_f64: f64,
}

pub fn junction_summary(cfg: &NetworkConfig) -> NetworkSummary {
    let junctions = (0..cfg.num_junctions())
        .map(|j| JunctionSummary {
            in_degree: cfg.in_degree(j),
            edges: cfg.edges(j),
            density: cfg.density(j),
        })
        .collect();
    let density = cfg.net_density();
    NetworkSummary {
        junctions,
        density,
        density_f64: *density.numer() as f64 / *density.denom() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mnist_sparse_summary() {
        let cfg = NetworkConfig::new(vec![800, 100, 10], vec![20, 10]).unwrap();
        let s = junction_summary(&cfg);
        assert_eq!(s.junctions[0].in_degree, 160);
        assert_eq!(s.junctions[1].in_degree, 100);
        assert_eq!(s.junctions[0].edges, 16000);
        assert_eq!(s.junctions[1].edges, 1000);
        assert_eq!(s.junctions[0].density, Ratio::new(1, 5));
        assert_eq!(s.junctions[1].density, Ratio::new(1, 1));
        assert_eq!(s.density, Ratio::new(17000, 81000));
        assert!((s.density_f64 - 0.2099).abs() < 1e-3);
    }

    #[test]
    fn fully_connected_density_is_one() {
        let cfg = NetworkConfig::new(vec![800, 100, 10], vec![100, 10]).unwrap();
        assert_eq!(junction_summary(&cfg).density, Ratio::from_integer(1));
    }

    #[test]
    fn reuters_half_density() {
        let cfg = NetworkConfig::new(vec![2000, 50, 50], vec![25, 25]).unwrap();
        assert_eq!(junction_summary(&cfg).density, Ratio::new(1, 2));
    }

    #[test]
    fn non_integral_in_degree_names_junction() {
        let err = NetworkConfig::new(vec![10, 7, 3], vec![2, 1]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("junction 1"), "{msg}");
        let err = NetworkConfig::new(vec![12, 6, 4], vec![2, 1]).unwrap_err();
        assert!(err.to_string().contains("junction 2"));
    }

    #[test]
    fn rejects_out_degree_above_right_size() {
        assert!(NetworkConfig::new(vec![4, 4], vec![5]).is_err());
        assert!(NetworkConfig::new(vec![4, 4], vec![0]).is_err());
    }

    #[test]
    fn parallelism_length_checked() {
        let cfg = NetworkConfig::new(vec![4, 4], vec![2]).unwrap();
        assert!(cfg.clone().with_parallelism(vec![2, 2]).is_err());
        assert!(cfg.with_parallelism(vec![2]).is_ok());
    }
}

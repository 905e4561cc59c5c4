//! Network configurations and sparse connection patterns.

mod attention;
mod config;
mod density;
mod generate;
mod pattern;

pub use attention::{attention_degrees, generate_from_out_degrees};
pub use config::{junction_summary, JunctionSummary, NetworkConfig, NetworkSummary};
pub use density::{enumerate_densities, FeasibleDensity};
pub use generate::{
    edges_for_density, generate_random_unstructured, generate_random_with_edges,
    generate_structured_random,
};
pub use pattern::{find_disconnected, DegreeKind, JunctionPattern, PATTERN_MAGIC};

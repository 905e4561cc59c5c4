//! Builds a sparse network by a named method, trains it and scores it.

use std::fmt;
use std::str::FromStr;

use crate::clashfree::{generate_connection_pattern, CfType};
use crate::datasets::Dataset;
use crate::engine::{
    evaluate, init_model, prune_threshold, train, History, SparseModel, TrainConfig,
};
use crate::rng;
use crate::topology::{
    attention_degrees, generate_from_out_degrees, generate_random_with_edges,
    generate_structured_random, JunctionPattern, NetworkConfig,
};
use crate::{Error, Result};

/// Variance levels used by the attention method.
pub const ATTENTION_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Random pattern with fixed in- and out-degrees.
    Structured,
    ClashFree {
        cf_type: CfType,
        dither: bool,
    },
    /// Same edge count per junction, no degree constraints.
    Random,
    /// First-junction out-degrees follow input feature variance.
    Attention,
    /// Train fully connected, keep the largest weights, retrain.
    Prune,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Structured => f.write_str("structured"),
            Method::ClashFree { cf_type, dither } => {
                write!(
                    f,
                    "clash-free-{}{}",
                    cf_type.number(),
                    if *dither { "-dither" } else { "" }
                )
            }
            Method::Random => f.write_str("random"),
            Method::Attention => f.write_str("attention"),
            Method::Prune => f.write_str("prune"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "structured" | "structured-random" => Method::Structured,
            "random" => Method::Random,
            "attention" => Method::Attention,
            "prune" | "prune-after-train" => Method::Prune,
            _ => {
                let rest = s
                    .strip_prefix("clash-free-")
                    .ok_or_else(|| Error::Config(format!("unknown sparsity method {s:?}")))?;
                let (num, dither) = match rest.strip_suffix("-dither") {
                    Some(n) => (n, true),
                    None => (rest, false),
                };
                let n: u8 = num
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown sparsity method {s:?}")))?;
                Method::ClashFree {
                    cf_type: CfType::from_number(n)?,
                    dither,
                }
            }
        })
    }
}

/// Connection patterns for `net` under `method`. Prune returns fully connected patterns
/// (the sparsity is applied after training); attention needs the training data.
pub fn build_patterns(
    net: &NetworkConfig,
    method: Method,
    train_set: Option<&Dataset>,
    seed: u64,
) -> Result<Vec<JunctionPattern>> {
    let mut out = Vec::with_capacity(net.num_junctions());
    for j in 0..net.num_junctions() {
        let (nl, nr, d_out) = (net.left_size(j), net.right_size(j), net.out_degrees()[j]);
        let s = rng::derive(seed, j as u64);
        let p = match method {
            _ if net.is_fully_connected(j) => JunctionPattern::fully_connected(nl, nr),
            Method::Prune => JunctionPattern::fully_connected(nl, nr),
            Method::Structured => generate_structured_random(nl, nr, d_out, s)?,
            Method::Random => generate_random_with_edges(nl, nr, net.edges(j), s)?,
            Method::ClashFree { cf_type, dither } => {
                let z = net.parallelism().ok_or_else(|| {
                    Error::Config("clash-free patterns need a parallelism vector".into())
                })?;
                generate_connection_pattern(nl, nr, d_out, z[j], cf_type, dither, s)?.1
            }
            Method::Attention if j == 0 => {
                let ds = train_set
                    .ok_or_else(|| Error::Config("attention needs training data".into()))?;
                let degrees =
                    attention_degrees(&ds.feature_variances(), nr, net.edges(0), ATTENTION_LEVELS)?;
                generate_from_out_degrees(&degrees, nr, s)?
            }
            Method::Attention => generate_structured_random(nl, nr, d_out, s)?,
        };
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub network: NetworkConfig,
    pub method: Method,
    pub train: TrainConfig,
    pub bias_init: f64,
    /// Seeds the pattern and the initial weights; `train.seed` drives the data order.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub history: History,
    pub test_acc: f64,
    pub density: f64,
    pub model: SparseModel,
}

pub fn run_experiment(
    exp: &Experiment,
    train_set: &Dataset,
    val: &Dataset,
    test: &Dataset,
) -> Result<ExperimentResult> {
    let net = &exp.network;
    let patterns = build_patterns(net, exp.method, Some(train_set), exp.seed)?;
    let mut model = init_model(
        patterns,
        net.layer_sizes().to_vec(),
        rng::derive(exp.seed, 1 << 32),
        exp.bias_init,
    )?;
    let mut history = train(&mut model, train_set, val, Some(test), &exp.train)?;
    if exp.method == Method::Prune {
        let rho: Vec<f64> = (0..net.num_junctions())
            .map(|j| net.edges(j) as f64 / (net.left_size(j) * net.right_size(j)) as f64)
            .collect();
        let (_, mut pruned) = prune_threshold(&model, &rho)?;
        let retrain = TrainConfig {
            seed: rng::derive(exp.train.seed, 1),
            ..exp.train.clone()
        };
        let h2 = train(&mut pruned, train_set, val, Some(test), &retrain)?;
        let offset = history.records.len();
        history.records.extend(h2.records.into_iter().map(|mut r| {
            r.epoch += offset;
            r
        }));
        history.diverged = history.diverged.or(h2.diverged);
        model = pruned;
    }
    let edges: usize = model.weights.iter().map(Vec::len).sum();
    let full: usize = net.layer_sizes().windows(2).map(|w| w[0] * w[1]).sum();
    Ok(ExperimentResult {
        test_acc: evaluate(&model, test, 1)?,
        history,
        density: edges as f64 / full as f64,
        model,
    })
}

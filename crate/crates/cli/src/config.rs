//! Run configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sparsepipe::clashfree::CfType;
use sparsepipe::datasets::{
    load_idx, load_mnist, pad_features, pca_reduce, synthetic_dataset, Dataset, Split,
};
use sparsepipe::engine::OptimizerKind;
use sparsepipe::experiment::Method;
use sparsepipe::pipesim::Mode;
use sparsepipe::rng;
use sparsepipe::topology::{junction_summary, NetworkConfig};
use sparsepipe::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub network: NetworkSection,
    #[serde(default)]
    pub sparsity: SparsitySection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub layer_sizes: Vec<usize>,
    /// Fully connected when absent.
    pub out_degrees: Option<Vec<usize>>,
    pub parallelism: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsitySection {
    /// structured, random, attention, prune or clash-free-N[-dither]
    pub method: String,
}

impl Default for SparsitySection {
    fn default() -> Self {
        Self {
            method: "structured".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// adam or sgd
    pub optimizer: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub decay: f64,
    /// Defaults to 1e-4 scaled by the overall density.
    pub l2: Option<f64>,
    pub l1: Vec<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub bias_init: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 1e-5,
            l2: None,
            l1: Vec::new(),
            batch_size: 256,
            epochs: 50,
            bias_init: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// mnist, idx or synthetic
    pub source: String,
    /// MNIST directory with the four canonical IDX files.
    pub dir: Option<PathBuf>,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Tail of the training set held out for validation (idx source).
    pub validation: usize,
    /// Synthetic training samples; validation and test get a quarter each.
    pub samples: usize,
    pub separation: f64,
    /// Reduce features to this many principal components before padding.
    pub pca: Option<usize>,
    /// Zero-pad features to this width; defaults to the input layer size.
    pub pad_to: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: "mnist".into(),
            dir: None,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            validation: 5000,
            samples: 2000,
            separation: 3.0,
            pca: None,
            pad_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    /// Clash-free type used for simulated patterns.
    pub cf_type: u8,
    pub dither: bool,
    /// Extra cycles per junction; zeros when empty.
    pub flush: Vec<usize>,
    /// pipelined or single-input
    pub mode: String,
    pub inputs: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            cf_type: 1,
            dither: false,
            flush: Vec::new(),
            mode: "pipelined".into(),
            inputs: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Out-degree vectors to try; the network's own when empty.
    pub out_degrees: Vec<Vec<usize>>,
    /// Methods to try; the sparsity method when empty.
    pub methods: Vec<String>,
    pub reps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            out_degrees: Vec::new(),
            methods: Vec::new(),
            reps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Fills every defaulted value and checks consistency.
    pub fn resolve(mut self) -> Result<Self> {
        let sizes = &self.network.layer_sizes;
        if sizes.len() < 2 {
            bail!("network.layer_sizes needs at least two layers");
        }
        if self.network.out_degrees.is_none() {
            self.network.out_degrees = Some(sizes[1..].to_vec());
        }
        let net = self.network()?;
        if self.train.l2.is_none() {
            self.train.l2 = Some(1e-4 * junction_summary(&net).density_f64);
        }
        if self.data.pad_to.is_none() {
            self.data.pad_to = Some(sizes[0]);
        }
        if self.pipeline.flush.is_empty() {
            self.pipeline.flush = vec![0; net.num_junctions()];
        }
        let method = self.method()?;
        if matches!(method, Method::ClashFree { .. }) && net.parallelism().is_none() {
            bail!("method {method} needs network.parallelism");
        }
        self.train_config()?.validate()?;
        self.mode()?;
        CfType::from_number(self.pipeline.cf_type)?;
        for m in &self.sweep.methods {
            m.parse::<Method>()?;
        }
        match self.data.source.as_str() {
            "mnist" => {
                if self.data.dir.is_none() {
                    bail!("data.dir is required for the mnist source");
                }
            }
            "idx" => {
                let d = &self.data;
                if d.train_images.is_none()
                    || d.train_labels.is_none()
                    || d.test_images.is_none()
                    || d.test_labels.is_none()
                {
                    bail!("the idx source needs train_images, train_labels, test_images and test_labels");
                }
            }
            "synthetic" => {
                if self.data.samples < 4 {
                    bail!("data.samples must be at least 4");
                }
            }
            s => bail!("unknown data.source {s:?} (mnist, idx or synthetic)"),
        }
        Ok(self)
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let n = &self.network;
        let d = n
            .out_degrees
            .clone()
            .unwrap_or_else(|| n.layer_sizes[1..].to_vec());
        self.network_with(d)
    }

    pub fn network_with(&self, out_degrees: Vec<usize>) -> Result<NetworkConfig> {
        let n = &self.network;
        let mut net = NetworkConfig::new(n.layer_sizes.clone(), out_degrees)?;
        if let Some(z) = &n.parallelism {
            net = net.with_parallelism(z.clone())?;
        }
        Ok(net)
    }

    pub fn method(&self) -> Result<Method> {
        Ok(self.sparsity.method.parse()?)
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.pipeline.mode.as_str() {
            "pipelined" => Ok(Mode::Pipelined),
            "single-input" | "single" => Ok(Mode::SingleInput),
            m => bail!("unknown pipeline.mode {m:?} (pipelined or single-input)"),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let optimizer = match t.optimizer.as_str() {
            "adam" => OptimizerKind::Adam {
                beta1: t.beta1,
                beta2: t.beta2,
                epsilon: t.epsilon,
                decay: t.decay,
            },
            "sgd" => OptimizerKind::Sgd,
            o => bail!("unknown optimizer {o:?} (adam or sgd)"),
        };
        Ok(TrainConfig {
            learning_rate: t.learning_rate,
            optimizer,
            l2: t.l2.unwrap_or(0.0),
            l1: t.l1.clone(),
            batch_size: t.batch_size,
            epochs: t.epochs,
            seed: self.seed,
        })
    }

    pub fn load_data(&self) -> Result<Splits> {
        let d = &self.data;
        let (train, val, test) = match d.source.as_str() {
            "mnist" => load_mnist(d.dir.as_ref().expect("resolved"))?,
            "idx" => {
                let all = load_idx(
                    d.train_images.as_ref().unwrap(),
                    d.train_labels.as_ref().unwrap(),
                )?;
                if d.validation >= all.len() {
                    bail!("validation size {} leaves no training data", d.validation);
                }
                let (train, val) = all.split_tail(d.validation, Split::Val)?;
                let test = load_idx(
                    d.test_images.as_ref().unwrap(),
                    d.test_labels.as_ref().unwrap(),
                )?
                .with_split(Split::Test);
                (train, val, test)
            }
            _ => {
                let sizes = &self.network.layer_sizes;
                let (f, c) = (d.pca.unwrap_or(sizes[0]), *sizes.last().unwrap());
                let make = |n, stream| {
                    synthetic_dataset(n, f, c, d.separation, rng::derive(self.seed, stream))
                };
                let held = (d.samples / 4).max(1);
                (
                    make(d.samples, 0)?,
                    make(held, 1)?.with_split(Split::Val),
                    make(held, 2)?.with_split(Split::Test),
                )
            }
        };
        let (train, val, test) = match d.pca {
            Some(k) if k < train.n_features() => {
                let (_, mut v) = pca_reduce(&train, &[&val, &test], k)?;
                let test = v.pop().unwrap();
                let val = v.pop().unwrap();
                let train = v.pop().unwrap();
                (train, val, test)
            }
            _ => (train, val, test),
        };
        let width = d.pad_to.unwrap_or(self.network.layer_sizes[0]);
        let pad = |ds: Dataset| -> Result<Dataset> {
            if ds.n_features() == width {
                Ok(ds)
            } else {
                Ok(pad_features(ds, width, 0.0)?)
            }
        };
        Ok(Splits {
            train: pad(train)?,
            val: pad(val)?,
            test: pad(test)?,
        })
    }
}

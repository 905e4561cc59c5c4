use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::{Dataset, Split};
use crate::rng::seeded;
use crate::{Error, Result};

/// Unit-variance Gaussian clusters whose centres are pairwise `separation` apart.
/// Two classes sit at ±separation/2 on the first axis; more classes sit at
/// separation/√2 on their own axis, which needs `n_classes <= n_features`.
pub fn synthetic_dataset(
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 || n_features == 0 || n_classes == 0 {
        return Err(Error::Config(
            "synthetic dataset sizes must be positive".into(),
        ));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::Config(format!("invalid separation {separation}")));
    }
    if n_classes > 2 && n_classes > n_features {
        return Err(Error::Config(format!(
            "{n_classes} classes need at least as many features, got {n_features}"
        )));
    }
    let scale = separation / std::f64::consts::SQRT_2;
    let mut rng = seeded(seed);
    let mut features = Vec::with_capacity(n_samples * n_features);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let class = rng.random_range(0..n_classes);
        for f in 0..n_features {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let centre = if n_classes == 2 {
                if f == 0 {
                    separation * (class as f64 - 0.5)
                } else {
                    0.0
                }
            } else if class == f {
                scale
            } else {
                0.0
            };
            features.push(centre + noise);
        }
        labels.push(class);
    }
    Dataset::new(features, n_features, labels, n_classes, Split::Train)
}

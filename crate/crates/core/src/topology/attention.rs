use rand::seq::index;

use super::{DegreeKind, JunctionPattern};
use crate::rng::seeded;
use crate::{Error, Result};

/// Per-left-neuron out-degrees driven by input feature variance.
///
/// Neurons are ranked by variance (ties by index) and cut into `levels` groups of
/// equal size. Group `g` (0 = lowest variance) gets weight `g + 1`; degrees are the
/// weights scaled to `target_edges` and floored, with the remainder handed out one
/// edge at a time from the highest-variance neuron down. Degrees never exceed
/// `n_right`. If every variance is equal a single level is used.
pub fn attention_degrees(
    variances: &[f64],
    n_right: usize,
    target_edges: usize,
    levels: usize,
) -> Result<Vec<usize>> {
    let n_left = variances.len();
    if n_left == 0 || n_right == 0 {
        return Err(Error::Config(
            "attention degrees need nonempty layers".into(),
        ));
    }
    if levels == 0 {
        return Err(Error::Config("need at least one attention level".into()));
    }
    if target_edges > n_left * n_right {
        return Err(Error::Config(format!(
            "target of {target_edges} edges exceeds {n_left}x{n_right}"
        )));
    }
    if let Some(i) = variances.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config(format!(
            "variance {i} is not a finite nonnegative value"
        )));
    }

    let mut order: Vec<usize> = (0..n_left).collect();
    order.sort_by(|&a, &b| variances[a].total_cmp(&variances[b]).then(a.cmp(&b)));

    let lo = variances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = variances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let levels = if hi == lo { 1 } else { levels.min(n_left) };

    // weight by rank position
    let weights: Vec<usize> = (0..n_left).map(|p| p * levels / n_left + 1).collect();
    let total_weight: usize = weights.iter().sum();

    let mut by_rank: Vec<usize> = weights
        .iter()
        .map(|&w| (target_edges * w / total_weight).min(n_right))
        .collect();
    let mut remaining = target_edges - by_rank.iter().sum::<usize>();
    let clamped = by_rank
        .iter()
        .zip(&weights)
        .any(|(&d, &w)| d < target_edges * w / total_weight);
    if clamped {
        log::warn!("attention degrees clamped at {n_right}; level ratios adjusted");
    }
    while remaining > 0 {
        for d in by_rank.iter_mut().rev() {
            if remaining == 0 {
                break;
            }
            if *d < n_right {
                *d += 1;
                remaining -= 1;
            }
        }
    }

    let mut degrees = vec![0; n_left];
    for (rank, &neuron) in order.iter().enumerate() {
        degrees[neuron] = by_rank[rank];
    }
    Ok(degrees)
}

/// Variable-degree pattern where left neuron `k` connects to `out_degrees[k]`
/// distinct right neurons chosen uniformly.
pub fn generate_from_out_degrees(
    out_degrees: &[usize],
    n_right: usize,
    seed: u64,
) -> Result<JunctionPattern> {
    let n_left = out_degrees.len();
    let mut rng = seeded(seed);
    let mut rows = vec![Vec::new(); n_right];
    for (k, &d) in out_degrees.iter().enumerate() {
        if d > n_right {
            return Err(Error::Config(format!(
                "left neuron {k}: out-degree {d} exceeds {n_right}"
            )));
        }
        for j in index::sample(&mut rng, n_right, d) {
            rows[j].push(k);
        }
    }
    JunctionPattern::from_rows(n_left, n_right, &rows, DegreeKind::Variable)
}

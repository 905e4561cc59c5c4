use std::fmt;

use rand::seq::SliceRandom;

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    class_count: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        class_count: usize,
        split: Split,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config("dataset has no samples".into()));
        }
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::Config(format!(
                "{} feature values do not form {} rows of width {n_features}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l >= class_count) {
            return Err(Error::Config(format!(
                "sample {i}: label {} >= class count {class_count}",
                labels[i]
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "sample {}: non-finite feature",
                i / n_features
            )));
        }
        Ok(Self {
            features,
            n_features,
            labels,
            class_count,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>, split: Split) -> Result<Self> {
        let f = self.n_features;
        Self::new(
            self.features[range.start * f..range.end * f].to_vec(),
            f,
            self.labels[range].to_vec(),
            self.class_count,
            split,
        )
    }

    /// Moves the last `n_tail` rows into a second dataset.
    pub fn split_tail(mut self, n_tail: usize, tail_split: Split) -> Result<(Self, Self)> {
        if n_tail == 0 || n_tail >= self.len() {
            return Err(Error::Config(format!(
                "cannot hold out {n_tail} of {} samples",
                self.len()
            )));
        }
        let keep = self.len() - n_tail;
        let tail_features = self.features.split_off(keep * self.n_features);
        let tail_labels = self.labels.split_off(keep);
        let tail = Self {
            features: tail_features,
            n_features: self.n_features,
            labels: tail_labels,
            class_count: self.class_count,
            split: tail_split,
        };
        Ok((self, tail))
    }

    /// Seeded random split into (first, second) with `n_second` rows in the second part.
    pub fn split_random(&self, n_second: usize, seed: u64) -> Result<(Self, Self)> {
        if n_second == 0 || n_second >= self.len() {
            return Err(Error::Config(format!(
                "cannot hold out {n_second} of {} samples",
                self.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut seeded(seed));
        let (b, a) = idx.split_at(n_second);
        Ok((self.select(a, self.split)?, self.select(b, Split::Val)?))
    }

    pub fn select(&self, rows: &[usize], split: Split) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.sample(r));
        }
        Self::new(
            features,
            self.n_features,
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.class_count,
            split,
        )
    }

    /// Per-feature population variance.
    pub fn feature_variances(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let f = self.n_features;
        let mut mean = vec![0.0; f];
        for i in 0..self.len() {
            for (m, x) in mean.iter_mut().zip(self.sample(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for i in 0..self.len() {
            for ((v, x), m) in var.iter_mut().zip(self.sample(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        var
    }
}

/// Appends constant columns until each row has `target_width` features.
pub fn pad_features(ds: Dataset, target_width: usize, value: f64) -> Result<Dataset> {
    let width = ds.n_features;
    if target_width < width {
        return Err(Error::Config(format!(
            "cannot pad {width} features down to {target_width}"
        )));
    }
    if target_width == width {
        return Ok(ds);
    }
    let mut features = Vec::with_capacity(ds.len() * target_width);
    for i in 0..ds.len() {
        features.extend_from_slice(ds.sample(i));
        features.extend(std::iter::repeat_n(value, target_width - width));
    }
    Dataset::new(features, target_width, ds.labels, ds.class_count, ds.split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            2,
            vec![0, 1, 1],
            2,
            Split::Train,
        )
        .unwrap()
    }

    #[test]
    fn validates_shape_and_labels() {
        assert!(Dataset::new(vec![0.0; 5], 2, vec![0, 1, 0], 2, Split::Train).is_err());
        assert!(Dataset::new(vec![0.0; 6], 2, vec![0, 2, 0], 2, Split::Train).is_err());
        assert!(Dataset::new(vec![], 2, vec![], 2, Split::Train).is_err());
        assert!(Dataset::new(vec![f64::NAN, 0.0], 2, vec![0], 2, Split::Train).is_err());
    }

    #[test]
    fn padding_keeps_original_columns() {
        let ds = tiny();
        let padded = pad_features(ds.clone(), 4, 0.0).unwrap();
        assert_eq!(padded.n_features(), 4);
        for i in 0..3 {
            assert_eq!(&padded.sample(i)[..2], ds.sample(i));
            assert_eq!(&padded.sample(i)[2..], &[0.0, 0.0]);
        }
        assert_eq!(padded.labels(), ds.labels());
        assert_eq!(pad_features(ds.clone(), 2, 0.0).unwrap(), ds);
        assert!(pad_features(ds, 1, 0.0).is_err());
    }

    #[test]
    fn tail_split() {
        let (a, b) = tiny().split_tail(1, Split::Val).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(b.len(), 1);
        assert_eq!(b.sample(0), &[0.5, 0.6]);
        assert_eq!(b.split, Split::Val);
    }

    #[test]
    fn random_split_is_disjoint_and_seeded() {
        let ds = Dataset::new(
            (0..20).map(f64::from).collect(),
            1,
            vec![0; 20],
            1,
            Split::Train,
        )
        .unwrap();
        let (a, b) = ds.split_random(5, 3).unwrap();
        let (a2, b2) = ds.split_random(5, 3).unwrap();
        assert_eq!((a.clone(), b.clone()), (a2, b2));
        let mut all: Vec<f64> = a.features().iter().chain(b.features()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..20).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn variances() {
        let v = tiny().feature_variances();
        let expected = ((0.1f64 - 0.3).powi(2) + 0.0 + (0.5f64 - 0.3).powi(2)) / 3.0;
        assert!((v[0] - expected).abs() < 1e-15);
    }
}

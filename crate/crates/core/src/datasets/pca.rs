use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::dataset::Dataset;
use crate::{Error, Result};

/// Projection onto the top principal components of a training split.
#[derive(Debug, Clone)]
pub struct Pca {
    mean: DVector<f64>,
    /// k × n_features, rows orthonormal, ordered by decreasing eigenvalue.
    components: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    total_variance: f64,
}

impl Pca {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        let f = train.n_features();
        if k == 0 || k > f {
            return Err(Error::Config(format!("PCA rank {k} outside 1..={f}")));
        }
        let n = train.len();
        let x = DMatrix::from_row_slice(n, f, train.features());
        let mean = DVector::from_iterator(f, x.column_iter().map(|c| c.mean()));
        let mut centered = x;
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.tr_mul(&centered) / n as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..f).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let total_variance = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut components = DMatrix::zeros(k, f);
        for (r, &c) in order.iter().take(k).enumerate() {
            components.set_row(r, &eig.eigenvectors.column(c).transpose());
        }
        Ok(Self {
            mean,
            components,
            eigenvalues: order.iter().map(|&c| eig.eigenvalues[c].max(0.0)).collect(),
            total_variance,
        })
    }

    pub fn rank(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    /// All eigenvalues of the training covariance, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Fraction of training variance captured by the kept components.
    pub fn explained_variance(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 1.0;
        }
        self.eigenvalues[..self.rank()].iter().sum::<f64>() / self.total_variance
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(row) - &self.mean;
        (&self.components * x).iter().copied().collect()
    }

    pub fn reconstruct(&self, reduced: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(reduced);
        (self.components.tr_mul(&y) + &self.mean)
            .iter()
            .copied()
            .collect()
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.mean.len() {
            return Err(Error::Config(format!(
                "PCA fitted on {} features, dataset has {}",
                self.mean.len(),
                ds.n_features()
            )));
        }
        let mut features = Vec::with_capacity(ds.len() * self.rank());
        for i in 0..ds.len() {
            features.extend(self.project(ds.sample(i)));
        }
        Dataset::new(
            features,
            self.rank(),
            ds.labels().to_vec(),
            ds.class_count(),
            ds.split,
        )
    }
}

/// Fits a rank-`k` projection on `train` and applies it to `train` and every dataset in `others`.
pub fn pca_reduce(train: &Dataset, others: &[&Dataset], k: usize) -> Result<(Pca, Vec<Dataset>)> {
    let pca = Pca::fit(train, k)?;
    let mut out = vec![pca.apply(train)?];
    for ds in others {
        out.push(pca.apply(ds)?);
    }
    Ok((pca, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synthetic_dataset, Split};

    #[test]
    fn full_rank_is_lossless() {
        let ds = synthetic_dataset(60, 6, 3, 2.0, 4).unwrap();
        let pca = Pca::fit(&ds, 6).unwrap();
        for i in 0..ds.len() {
            let back = pca.reconstruct(&pca.project(ds.sample(i)));
            for (a, b) in back.iter().zip(ds.sample(i)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        assert!((pca.explained_variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_two_data() {
        let mut features = Vec::new();
        for i in 0..50 {
            let (s, t) = ((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos());
            features.extend([s + t, s - t, 2.0 * s, 0.5 * t, s]);
        }
        let ds = Dataset::new(features, 5, vec![0; 50], 1, Split::Train).unwrap();
        let pca = Pca::fit(&ds, 2).unwrap();
        assert!(pca.explained_variance() > 1.0 - 1e-10);
        let c = pca.components();
        let gram = c * c.transpose();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn invalid_rank() {
        let ds = synthetic_dataset(10, 3, 2, 1.0, 0).unwrap();
        assert!(Pca::fit(&ds, 0).is_err());
        assert!(Pca::fit(&ds, 4).is_err());
    }

    #[test]
    fn applies_to_other_splits() {
        let ds = synthetic_dataset(40, 4, 2, 1.0, 1).unwrap();
        let other = synthetic_dataset(10, 4, 2, 1.0, 2)
            .unwrap()
            .with_split(Split::Test);
        let (_, out) = pca_reduce(&ds, &[&other], 2).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].n_features(), 2);
        assert_eq!(out[1].split, Split::Test);
    }
}

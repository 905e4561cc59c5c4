use super::model::SparseModel;
use crate::{Error, Result};

/// Uniform bins over `[lo, hi)` plus explicit out-of-range counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "invalid histogram: {bins} bins over [{lo}, {hi})"
            )));
        }
        let mut h = Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        };
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if v < lo {
                h.underflow += 1;
            } else if v >= hi {
                h.overflow += 1;
            } else {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                h.counts[b] += 1;
            }
        }
        Ok(h)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Lower edge of bin `b`.
    pub fn bin_start(&self, b: usize) -> f64 {
        self.lo + (self.hi - self.lo) * b as f64 / self.counts.len() as f64
    }
}

/// One histogram of weight values per junction.
pub fn weight_histogram(
    model: &SparseModel,
    bins: usize,
    range: (f64, f64),
) -> Result<Vec<Histogram>> {
    model
        .weights
        .iter()
        .map(|w| Histogram::new(w, bins, range.0, range.1))
        .collect()
}

/// Excess kurtosis; larger values mean more mass near the mean and in the tails.
pub fn kurtosis(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in values {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::JunctionPattern;

    #[test]
    fn zeros_land_in_one_bin() {
        let m = SparseModel::new(
            vec![3, 2],
            vec![JunctionPattern::fully_connected(3, 2)],
            vec![vec![0.0; 6]],
            vec![vec![0.0; 2]],
        )
        .unwrap();
        for bins in [1, 2, 7, 100] {
            let h = &weight_histogram(&m, bins, (-1.0, 1.0)).unwrap()[0];
            let b = h.counts.iter().position(|&c| c > 0).unwrap();
            assert_eq!(h.counts[b], 6);
            assert!(h.bin_start(b) <= 0.0);
        }
    }

    #[test]
    fn single_bin_and_overflow() {
        let h = Histogram::new(&[-2.0, -0.5, 0.0, 0.99, 1.0, 3.0], 1, -1.0, 1.0).unwrap();
        assert_eq!(h.counts, vec![3]);
        assert_eq!((h.underflow, h.overflow), (1, 2));
        assert_eq!(h.total(), 6);
        assert!(Histogram::new(&[], 0, 0.0, 1.0).is_err());
        assert!(Histogram::new(&[], 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn kurtosis_reference_values() {
        // two-point distribution has excess kurtosis -2
        assert!((kurtosis(&[1.0, -1.0, 1.0, -1.0]) + 2.0).abs() < 1e-12);
        // uniform over many points approaches -1.2
        let u: Vec<f64> = (0..10000).map(|i| i as f64).collect();
        assert!((kurtosis(&u) + 1.2).abs() < 1e-3);
    }
}

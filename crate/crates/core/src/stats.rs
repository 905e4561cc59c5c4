//! Repetition statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// Half-width of the two-sided 90% Student-t confidence interval; NaN below two samples.
    pub ci90: f64,
}

impl Summary {
    pub fn low(&self) -> f64 {
        self.mean - self.ci90
    }

    pub fn high(&self) -> f64 {
        self.mean + self.ci90
    }

    /// True when the two 90% intervals share no point.
    pub fn disjoint(&self, other: &Summary) -> bool {
        self.high() < other.low() || other.high() < self.low()
    }
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            std: f64::NAN,
            ci90: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary {
            n,
            mean,
            std: f64::NAN,
            ci90: f64::NAN,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    Summary {
        n,
        mean,
        std,
        ci90: t.inverse_cdf(0.95) * std / (n as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantiles() {
        // t_{0.95} with 4 degrees of freedom is 2.131847
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((s.ci90 - 2.131847 * 2.5f64.sqrt() / 5f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(summarize(&[]).mean.is_nan());
        let s = summarize(&[0.7]);
        assert_eq!(s.mean, 0.7);
        assert!(s.ci90.is_nan());
        assert_eq!(summarize(&[2.0, 2.0, 2.0]).ci90, 0.0);
    }

    #[test]
    fn disjointness() {
        let a = summarize(&[0.90, 0.91, 0.92]);
        let b = summarize(&[0.95, 0.96, 0.97]);
        assert!(a.disjoint(&b));
        assert!(!a.disjoint(&a));
    }
}

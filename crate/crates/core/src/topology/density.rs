use num_integer::Integer;
use num_rational::Ratio;

/// One achievable junction density with the smallest degree pair realising it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibleDensity {
    pub density: Ratio<u64>,
    pub out_degree: usize,
    pub in_degree: usize,
}

/// All densities a structured junction between `n_left` and `n_right` neurons can
/// take. There are exactly `gcd(n_left, n_right)` of them, `k / gcd` for `k = 1..=gcd`.
pub fn enumerate_densities(n_left: usize, n_right: usize) -> Vec<FeasibleDensity> {
    assert!(n_left > 0 && n_right > 0, "layer sizes must be positive");
    let g = n_left.gcd(&n_right);
    (1..=g)
        .map(|k| FeasibleDensity {
            density: Ratio::new(k as u64, g as u64),
            out_degree: k * (n_right / g),
            in_degree: k * (n_left / g),
        })
        .collect()
}
